"""Darknet artifact rendering: ``.names``, ``.data``, adapted ``.cfg``, and
the train/evaluate/predict command lines.

Commands are emitted as text only; nothing in this package ever runs the
Darknet binary.  The stock YOLOv3 config ships with the package as a
template; :func:`render_cfg` adapts it to a class count by rewriting the
``classes`` entry of every ``[yolo]`` section and the ``filters`` entry of
the convolutional section directly before it (3 anchors per scale, each
predicting 4 box coordinates + 1 objectness + C class scores, hence
``filters = (C + 5) * 3``), plus the ``[net]`` hyper-parameters.  All other
lines pass through byte-for-byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dataset import LayoutPaths

DARKNET_BIN = "darknet"

_SAFE_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


@dataclass
class TrainingHyper:
    batch: int = 64
    subdivisions: int = 16
    max_batches: int = 6000
    steps: tuple[int, int] = (4800, 5400)
    width: int = 416
    height: int = 416
    pretrained_weights: Path | None = None

    def __post_init__(self):
        if self.batch < 1 or self.subdivisions < 1:
            raise ValueError("batch and subdivisions must be positive")
        if self.batch % self.subdivisions != 0:
            raise ValueError(
                f"subdivisions ({self.subdivisions}) must divide batch ({self.batch})")
        if self.max_batches < 1:
            raise ValueError("max_batches must be positive")
        s0, s1 = self.steps
        if not (s0 < s1 < self.max_batches):
            raise ValueError(
                f"steps must be strictly increasing and below max_batches: "
                f"{self.steps} vs {self.max_batches}")
        for side in (self.width, self.height):
            if side < 32 or side % 32 != 0:
                raise ValueError(f"width/height must be multiples of 32 >= 32, got {side}")


def default_hyper(class_count: int, pretrained_weights: Path | None = None) -> TrainingHyper:
    """Community-default hyper-parameters scaled to the class count."""
    max_batches = max(6000, 2000 * class_count)
    return TrainingHyper(
        max_batches=max_batches,
        steps=(int(0.8 * max_batches), int(0.9 * max_batches)),
        pretrained_weights=pretrained_weights,
    )


@dataclass
class ProjectConfig:
    """The four project parameters (plus seed/output/hyper-parameters)."""

    name: str
    dataset_path: Path
    classes: list[str]
    train_pct: float
    seed: int = 0
    output_root: Path = Path(".")
    hyper: TrainingHyper | None = None

    def __post_init__(self):
        if not _SAFE_NAME.match(self.name):
            raise ValueError(f"project name must be filesystem-safe, got {self.name!r}")
        if not self.classes:
            raise ValueError("class list is empty")
        if not (0.0 < self.train_pct < 1.0):
            raise ValueError(f"train_pct must be in (0, 1), got {self.train_pct}")
        self.dataset_path = Path(self.dataset_path)
        self.output_root = Path(self.output_root)
        if self.hyper is None:
            self.hyper = default_hyper(len(self.classes))


def load_default_template() -> str:
    """The vendored stock YOLOv3 config (80 classes, untouched anchors)."""
    return (resources.files(__package__) / "templates" / "yolov3.cfg").read_text(
        encoding="utf-8")


def render_names(classes: list[str]) -> str:
    """``.names`` content: one class per line, order preserved."""
    if not classes:
        raise ValueError("class list is empty")
    return "".join(f"{c}\n" for c in classes)


def names_path(project: ProjectConfig, layout: LayoutPaths) -> Path:
    return layout.project_dir / f"{project.name}.names"


def render_data(project: ProjectConfig, layout: LayoutPaths) -> str:
    """``.data`` content: the five keys Darknet reads, absolute paths only."""
    paths = {
        "train": layout.train_list,
        "valid": layout.test_list,
        "names": names_path(project, layout),
        "backup": layout.backup_dir,
    }
    for key, p in paths.items():
        if not Path(p).is_absolute():
            raise ValueError(f"paths must be absolute: {key} = {p}")
    return (
        f"classes = {len(project.classes)}\n"
        f"train = {paths['train']}\n"
        f"valid = {paths['valid']}\n"
        f"names = {paths['names']}\n"
        f"backup = {paths['backup']}\n"
    )


def _key_of(line: str) -> str | None:
    stripped = line.strip()
    if not stripped or stripped.startswith("#") or "=" not in stripped:
        return None
    return stripped.split("=", 1)[0].strip()


def render_cfg(template: str, class_count: int, hyper: TrainingHyper) -> str:
    """Adapt a YOLOv3-style config template to a class count and hyper set.

    Rewrites, and only rewrites: ``classes`` in each ``[yolo]`` section,
    ``filters`` in the ``[convolutional]`` section immediately before each
    ``[yolo]``, and batch/subdivisions/width/height/max_batches/steps in
    ``[net]``.  Idempotent for a fixed (class count, hyper).
    """
    if class_count < 1:
        raise ValueError(f"class_count must be >= 1, got {class_count}")
    lines = template.split("\n")
    sections: list[tuple[str, int]] = []  # (name, header line index)
    for i, line in enumerate(lines):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            sections.append((s, i))
    yolo_idx = [k for k, (name, _) in enumerate(sections) if name == "[yolo]"]
    if not yolo_idx:
        raise ValueError("template has no [yolo] sections")
    for k in yolo_idx:
        if k == 0 or sections[k - 1][0] != "[convolutional]":
            raise ValueError(
                f"[yolo] section at line {sections[k][1] + 1} is not immediately "
                "preceded by a [convolutional] section")

    def section_range(k: int) -> tuple[int, int]:
        start = sections[k][1] + 1
        end = sections[k + 1][1] if k + 1 < len(sections) else len(lines)
        return start, end

    def rewrite(k: int, values: dict[str, str]) -> None:
        start, end = section_range(k)
        pending = dict(values)
        for i in range(start, end):
            key = _key_of(lines[i])
            if key in pending:
                lines[i] = f"{key}={pending.pop(key)}"
        if pending:
            name, header = sections[k]
            raise ValueError(
                f"template {name} section at line {header + 1} lacks "
                f"key(s): {', '.join(sorted(pending))}")

    if sections[0][0] != "[net]":
        raise ValueError("template does not start with a [net] section")
    rewrite(0, {
        "batch": str(hyper.batch),
        "subdivisions": str(hyper.subdivisions),
        "width": str(hyper.width),
        "height": str(hyper.height),
        "max_batches": str(hyper.max_batches),
        "steps": f"{hyper.steps[0]},{hyper.steps[1]}",
    })
    filters = (class_count + 5) * 3
    for k in yolo_idx:
        rewrite(k - 1, {"filters": str(filters)})
        rewrite(k, {"classes": str(class_count)})
    return "\n".join(lines)


def cfg_path(project: ProjectConfig, layout: LayoutPaths) -> Path:
    return layout.project_dir / f"{project.name}.cfg"


def data_path(project: ProjectConfig, layout: LayoutPaths) -> Path:
    return layout.project_dir / f"{project.name}.data"


def emit_commands(project: ProjectConfig, layout: LayoutPaths) -> list[str]:
    """Copy-pasteable darknet command lines: train, evaluate (mAP over the
    test list), and single-image prediction with an ``<IMAGE>`` placeholder."""
    data = data_path(project, layout)
    cfg = cfg_path(project, layout)
    weights = layout.backup_dir / f"{project.name}_final.weights"
    train = f"{DARKNET_BIN} detector train {data} {cfg}"
    if project.hyper.pretrained_weights is not None:
        train += f" {project.hyper.pretrained_weights}"
    return [
        train,
        f"{DARKNET_BIN} detector map {data} {cfg} {weights}",
        f"{DARKNET_BIN} detector test {data} {cfg} {weights} <IMAGE>",
    ]


def write_artifacts(project: ProjectConfig, layout: LayoutPaths,
                    template: str | None = None) -> dict[str, Path]:
    """Render and write .names/.data/.cfg into the project directory."""
    if template is None:
        template = load_default_template()
    targets = {
        "names": (names_path(project, layout), render_names(project.classes)),
        "data": (data_path(project, layout), render_data(project, layout)),
        "cfg": (cfg_path(project, layout),
                render_cfg(template, len(project.classes), project.hyper)),
    }
    out = {}
    for kind, (path, text) in targets.items():
        path.write_text(text, encoding="utf-8")
        out[kind] = path
    return out
