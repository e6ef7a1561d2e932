"""Dataset discovery, linting, deterministic splitting, and trainer layout.

A dataset is a directory of ``.jpg`` images (any case), each paired with a
label file of the same name and a ``.txt`` extension.  Scanning never fails
on a bad image; every per-image problem is recorded and surfaced by
:func:`validate_dataset` so a whole dataset can be linted in one pass.
"""

from __future__ import annotations

import math
import random
import shutil
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .annotations import (
    CenterBox,
    LabeledImage,
    box_fits_image,
    check_yolo_text,
    serialize_yolo_annotation,
)

JPEG_MAGIC = b"\xff\xd8\xff"

# issue kinds reported by validate_dataset
BAD_MAGIC = "bad-magic"
MISSING_LABEL = "missing-label"
PARSE_ERROR = "parse-error"
CLASS_RANGE = "class-range"
COORD_RANGE = "coord-range"
ZERO_AREA = "zero-area"
DUPLICATE_ID = "duplicate-id"
UNREADABLE_IMAGE = "unreadable-image"


@dataclass
class ImageRecord:
    """One discovered image: identity, files, parsed boxes, and any problems."""

    id: str
    image_path: Path
    label_path: Path | None
    width: int
    height: int
    boxes: list[CenterBox] = field(default_factory=list)
    issues: list[tuple[str, str]] = field(default_factory=list)  # (kind, detail)

    def to_labeled_image(self) -> LabeledImage:
        return LabeledImage(self.id, self.width, self.height, list(self.boxes))


@dataclass
class DatasetManifest:
    root: Path
    classes: list[str]
    images: list[ImageRecord]

    def __post_init__(self):
        if not self.classes:
            raise ValueError("class list is empty")
        if len(set(self.classes)) != len(self.classes) or not all(self.classes):
            raise ValueError(f"class names must be unique and non-empty: {self.classes}")


@dataclass
class ValidationReport:
    issues: list[tuple[str, str, str]]  # (image id or path, kind, detail)

    @property
    def counts(self) -> dict[str, int]:
        return dict(Counter(kind for _, kind, _ in self.issues))

    @property
    def passed(self) -> bool:
        return not self.issues

    def __str__(self) -> str:
        if self.passed:
            return "OK: no issues found"
        lines = [f"{ident}: {kind}: {detail}" for ident, kind, detail in self.issues]
        lines.append(f"{len(self.issues)} issue(s): "
                     + ", ".join(f"{k}={v}" for k, v in sorted(self.counts.items())))
        return "\n".join(lines)


@dataclass
class SplitResult:
    train: list[str]
    test: list[str]
    seed: int
    train_pct: float


@dataclass
class LayoutPaths:
    project_dir: Path
    images_dir: Path
    train_list: Path
    test_list: Path
    backup_dir: Path


def _label_path_for(image_path: Path) -> Path:
    return image_path.with_suffix(".txt")


def scan_dataset(root: Path | str, classes: list[str]) -> DatasetManifest:
    """Discover every .jpg under ``root`` (recursively, case-insensitive),
    pair labels, parse annotations, and read dimensions from the image header.

    Per-image problems do not raise; they are recorded on the record for
    :func:`validate_dataset`.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root is not a readable directory: {root}")
    records = []
    paths = sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() == ".jpg")
    class_count = len(classes)
    for image_path in paths:
        record = ImageRecord(id=image_path.stem, image_path=image_path,
                             label_path=None, width=0, height=0)
        try:
            with Image.open(image_path) as im:
                record.width, record.height = im.size
        except (UnidentifiedImageError, OSError) as exc:
            record.issues.append((UNREADABLE_IMAGE, f"cannot read dimensions: {exc}"))
        label_path = _label_path_for(image_path)
        if not label_path.is_file():
            record.issues.append((MISSING_LABEL, f"no label file {label_path.name}"))
        else:
            record.label_path = label_path
            text = label_path.read_text(encoding="utf-8")
            boxes, errors = check_yolo_text(text, class_count)
            record.boxes = boxes
            for err in errors:
                kind = {"class-range": CLASS_RANGE, "coord-range": COORD_RANGE,
                        "zero-area": ZERO_AREA}.get(err.kind, PARSE_ERROR)
                record.issues.append((kind, str(err)))
            if record.width >= 1:
                for i, box in enumerate(boxes, start=1):
                    if not box_fits_image(box, record.width, record.height):
                        record.issues.append(
                            (COORD_RANGE, f"box {i} extends outside the image"))
        records.append(record)
    return DatasetManifest(root=root, classes=list(classes), images=records)


def validate_dataset(manifest: DatasetManifest) -> ValidationReport:
    """Lint a manifest: JPEG magic, label pairing, parse and range problems,
    zero-area boxes, duplicate ids.  Zero-object label files are valid."""
    issues: list[tuple[str, str, str]] = []
    seen: dict[str, Path] = {}
    for record in sorted(manifest.images, key=lambda r: (r.id, str(r.image_path))):
        try:
            with open(record.image_path, "rb") as fh:
                magic = fh.read(len(JPEG_MAGIC))
            if magic != JPEG_MAGIC:
                issues.append((record.id, BAD_MAGIC,
                               f"{record.image_path.name} does not start with JPEG magic bytes"))
        except OSError as exc:
            issues.append((record.id, UNREADABLE_IMAGE, str(exc)))
        if record.id in seen:
            issues.append((record.id, DUPLICATE_ID,
                           f"{record.image_path} duplicates {seen[record.id]}"))
        else:
            seen[record.id] = record.image_path
        for kind, detail in record.issues:
            issues.append((record.id, kind, detail))
    return ValidationReport(issues=issues)


def split_dataset(manifest: DatasetManifest, train_pct: float, seed: int) -> SplitResult:
    """Deterministic two-way split: ids are sorted, then shuffled by a seeded
    Fisher-Yates permutation; the first floor(train_pct * N) go to train.
    The test set is never left empty."""
    if not (0.0 < train_pct < 1.0):
        raise ValueError(f"train_pct must be in (0, 1), got {train_pct}")
    ids = sorted(r.id for r in manifest.images)
    n = len(ids)
    if n < 2:
        raise ValueError(f"need at least 2 images to split, have {n}")
    rng = random.Random(seed)
    for i in range(n - 1, 0, -1):
        j = rng.randrange(i + 1)
        ids[i], ids[j] = ids[j], ids[i]
    n_train = min(math.floor(train_pct * n), n - 1)
    return SplitResult(train=ids[:n_train], test=ids[n_train:],
                       seed=seed, train_pct=train_pct)


def materialize_layout(
    manifest: DatasetManifest,
    split: SplitResult,
    out_root: Path | str,
    name: str,
    force: bool = False,
) -> LayoutPaths:
    """Copy the dataset into the folder structure the Darknet trainer expects.

    Creates ``<out_root>/<name>/images/`` with images and label files side by
    side, ``train.txt``/``test.txt`` listing absolute image paths in split
    order, and an empty ``backup/`` directory for training checkpoints.
    Refuses to overwrite an existing layout unless ``force`` is given.
    """
    out_root = Path(out_root).resolve()  # .data files need absolute paths
    project_dir = out_root / name
    layout = LayoutPaths(
        project_dir=project_dir,
        images_dir=project_dir / "images",
        train_list=project_dir / "train.txt",
        test_list=project_dir / "test.txt",
        backup_dir=project_dir / "backup",
    )
    existing = [p for p in (layout.images_dir, layout.train_list,
                            layout.test_list, layout.backup_dir) if p.exists()]
    if existing and not force:
        raise FileExistsError(f"layout exists: {existing[0]}")
    bad = [r.id for r in manifest.images if r.issues or r.label_path is None]
    if bad:
        raise ValueError(
            f"manifest has unresolved issues for: {', '.join(sorted(bad)[:5])}"
            " (run validation first)")
    by_id = {r.id: r for r in manifest.images}
    missing = [i for i in split.train + split.test if i not in by_id]
    if missing:
        raise ValueError(f"split references unknown ids: {missing[:5]}")

    layout.images_dir.mkdir(parents=True, exist_ok=True)
    layout.backup_dir.mkdir(parents=True, exist_ok=True)
    for record in manifest.images:
        shutil.copyfile(record.image_path, layout.images_dir / f"{record.id}.jpg")
        (layout.images_dir / f"{record.id}.txt").write_text(
            serialize_yolo_annotation(record.boxes), encoding="utf-8")
    for list_path, ids in ((layout.train_list, split.train),
                           (layout.test_list, split.test)):
        list_path.write_text(
            "".join(f"{(layout.images_dir / f'{i}.jpg').resolve()}\n" for i in ids),
            encoding="utf-8")
    return layout
