"""Command-line pipeline driver.

One subcommand per pipeline stage plus an end-to-end ``prepare``.  A project
is described by a flat ``key = value`` text file with four mandatory keys::

    name      = stomata
    dataset   = /data/stomata
    classes   = stoma
    train_pct = 0.9

plus optional ``seed``, ``output``, and training overrides (``batch``,
``subdivisions``, ``width``, ``height``, ``max_batches``, ``steps``,
``pretrained_weights``).  Exit codes are stable for scripting: 0 success,
1 domain failure (validation or evaluation found problems), 2 usage or I/O
error.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from pathlib import Path

from PIL import Image

from .annotations import (
    AnnotationError,
    LabeledImage,
    parse_voc_annotation,
    parse_yolo_annotation,
    serialize_yolo_annotation,
    voc_to_yolo,
)
from .augment import augment_dataset, default_plan
from .darknet import (
    ProjectConfig,
    TrainingHyper,
    default_hyper,
    emit_commands,
    write_artifacts,
)
from .dataset import (
    LayoutPaths,
    materialize_layout,
    scan_dataset,
    split_dataset,
    validate_dataset,
)
from .evaluation import (
    evaluate,
    format_report,
    parse_detections,
    report_to_csv,
    select_best_checkpoint,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

PROJECT_KEYS = ("name", "dataset", "classes", "train_pct")
OPTIONAL_KEYS = ("seed", "output", "batch", "subdivisions", "width", "height",
                 "max_batches", "steps", "pretrained_weights")


class UsageError(Exception):
    pass


def _echo(args, message: str) -> None:
    if not args.quiet:
        print(message)


def load_project_file(path: Path | str) -> ProjectConfig:
    """Parse the flat project file into a :class:`ProjectConfig`."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"project file not found: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in PROJECT_KEYS + OPTIONAL_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    missing = [k for k in PROJECT_KEYS if k not in values]
    if missing:
        raise UsageError(f"{path}: missing mandatory key(s): {', '.join(missing)}")
    try:
        classes = [c.strip() for c in values["classes"].split(",") if c.strip()]
        hyper_kwargs = {}
        for key in ("batch", "subdivisions", "width", "height", "max_batches"):
            if key in values:
                hyper_kwargs[key] = int(values[key])
        if "steps" in values:
            parts = values["steps"].split(",")
            if len(parts) != 2:
                raise ValueError("steps must be two comma-separated integers")
            hyper_kwargs["steps"] = (int(parts[0]), int(parts[1]))
        if "pretrained_weights" in values:
            hyper_kwargs["pretrained_weights"] = Path(values["pretrained_weights"])
        base = default_hyper(len(classes)) if classes else TrainingHyper()
        hyper = TrainingHyper(
            batch=hyper_kwargs.get("batch", base.batch),
            subdivisions=hyper_kwargs.get("subdivisions", base.subdivisions),
            max_batches=hyper_kwargs.get("max_batches", base.max_batches),
            steps=hyper_kwargs.get("steps", base.steps),
            width=hyper_kwargs.get("width", base.width),
            height=hyper_kwargs.get("height", base.height),
            pretrained_weights=hyper_kwargs.get("pretrained_weights"),
        )
        return ProjectConfig(
            name=values["name"],
            dataset_path=Path(values["dataset"]),
            classes=classes,
            train_pct=float(values["train_pct"]),
            seed=int(values.get("seed", "0")),
            output_root=Path(values.get("output", ".")),
            hyper=hyper,
        )
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _project(args) -> ProjectConfig:
    if not args.project:
        raise UsageError("a project file is required (use --project FILE)")
    project = load_project_file(args.project)
    if args.seed is not None:
        project.seed = args.seed
    return project


def _layout_for(project: ProjectConfig) -> LayoutPaths:
    project_dir = (project.output_root / project.name).resolve()
    return LayoutPaths(
        project_dir=project_dir,
        images_dir=project_dir / "images",
        train_list=project_dir / "train.txt",
        test_list=project_dir / "test.txt",
        backup_dir=project_dir / "backup",
    )


def _load_test_truth(project: ProjectConfig) -> list[LabeledImage]:
    layout = _layout_for(project)
    if not layout.test_list.is_file():
        raise FileNotFoundError(
            f"no test list at {layout.test_list}; run 'prepare' first")
    truth = []
    for line in layout.test_list.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        image_path = Path(line.strip())
        with Image.open(image_path) as im:
            width, height = im.size
        boxes = parse_yolo_annotation(
            image_path.with_suffix(".txt").read_text(encoding="utf-8"),
            len(project.classes))
        truth.append(LabeledImage(image_path.stem, width, height, boxes))
    return truth


# --- subcommands -------------------------------------------------------------


def cmd_validate(args) -> int:
    project = _project(args)
    manifest = scan_dataset(project.dataset_path, project.classes)
    report = validate_dataset(manifest)
    _echo(args, str(report))
    return EXIT_OK if report.passed else EXIT_DOMAIN


def cmd_convert(args) -> int:
    if args.classes:
        classes = [c.strip() for c in args.classes.split(",") if c.strip()]
    elif args.project:
        classes = load_project_file(args.project).classes
    else:
        raise UsageError("convert needs --classes or a project file")
    voc_dir = Path(args.voc_dir)
    if not voc_dir.is_dir():
        raise FileNotFoundError(f"not a directory: {voc_dir}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for xml_path in sorted(voc_dir.glob("*.xml")):
        try:
            width, height, corners = parse_voc_annotation(
                xml_path.read_text(encoding="utf-8"))
            boxes = voc_to_yolo(width, height, corners, classes)
        except (AnnotationError, ValueError) as exc:
            print(f"{xml_path.name}: {exc}", file=sys.stderr)
            return EXIT_DOMAIN
        (out_dir / f"{xml_path.stem}.txt").write_text(
            serialize_yolo_annotation(boxes), encoding="utf-8")
        count += 1
    _echo(args, f"converted {count} annotation file(s) to {out_dir}")
    return EXIT_OK


def cmd_augment(args) -> int:
    project = _project(args)
    manifest = scan_dataset(project.dataset_path, project.classes)
    report = validate_dataset(manifest)
    if not report.passed:
        print(str(report), file=sys.stderr)
        return EXIT_DOMAIN
    out_dir = _layout_for(project).project_dir / "augmented"
    plan = default_plan(project.seed)
    augmented = augment_dataset(manifest, plan, out_dir)
    _echo(args, f"augmented {len(manifest.images)} -> {len(augmented.images)} "
                f"images in {out_dir}")
    return EXIT_OK


def cmd_split(args) -> int:
    project = _project(args)
    manifest = scan_dataset(project.dataset_path, project.classes)
    result = split_dataset(manifest, project.train_pct, project.seed)
    _echo(args, f"train {len(result.train)} / test {len(result.test)} "
                f"(train_pct={project.train_pct}, seed={project.seed})")
    if not args.quiet:
        for label, ids in (("train", result.train), ("test", result.test)):
            for image_id in ids:
                print(f"{label} {image_id}")
    return EXIT_OK


def cmd_prepare(args) -> int:
    project = _project(args)
    layout = _layout_for(project)
    if layout.train_list.exists() and not args.force:
        print(f"layout exists: {layout.project_dir} (use --force to overwrite)",
              file=sys.stderr)
        return EXIT_DOMAIN

    manifest = scan_dataset(project.dataset_path, project.classes)
    report = validate_dataset(manifest)
    if not report.passed and not args.force:
        print("validation failed; fix the dataset or pass --force:",
              file=sys.stderr)
        print(str(report), file=sys.stderr)
        return EXIT_DOMAIN

    project_dir = layout.project_dir
    pre_existing = set(project_dir.iterdir()) if project_dir.is_dir() else None
    stage = "augment"
    try:
        if not args.no_augment:
            plan = default_plan(project.seed)
            manifest = augment_dataset(manifest, plan, project_dir / "augmented")
            _echo(args, f"augmented to {len(manifest.images)} images")
        stage = "split"
        result = split_dataset(manifest, project.train_pct, project.seed)
        _echo(args, f"split: train {len(result.train)} / test {len(result.test)}")
        stage = "materialize"
        layout = materialize_layout(manifest, result, project.output_root,
                                    project.name, force=args.force)
        stage = "render"
        artifacts = write_artifacts(project, layout)
        commands = emit_commands(project, layout)
        (layout.project_dir / "commands.txt").write_text(
            "".join(c + "\n" for c in commands), encoding="utf-8")
        for kind, path in artifacts.items():
            _echo(args, f"wrote {kind}: {path}")
        _echo(args, "run these to train, evaluate, and predict:")
        for command in commands:
            _echo(args, f"  {command}")
        return EXIT_OK
    except Exception as exc:
        # drop partial outputs so a re-run starts clean
        if project_dir.is_dir():
            if pre_existing is None:
                shutil.rmtree(project_dir, ignore_errors=True)
            else:
                for entry in set(project_dir.iterdir()) - pre_existing:
                    if entry.is_dir():
                        shutil.rmtree(entry, ignore_errors=True)
                    else:
                        entry.unlink(missing_ok=True)
        print(f"prepare failed at stage {stage}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def cmd_gen_config(args) -> int:
    project = _project(args)
    layout = _layout_for(project)
    if not layout.train_list.is_file():
        print(f"no layout at {layout.project_dir}; run 'prepare' first",
              file=sys.stderr)
        return EXIT_DOMAIN
    artifacts = write_artifacts(project, layout)
    for kind, path in artifacts.items():
        _echo(args, f"wrote {kind}: {path}")
    for command in emit_commands(project, layout):
        _echo(args, command)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    project = _project(args)
    dets_path = Path(args.detections)
    if not dets_path.is_file():
        raise FileNotFoundError(f"detections file not found: {dets_path}")
    truth = _load_test_truth(project)
    dets = parse_detections(dets_path.read_text(encoding="utf-8"),
                            len(project.classes))
    report = evaluate(dets, truth, iou_thr=args.iou, conf_thr=args.conf,
                      mode=args.mode)
    print(format_report(report, project.classes))
    csv_path = dets_path.with_suffix(".eval.csv")
    csv_path.write_text(report_to_csv(report, project.classes), encoding="utf-8")
    _echo(args, f"wrote {csv_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    project = _project(args)
    truth = _load_test_truth(project)
    labeled = []
    for dets_file in args.detections:
        dets_path = Path(dets_file)
        if not dets_path.is_file():
            raise FileNotFoundError(f"detections file not found: {dets_path}")
        dets = parse_detections(dets_path.read_text(encoding="utf-8"),
                                len(project.classes))
        labeled.append((dets_path.stem,
                        evaluate(dets, truth, iou_thr=args.iou,
                                 conf_thr=args.conf, mode=args.mode)))
    best = select_best_checkpoint(labeled)
    print(f"{'checkpoint':<24} {'mAP':>8} {'prec':>8} {'recall':>8} {'f1':>8}")
    for label, rep in labeled:
        marker = "  <- best" if label == best else ""
        print(f"{label:<24} {rep.mean_ap:>8.4f} {rep.precision:>8.4f} "
              f"{rep.recall:>8.4f} {rep.f1:>8.4f}{marker}")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-p", "--project", metavar="FILE",
                        help="project file (key = value lines)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the project seed")
    common.add_argument("--force", action="store_true",
                        help="overwrite existing outputs / skip the validation gate")
    common.add_argument("--quiet", action="store_true",
                        help="suppress informational output")

    parser = argparse.ArgumentParser(
        prog="yoloprep",
        description="Object-detection dataset pipeline: validate, convert, "
                    "augment, split, and generate Darknet training inputs.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common],
                   help="lint the dataset").set_defaults(func=cmd_validate)

    p = sub.add_parser("convert", parents=[common],
                       help="convert VOC XML annotations to YOLO label files")
    p.add_argument("voc_dir", help="directory of VOC .xml files")
    p.add_argument("out_dir", help="destination for .txt label files")
    p.add_argument("--classes", help="comma-separated class names")
    p.set_defaults(func=cmd_convert)

    sub.add_parser("augment", parents=[common],
                   help="expand the dataset with the default transform plan"
                   ).set_defaults(func=cmd_augment)

    sub.add_parser("split", parents=[common],
                   help="print the deterministic train/test split"
                   ).set_defaults(func=cmd_split)

    p = sub.add_parser("prepare", parents=[common],
                       help="full pipeline: validate, augment, split, "
                            "materialize, render configs")
    p.add_argument("--no-augment", action="store_true",
                   help="skip augmentation")
    p.set_defaults(func=cmd_prepare)

    sub.add_parser("gen-config", parents=[common],
                   help="re-render .names/.data/.cfg for an existing layout"
                   ).set_defaults(func=cmd_gen_config)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score a detections file against the test set")
    p.add_argument("detections", help="detections file "
                   "(<image_id> <class_id> <conf> <cx> <cy> <w> <h> per line)")
    p.add_argument("--iou", type=float, default=0.5, help="IoU threshold")
    p.add_argument("--conf", type=float, default=0.25, help="confidence threshold")
    p.add_argument("--mode", choices=("all_points", "eleven_point"),
                   default="all_points", help="AP interpolation mode")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", parents=[common],
                       help="compare checkpoints: evaluate several detections "
                            "files and pick the best by mAP")
    p.add_argument("detections", nargs="+", help="detections files")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--conf", type=float, default=0.25)
    p.add_argument("--mode", choices=("all_points", "eleven_point"),
                   default="all_points")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"usage: see 'yoloprep {args.command} --help'", file=sys.stderr)
        return EXIT_USAGE
    except FileExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (FileNotFoundError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"usage: see 'yoloprep {args.command} --help'", file=sys.stderr)
        return EXIT_USAGE
    except (AnnotationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
