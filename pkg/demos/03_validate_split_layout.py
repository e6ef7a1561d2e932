"""Dataset linting, deterministic splits, and the trainer folder layout.

Run:  python3 demos/03_validate_split_layout.py
"""

import tempfile
from pathlib import Path

import numpy as np

from yoloprep import (
    materialize_layout,
    save_raster,
    scan_dataset,
    split_dataset,
    validate_dataset,
)


def build_dataset(root: Path, n: int) -> None:
    rng = np.random.default_rng(7)
    root.mkdir(parents=True)
    for i in range(n):
        raster = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        save_raster(root / f"plant{i:02d}.jpg", raster)
        (root / f"plant{i:02d}.txt").write_text("0 0.5 0.5 0.4 0.4\n")


with tempfile.TemporaryDirectory() as tmp:
    data = Path(tmp) / "data"
    build_dataset(data, 10)

    # sneak in two classic mistakes: a label with a bad class id, and an
    # image without any label file
    (data / "plant03.txt").write_text("4 0.5 0.5 0.2 0.2\n")
    (data / "plant07.txt").unlink()

    manifest = scan_dataset(data, classes=["stoma"])
    report = validate_dataset(manifest)
    print("validation passed:", report.passed)
    print(report)

    # fix the problems and re-lint
    (data / "plant03.txt").write_text("0 0.5 0.5 0.2 0.2\n")
    (data / "plant07.txt").write_text("")  # zero objects is legal
    manifest = scan_dataset(data, classes=["stoma"])
    print("\nafter fixing:", validate_dataset(manifest).passed)

    # the split is a seeded permutation of the sorted ids: same seed, same
    # split, on any machine, in any enumeration order
    split = split_dataset(manifest, train_pct=0.75, seed=123)
    print(f"\ntrain ({len(split.train)}): {split.train}")
    print(f"test  ({len(split.test)}): {split.test}")
    again = split_dataset(manifest, train_pct=0.75, seed=123)
    print("reproducible:", again.train == split.train)

    # materialize the layout the Darknet trainer expects
    layout = materialize_layout(manifest, split, Path(tmp) / "out", "plants")
    print("\nlayout at", layout.project_dir.name)
    for entry in sorted(layout.project_dir.iterdir()):
        print("  ", entry.name)
    print("first train.txt line:",
          layout.train_list.read_text().splitlines()[0])
