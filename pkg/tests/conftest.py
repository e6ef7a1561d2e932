from pathlib import Path

import numpy as np
from PIL import Image

from yoloprep.annotations import CenterBox, serialize_yolo_annotation


def random_center_box(rng: np.random.Generator, class_count: int = 1,
                      contained: bool = True) -> CenterBox:
    """A valid random box; ``contained`` keeps it inside the unit frame."""
    w = rng.uniform(0.05, 0.5)
    h = rng.uniform(0.05, 0.5)
    if contained:
        cx = rng.uniform(w / 2, 1 - w / 2)
        cy = rng.uniform(h / 2, 1 - h / 2)
    else:
        cx = rng.uniform(0, 1)
        cy = rng.uniform(0, 1)
    return CenterBox(int(rng.integers(class_count)), cx, cy, w, h)


def write_jpeg(path: Path, width: int = 64, height: int = 64,
               rng: np.random.Generator | None = None) -> None:
    if rng is None:
        rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(pixels).save(path, quality=95)


def make_dataset(root: Path, n_images: int, seed: int = 0,
                 class_count: int = 1, size: tuple[int, int] = (64, 64),
                 max_boxes: int = 5) -> Path:
    """Write a clean synthetic dataset: JPGs with 1..max_boxes boxes each."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    for i in range(n_images):
        stem = f"img{i:04d}"
        write_jpeg(root / f"{stem}.jpg", *size, rng=rng)
        boxes = [random_center_box(rng, class_count)
                 for _ in range(int(rng.integers(1, max_boxes + 1)))]
        (root / f"{stem}.txt").write_text(serialize_yolo_annotation(boxes),
                                          encoding="utf-8")
    return root


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion, capture or not
    if report.when == "call" and "test_acceptance" in report.nodeid:
        status = "PASS" if report.passed else "FAIL"
        name = report.nodeid.split("::")[-1]
        print(f"\n[acceptance] {status} {name}", flush=True)
