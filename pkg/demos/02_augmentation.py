"""Box-aware augmentation: transforms move the pixels and the annotations
together, and a plan expands a dataset with exact multiplicity.

Run:  python3 demos/02_augmentation.py
"""

import tempfile
from pathlib import Path

import numpy as np

from yoloprep import (
    CenterBox,
    GaussianNoise,
    HFlip,
    LabeledImage,
    Rot90CW,
    RotAngle,
    augment_dataset,
    augment_labeled_image,
    default_plan,
    save_raster,
    scan_dataset,
    transform_box,
    validate_dataset,
)

# --- a single box under a few transforms -------------------------------------

box = CenterBox(0, cx=0.25, cy=0.5, w=0.2, h=0.4)
print("original box:          ", box)
print("after HFlip:           ", transform_box(box, HFlip()))
print("after Rot90CW:         ", transform_box(box, Rot90CW()))
print("after GaussianNoise:   ", transform_box(box, GaussianNoise(0.03)),
      "(photometric: unchanged)")
# arbitrary rotation: axis-aligned hull of the rotated corners, clipped
print("after RotAngle(30):    ",
      transform_box(box, RotAngle(30.0), width=640, height=480))

# --- one image + annotation, jointly transformed ------------------------------

rng = np.random.default_rng(0)
raster = rng.integers(0, 256, size=(480, 640, 3), dtype=np.uint8)
image = LabeledImage("leaf", 640, 480, [box])
flipped, flipped_raster = augment_labeled_image(image, raster, HFlip())
print(f"\n{image.id!r} -> {flipped.id!r}, raster {flipped_raster.shape}, "
      f"box cx {image.boxes[0].cx} -> {flipped.boxes[0].cx}")

# --- whole-dataset expansion ---------------------------------------------------

with tempfile.TemporaryDirectory() as tmp:
    src = Path(tmp) / "src"
    src.mkdir()
    for i in range(5):
        sample = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        save_raster(src / f"leaf{i}.jpg", sample)
        (src / f"leaf{i}.txt").write_text("0 0.5 0.5 0.3 0.3\n")

    manifest = scan_dataset(src, classes=["stoma"])
    plan = default_plan(seed=42)  # 8 transforms + the original = x9
    augmented = augment_dataset(manifest, plan, Path(tmp) / "aug")

    print(f"\n{len(manifest.images)} images x (8 transforms + original) "
          f"= {len(augmented.images)} images")
    print("sample output ids:", sorted(r.id for r in augmented.images)[:4], "...")
    print("augmented dataset validates:",
          validate_dataset(augmented).passed)
