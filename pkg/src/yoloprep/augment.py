"""Joint image/annotation augmentation with deterministic multiplicity.

Rasters are numpy arrays of shape (height, width, 3), dtype uint8, RGB.
Every transform is applied to the *original* image, so a plan with K
transforms turns N images into N * (K + keep_original) images.  Randomness
(only Gaussian noise uses any) is keyed by a per-image seed derived from the
plan seed, the image id, and the transform index, which makes the output
independent of processing order.
"""

from __future__ import annotations

import hashlib
import shutil
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .annotations import LabeledImage, serialize_yolo_annotation
from .dataset import DatasetManifest, ImageRecord
from .geometry import (
    DEFAULT_MIN_VISIBILITY,
    AverageBlur,
    Brightness,
    GaussianBlur,
    GaussianNoise,
    HFlip,
    Rot90CW,
    Rot180,
    Rot270CW,
    RotAngle,
    Transform,
    VFlip,
    output_dims,
    transform_box,
)

JPEG_QUALITY = 95


def default_plan(seed: int = 0) -> "AugmentationPlan":
    """The stock 8-transform plan (x9 expansion with the kept original)."""
    return AugmentationPlan(
        transforms=[
            HFlip(), VFlip(), Rot90CW(), Rot180(), Rot270CW(),
            GaussianNoise(0.03), GaussianBlur(2), Brightness(0.2),
        ],
        keep_original=True,
        seed=seed,
    )


@dataclass
class AugmentationPlan:
    transforms: list[Transform]
    keep_original: bool = True
    min_visibility: float = DEFAULT_MIN_VISIBILITY
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.min_visibility <= 1.0):
            raise ValueError(f"min_visibility out of range: {self.min_visibility}")


def mix_seed(seed: int, image_id: str, index: int) -> int:
    """Order-independent 64-bit seed for one (image, transform) pair (blake2b)."""
    key = f"{seed}:{image_id}:{index}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def _check_raster(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError(f"raster must be (H, W, 3) uint8, got {image.shape} {image.dtype}")
    return image


def _rotate_raster(image: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate clockwise about the center, crop to frame, bilinear, black fill."""
    h, w = image.shape[:2]
    theta = np.radians(degrees)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    cx, cy = w / 2.0, h / 2.0
    ys, xs = np.mgrid[0:h, 0:w]
    # inverse map of the forward clockwise rotation, sampling pixel centers
    dx = xs + 0.5 - cx
    dy = ys + 0.5 - cy
    sx = cos_t * dx + sin_t * dy + cx - 0.5
    sy = -sin_t * dx + cos_t * dy + cy - 0.5
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    acc = np.zeros((h, w, 3), dtype=np.float64)
    for oy, wy in ((0, 1.0 - fy), (1, fy)):
        for ox, wx in ((0, 1.0 - fx), (1, fx)):
            xi = x0 + ox
            yi = y0 + oy
            inside = ((xi >= 0) & (xi < w) & (yi >= 0) & (yi < h))[..., None]
            sample = image[yi.clip(0, h - 1), xi.clip(0, w - 1)].astype(np.float64)
            acc += np.where(inside, sample * (wx * wy), 0.0)
    return np.clip(np.rint(acc), 0, 255).astype(np.uint8)


def apply_transform_raster(image: np.ndarray, t: Transform, seed: int = 0) -> np.ndarray:
    """Transform pixels; deterministic for a fixed (image, transform, seed)."""
    image = _check_raster(image)
    if isinstance(t, HFlip):
        return image[:, ::-1].copy()
    if isinstance(t, VFlip):
        return image[::-1, :].copy()
    if isinstance(t, Rot90CW):
        return np.rot90(image, k=-1).copy()
    if isinstance(t, Rot180):
        return image[::-1, ::-1].copy()
    if isinstance(t, Rot270CW):
        return np.rot90(image, k=1).copy()
    if isinstance(t, RotAngle):
        return _rotate_raster(image, t.degrees)
    if isinstance(t, GaussianNoise):
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, t.sigma * 255.0, size=image.shape)
        return np.clip(np.rint(image.astype(np.float64) + noise), 0, 255).astype(np.uint8)
    if isinstance(t, GaussianBlur):
        blurred = ndimage.gaussian_filter(
            image.astype(np.float64), sigma=(t.radius, t.radius, 0), mode="nearest")
        return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)
    if isinstance(t, AverageBlur):
        blurred = ndimage.uniform_filter(
            image.astype(np.float64), size=(t.kernel, t.kernel, 1), mode="nearest")
        return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)
    if isinstance(t, Brightness):
        shifted = image.astype(np.float64) + t.delta * 255.0
        return np.clip(np.rint(shifted), 0, 255).astype(np.uint8)
    raise TypeError(f"unknown transform {t!r}")


def augment_labeled_image(
    image: LabeledImage,
    raster: np.ndarray,
    t: Transform,
    seed: int = 0,
    min_visibility: float = DEFAULT_MIN_VISIBILITY,
) -> tuple[LabeledImage, np.ndarray]:
    """Transform one image together with its boxes; dropped boxes are removed."""
    raster = _check_raster(raster)
    rh, rw = raster.shape[:2]
    if (rw, rh) != (image.width, image.height):
        raise ValueError(
            f"raster is {rw}x{rh} but annotation says {image.width}x{image.height}"
            f" for {image.id!r}")
    out_raster = apply_transform_raster(raster, t, seed)
    new_w, new_h = output_dims(t, image.width, image.height)
    boxes = []
    for box in image.boxes:
        moved = transform_box(box, t, min_visibility, image.width, image.height)
        if moved is not None:
            boxes.append(moved)
    labeled = LabeledImage(id=f"{image.id}_{t.slug}", width=new_w, height=new_h,
                           boxes=boxes)
    return labeled, out_raster


def load_raster(path: Path | str) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_raster(path: Path | str, raster: np.ndarray) -> None:
    Image.fromarray(_check_raster(raster)).save(path, quality=JPEG_QUALITY)


def augment_dataset(manifest, plan: AugmentationPlan, out_dir: Path | str):
    """Expand a dataset on disk; returns the manifest of the output directory.

    Per input image this writes one JPG + one label file per plan transform
    (ids suffixed with the transform slug), plus a verbatim copy of the
    original pair when ``keep_original`` is set.  Photometric outputs copy
    the original label bytes, so their label files are byte-identical to the
    input.  Images whose boxes are all dropped are still written, with an
    empty label file, as negative examples.
    """
    if not plan.transforms:
        raise ValueError("augmentation plan has no transforms")
    bad = [r.id for r in manifest.images if r.issues or r.label_path is None]
    if bad:
        raise ValueError(f"manifest has unresolved issues for: {', '.join(sorted(bad)[:5])}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # id collisions would silently overwrite files; refuse up front
    ids: set[str] = set()
    for record in manifest.images:
        wanted = [f"{record.id}_{t.slug}" for t in plan.transforms]
        if plan.keep_original:
            wanted.append(record.id)
        for out_id in wanted:
            if out_id in ids:
                raise ValueError(f"output id collision: {out_id!r}")
            ids.add(out_id)

    records = []
    for record in sorted(manifest.images, key=lambda r: r.id):
        raster = load_raster(record.image_path)
        source = record.to_labeled_image()
        if plan.keep_original:
            img_path = out_dir / f"{record.id}.jpg"
            lbl_path = out_dir / f"{record.id}.txt"
            shutil.copyfile(record.image_path, img_path)
            shutil.copyfile(record.label_path, lbl_path)
            records.append(replace(record, image_path=img_path, label_path=lbl_path))
        for index, t in enumerate(plan.transforms):
            seed = mix_seed(plan.seed, record.id, index)
            labeled, out_raster = augment_labeled_image(
                source, raster, t, seed, plan.min_visibility)
            img_path = out_dir / f"{labeled.id}.jpg"
            lbl_path = out_dir / f"{labeled.id}.txt"
            save_raster(img_path, out_raster)
            if t.geometric:
                lbl_path.write_text(serialize_yolo_annotation(labeled.boxes),
                                    encoding="utf-8")
            else:
                shutil.copyfile(record.label_path, lbl_path)
            records.append(ImageRecord(
                id=labeled.id, image_path=img_path, label_path=lbl_path,
                width=labeled.width, height=labeled.height, boxes=labeled.boxes))

    return DatasetManifest(root=out_dir, classes=list(manifest.classes), images=records)
