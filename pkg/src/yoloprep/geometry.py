"""Box arithmetic shared by augmentation and evaluation.

Transforms come in two families:

* geometric -- move pixels and therefore boxes (flips, quarter-turn
  rotations, arbitrary-angle rotation);
* photometric -- change pixel values only (noise, blurs, brightness);
  boxes pass through untouched.

Arbitrary-angle rotation keeps the original canvas: the image rotates about
its center and is cropped back to the frame, so output dimensions never
change.  A box under rotation becomes the axis-aligned hull of its four
rotated corners, clipped to the frame; boxes that lose too much area to the
clip are dropped.  Positive angles rotate clockwise (top-left origin, y
down), matching the quarter-turn naming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .annotations import CenterBox

DEFAULT_MIN_VISIBILITY = 0.3


@dataclass(frozen=True)
class Transform:
    """Base class; concrete kinds below. ``geometric`` tells whether boxes move."""

    geometric = False

    @property
    def slug(self) -> str:
        """Filesystem-safe suffix used in augmented image ids."""
        raise NotImplementedError


def _num_slug(x: float) -> str:
    return f"{x:g}".replace(".", "p").replace("-", "m")


@dataclass(frozen=True)
class HFlip(Transform):
    geometric = True

    @property
    def slug(self) -> str:
        return "hflip"


@dataclass(frozen=True)
class VFlip(Transform):
    geometric = True

    @property
    def slug(self) -> str:
        return "vflip"


@dataclass(frozen=True)
class Rot90CW(Transform):
    geometric = True

    @property
    def slug(self) -> str:
        return "rot90cw"


@dataclass(frozen=True)
class Rot180(Transform):
    geometric = True

    @property
    def slug(self) -> str:
        return "rot180"


@dataclass(frozen=True)
class Rot270CW(Transform):
    geometric = True

    @property
    def slug(self) -> str:
        return "rot270cw"


@dataclass(frozen=True)
class RotAngle(Transform):
    """Rotate by an arbitrary angle in degrees, clockwise positive, in (-180, 180]."""

    degrees: float
    geometric = True

    def __post_init__(self):
        if not (-180.0 < self.degrees <= 180.0):
            raise ValueError(f"degrees must be in (-180, 180], got {self.degrees}")

    @property
    def slug(self) -> str:
        return f"rot{_num_slug(self.degrees)}"


@dataclass(frozen=True)
class GaussianNoise(Transform):
    """Additive per-channel noise, standard deviation ``sigma`` * 255."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    @property
    def slug(self) -> str:
        return f"gnoise{_num_slug(self.sigma)}"


@dataclass(frozen=True)
class GaussianBlur(Transform):
    radius: int

    def __post_init__(self):
        if not (isinstance(self.radius, int) and self.radius >= 1):
            raise ValueError(f"radius must be an integer >= 1, got {self.radius}")

    @property
    def slug(self) -> str:
        return f"gblur{self.radius}"


@dataclass(frozen=True)
class AverageBlur(Transform):
    kernel: int

    def __post_init__(self):
        if not (isinstance(self.kernel, int) and self.kernel >= 3 and self.kernel % 2 == 1):
            raise ValueError(f"kernel must be an odd integer >= 3, got {self.kernel}")

    @property
    def slug(self) -> str:
        return f"ablur{self.kernel}"


@dataclass(frozen=True)
class Brightness(Transform):
    """Additive brightness shift of ``delta`` * 255, delta in [-1, 1]."""

    delta: float

    def __post_init__(self):
        if not (-1.0 <= self.delta <= 1.0):
            raise ValueError(f"delta must be in [-1, 1], got {self.delta}")

    @property
    def slug(self) -> str:
        return f"bright{_num_slug(self.delta)}"


def iou(a, b) -> float:
    """Intersection over union of two (xmin, ymin, xmax, ymax) boxes.

    Accepts any 4-sequence (or an object with a ``coords`` attribute);
    classes are ignored.  Touching boxes score 0.
    """
    ax0, ay0, ax1, ay1 = getattr(a, "coords", a)
    bx0, by0, bx1, by1 = getattr(b, "coords", b)
    area_a = (ax1 - ax0) * (ay1 - ay0)
    area_b = (bx1 - bx0) * (by1 - by0)
    if area_a <= 0 or area_b <= 0:
        raise ValueError("degenerate box")
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (area_a + area_b - inter)


def output_dims(t: Transform, width: int, height: int) -> tuple[int, int]:
    """Image dimensions after a transform; only quarter turns swap them."""
    if width < 1 or height < 1:
        raise ValueError(f"bad dimensions {width}x{height}")
    if isinstance(t, (Rot90CW, Rot270CW)):
        return height, width
    return width, height


def _rotate_box(box: CenterBox, degrees: float, width: int, height: int,
                min_visibility: float) -> CenterBox | None:
    theta = math.radians(degrees)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cx_img, cy_img = width / 2.0, height / 2.0
    xmin, ymin, xmax, ymax = box.corners
    xmin, xmax = xmin * width, xmax * width
    ymin, ymax = ymin * height, ymax * height
    xs, ys = [], []
    for x, y in ((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)):
        dx, dy = x - cx_img, y - cy_img
        # clockwise for positive theta in y-down coordinates
        xs.append(cos_t * dx - sin_t * dy + cx_img)
        ys.append(sin_t * dx + cos_t * dy + cy_img)
    # axis-aligned hull, clipped to the frame (border-touching boxes kept)
    hx0, hx1 = max(0.0, min(xs)), min(float(width), max(xs))
    hy0, hy1 = max(0.0, min(ys)), min(float(height), max(ys))
    clipped_area = max(0.0, hx1 - hx0) * max(0.0, hy1 - hy0)
    original_area = (xmax - xmin) * (ymax - ymin)
    if clipped_area <= 0.0 or clipped_area < min_visibility * original_area:
        return None
    return CenterBox(box.class_id, (hx0 + hx1) / (2.0 * width),
                     (hy0 + hy1) / (2.0 * height),
                     (hx1 - hx0) / width, (hy1 - hy0) / height)


def transform_box(box: CenterBox, t: Transform,
                  min_visibility: float = DEFAULT_MIN_VISIBILITY,
                  width: int = 1, height: int = 1) -> CenterBox | None:
    """Map a normalized box through a transform; ``None`` means dropped.

    ``width``/``height`` matter only for :class:`RotAngle`, whose clipping
    happens in pixel space.  Exact symmetries work on normalized coordinates
    of the (possibly dimension-swapped) output frame:

    * HFlip:    (cx, cy, w, h) -> (1-cx, cy, w, h)
    * VFlip:    (cx, cy, w, h) -> (cx, 1-cy, w, h)
    * Rot90CW:  (cx, cy, w, h) -> (1-cy, cx, h, w)
    * Rot180:   HFlip then VFlip
    * Rot270CW: inverse of Rot90CW

    Photometric transforms return the box unchanged (same object).
    """
    if not t.geometric:
        return box
    if isinstance(t, HFlip):
        return CenterBox(box.class_id, 1.0 - box.cx, box.cy, box.w, box.h)
    if isinstance(t, VFlip):
        return CenterBox(box.class_id, box.cx, 1.0 - box.cy, box.w, box.h)
    if isinstance(t, Rot90CW):
        return CenterBox(box.class_id, 1.0 - box.cy, box.cx, box.h, box.w)
    if isinstance(t, Rot180):
        return CenterBox(box.class_id, 1.0 - box.cx, 1.0 - box.cy, box.w, box.h)
    if isinstance(t, Rot270CW):
        return CenterBox(box.class_id, box.cy, 1.0 - box.cx, box.h, box.w)
    if isinstance(t, RotAngle):
        return _rotate_box(box, t.degrees, width, height, min_visibility)
    raise TypeError(f"unknown transform {t!r}")
