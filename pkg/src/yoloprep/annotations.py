"""Bounding-box types plus the YOLO text and Pascal VOC XML annotation formats.

Two box representations are used throughout the package:

* :class:`CenterBox` -- the YOLO convention: class index plus normalized
  center/size, one box per line in a plain-text label file.
* :class:`CornerBox` -- the VOC convention: class name plus absolute pixel
  corners, origin at the top-left.

Pixel coordinates are treated as real-valued with origin (0, 0); no 1-based
offset correction is applied to VOC files.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field


class AnnotationError(ValueError):
    """Raised for malformed or out-of-range annotation content.

    ``line`` is the 1-based offending line number (0 when not line-oriented)
    and ``kind`` is one of ``malformed``, ``class-range``, ``coord-range``,
    ``zero-area``.
    """

    def __init__(self, message: str, line: int = 0, kind: str = "malformed"):
        super().__init__(message)
        self.line = line
        self.kind = kind


@dataclass(frozen=True)
class CenterBox:
    """One object in YOLO terms: class index + normalized center and size."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")
        if not (0.0 <= self.cx <= 1.0):
            raise ValueError(f"cx out of range: {self.cx}")
        if not (0.0 <= self.cy <= 1.0):
            raise ValueError(f"cy out of range: {self.cy}")
        if not (0.0 < self.w <= 1.0):
            raise ValueError(f"w out of range: {self.w}")
        if not (0.0 < self.h <= 1.0):
            raise ValueError(f"h out of range: {self.h}")

    @property
    def corners(self) -> tuple[float, float, float, float]:
        """Normalized (xmin, ymin, xmax, ymax); may extend outside [0, 1]."""
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)


@dataclass(frozen=True)
class CornerBox:
    """One object in VOC terms: class name + absolute pixel corners."""

    class_name: str
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if self.xmin < 0 or self.ymin < 0:
            raise ValueError(f"negative corner: ({self.xmin}, {self.ymin})")
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(
                f"degenerate box: ({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax})")

    @property
    def coords(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)


@dataclass
class LabeledImage:
    """One image's identity, pixel dimensions, and ground-truth boxes.

    ``id`` is the file basename without extension; it keys images everywhere
    (splits, detections, reports).
    """

    id: str
    width: int
    height: int
    boxes: list[CenterBox] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad dimensions {self.width}x{self.height} for {self.id!r}")


def box_fits_image(box: CenterBox, width: int, height: int, tol: float = 0.5) -> bool:
    """True when the denormalized box lies within the image, up to ``tol`` pixels."""
    xmin, ymin, xmax, ymax = box.corners
    return (xmin * width >= -tol and ymin * height >= -tol
            and xmax * width <= width + tol and ymax * height <= height + tol)


# --- YOLO plain-text format ------------------------------------------------
#
# One object per line: `<class_id> <cx> <cy> <w> <h>`, decimal floats,
# blank lines ignored.  Label file = image path with the extension replaced
# by `.txt`, in the same directory.

_YOLO_FIELDS = ("cx", "cy", "w", "h")


def check_yolo_text(text: str, class_count: int) -> tuple[list[CenterBox], list[AnnotationError]]:
    """Parse leniently, collecting every per-line problem instead of raising.

    Used by the dataset linter; :func:`parse_yolo_annotation` is the strict
    variant.  Returns the boxes from good lines plus the list of errors.
    """
    if class_count < 1:
        raise ValueError("class_count must be >= 1")
    boxes: list[CenterBox] = []
    errors: list[AnnotationError] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            errors.append(AnnotationError(
                f"expected 5 fields, got {len(parts)}, line {lineno}", lineno))
            continue
        try:
            class_id = int(parts[0])
        except ValueError:
            errors.append(AnnotationError(
                f"non-integer class_id {parts[0]!r}, line {lineno}", lineno))
            continue
        try:
            vals = [float(p) for p in parts[1:]]
        except ValueError:
            errors.append(AnnotationError(
                f"non-numeric coordinate, line {lineno}", lineno))
            continue
        if not 0 <= class_id < class_count:
            errors.append(AnnotationError(
                f"class_id {class_id} out of range [0, {class_count}), line {lineno}",
                lineno, kind="class-range"))
            continue
        cx, cy, w, h = vals
        if w == 0.0 or h == 0.0:
            errors.append(AnnotationError(
                f"zero-area box, line {lineno}", lineno, kind="zero-area"))
            continue
        bad = None
        if not (0.0 <= cx <= 1.0):
            bad = "cx"
        elif not (0.0 <= cy <= 1.0):
            bad = "cy"
        elif not (0.0 < w <= 1.0):
            bad = "w"
        elif not (0.0 < h <= 1.0):
            bad = "h"
        if bad is not None:
            errors.append(AnnotationError(
                f"{bad} out of range, line {lineno}", lineno, kind="coord-range"))
            continue
        boxes.append(CenterBox(class_id, cx, cy, w, h))
    return boxes, errors


def parse_yolo_annotation(text: str, class_count: int) -> list[CenterBox]:
    """Parse a YOLO label file; raise :class:`AnnotationError` on the first bad line."""
    boxes, errors = check_yolo_text(text, class_count)
    if errors:
        raise errors[0]
    return boxes


def serialize_yolo_annotation(boxes: list[CenterBox]) -> str:
    """One newline-terminated line per box, coordinates with 6 decimal places."""
    return "".join(
        f"{b.class_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}\n" for b in boxes)


# --- Pascal VOC XML subset ---------------------------------------------------


def _require(parent: ET.Element, tag: str, context: str) -> ET.Element:
    node = parent.find(tag)
    if node is None or node.text is None:
        raise AnnotationError(f"missing <{tag}> in {context}")
    return node


def _number(node: ET.Element, tag: str) -> float:
    try:
        return float(node.text.strip())
    except (ValueError, AttributeError):
        raise AnnotationError(f"non-numeric <{tag}>: {node.text!r}") from None


def parse_voc_annotation(xml: str) -> tuple[int, int, list[CornerBox]]:
    """Parse a VOC-style document into (width, height, corner boxes).

    Only ``size/{width,height}`` and ``object/{name,bndbox}`` are read;
    unknown elements are ignored.
    """
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise AnnotationError(f"not well-formed XML: {exc}") from None
    size = root.find("size")
    if size is None:
        raise AnnotationError("missing <size> element")
    width = int(_number(_require(size, "width", "size"), "width"))
    height = int(_number(_require(size, "height", "size"), "height"))
    if width < 1 or height < 1:
        raise AnnotationError(f"bad image size {width}x{height}")
    boxes = []
    for i, obj in enumerate(root.iter("object")):
        ctx = f"object {i + 1}"
        name = _require(obj, "name", ctx).text.strip()
        bnd = obj.find("bndbox")
        if bnd is None:
            raise AnnotationError(f"missing <bndbox> in {ctx}")
        vals = {t: _number(_require(bnd, t, ctx), t)
                for t in ("xmin", "ymin", "xmax", "ymax")}
        if vals["xmin"] >= vals["xmax"] or vals["ymin"] >= vals["ymax"]:
            raise AnnotationError(f"degenerate box in {ctx}")
        try:
            boxes.append(CornerBox(name, **vals))
        except ValueError as exc:
            raise AnnotationError(f"{exc} in {ctx}") from None
    return width, height, boxes


# --- conversions -------------------------------------------------------------


def voc_to_yolo(width: int, height: int, boxes: list[CornerBox],
                classes: list[str]) -> list[CenterBox]:
    """Convert corner boxes to normalized center boxes against a class list.

    cx = (xmin+xmax) / 2W, cy = (ymin+ymax) / 2H, w = (xmax-xmin) / W,
    h = (ymax-ymin) / H; class_id is the index of the name in ``classes``.
    """
    if width < 1 or height < 1:
        raise ValueError(f"bad image size {width}x{height}")
    index = {name: i for i, name in enumerate(classes)}
    unknown = sorted({b.class_name for b in boxes} - index.keys())
    if unknown:
        raise ValueError(f"unknown class name(s): {', '.join(unknown)}")
    out = []
    for b in boxes:
        out.append(CenterBox(
            class_id=index[b.class_name],
            cx=(b.xmin + b.xmax) / (2.0 * width),
            cy=(b.ymin + b.ymax) / (2.0 * height),
            w=(b.xmax - b.xmin) / width,
            h=(b.ymax - b.ymin) / height,
        ))
    return out


def yolo_to_voc(image: LabeledImage, classes: list[str]) -> list[CornerBox]:
    """Inverse of :func:`voc_to_yolo`: denormalize against the image dimensions."""
    out = []
    for b in image.boxes:
        if b.class_id >= len(classes):
            raise ValueError(f"class_id {b.class_id} >= class count {len(classes)}")
        half_w = b.w * image.width / 2.0
        half_h = b.h * image.height / 2.0
        out.append(CornerBox(
            class_name=classes[b.class_id],
            xmin=max(0.0, b.cx * image.width - half_w),
            ymin=max(0.0, b.cy * image.height - half_h),
            xmax=b.cx * image.width + half_w,
            ymax=b.cy * image.height + half_h,
        ))
    return out
