"""Bounding-box formats: parse YOLO labels, parse VOC XML, convert between them.

Run:  python3 demos/01_boxes_and_formats.py
"""

from yoloprep import (
    CornerBox,
    LabeledImage,
    parse_voc_annotation,
    parse_yolo_annotation,
    serialize_yolo_annotation,
    voc_to_yolo,
    yolo_to_voc,
)

# A YOLO label file: one object per line, class id + normalized center/size.
yolo_text = """\
0 0.500000 0.500000 0.250000 0.250000
0 0.150000 0.200000 0.100000 0.150000
"""
boxes = parse_yolo_annotation(yolo_text, class_count=1)
print("parsed YOLO boxes:")
for b in boxes:
    print(f"  class {b.class_id}  center ({b.cx}, {b.cy})  size ({b.w}, {b.h})")

# Serialization is the exact inverse (6 decimal places, stable for diffs).
assert serialize_yolo_annotation(boxes) == yolo_text
print("serialize(parse(text)) == text:", True)

# The same objects in Pascal VOC terms: class names + pixel corners.
voc_xml = """
<annotation>
  <size><width>200</width><height>160</height></size>
  <object>
    <name>stoma</name>
    <bndbox><xmin>75</xmin><ymin>60</ymin><xmax>125</xmax><ymax>100</ymax></bndbox>
  </object>
</annotation>
"""
width, height, corners = parse_voc_annotation(voc_xml)
print(f"\nVOC document: {width}x{height}, {len(corners)} object(s)")
print("  ", corners[0])

# VOC -> YOLO: normalize against the image size, map names to indices.
converted = voc_to_yolo(width, height, corners, classes=["stoma"])
print("as YOLO:", converted[0])

# ... and back.  The round trip reproduces the corners (within float noise).
image = LabeledImage("demo", width, height, converted)
(back,) = yolo_to_voc(image, classes=["stoma"])
print("back to VOC:", back)
assert all(abs(a - b) < 1e-9 for a, b in zip(back.coords, corners[0].coords))
print("round trip exact:", True)
