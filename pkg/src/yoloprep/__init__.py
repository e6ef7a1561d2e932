"""yoloprep: object-detection dataset tooling for Darknet/YOLOv3 projects.

Takes a folder of JPG images with bounding-box annotations all the way to
trainer-ready inputs: format parsing and conversion (YOLO text, Pascal VOC
XML), dataset linting, box-aware augmentation, deterministic train/test
splitting, Darknet config generation, and detection evaluation (IoU
matching, AP/mAP, precision/recall/F1).
"""

from .annotations import (
    AnnotationError,
    CenterBox,
    CornerBox,
    LabeledImage,
    parse_voc_annotation,
    parse_yolo_annotation,
    serialize_yolo_annotation,
    voc_to_yolo,
    yolo_to_voc,
)
from .augment import (
    AugmentationPlan,
    apply_transform_raster,
    augment_dataset,
    augment_labeled_image,
    default_plan,
    load_raster,
    mix_seed,
    save_raster,
)
from .darknet import (
    ProjectConfig,
    TrainingHyper,
    default_hyper,
    emit_commands,
    load_default_template,
    render_cfg,
    render_data,
    render_names,
    write_artifacts,
)
from .dataset import (
    DatasetManifest,
    ImageRecord,
    LayoutPaths,
    SplitResult,
    ValidationReport,
    materialize_layout,
    scan_dataset,
    split_dataset,
    validate_dataset,
)
from .evaluation import (
    Detection,
    EvalReport,
    average_precision,
    evaluate,
    format_report,
    match_detections,
    parse_detections,
    report_to_csv,
    select_best_checkpoint,
)
from .geometry import (
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
    iou,
    output_dims,
    transform_box,
)

__version__ = "0.1.0"
