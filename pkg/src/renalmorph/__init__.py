"""Post-processing and evaluation toolkit for 3D binary kidney segmentation masks."""

from .metrics import ExamScore, dice, iou, score_exam, slice_instances
from .morphology import (
    DEFAULT_PIPELINE,
    PipelineSpec,
    clean,
    dilate,
    erode,
    fill,
    label_components,
    majority,
    run_pipeline,
)
from .voxel import (
    CROSS6,
    CUBE27,
    BinaryVolume,
    SliceMask,
    StructuringElement,
    assemble_volume,
    complement,
    count_foreground,
    resample_mask,
)

__version__ = "0.1.0"

__all__ = [
    "ExamScore",
    "dice",
    "iou",
    "score_exam",
    "slice_instances",
    "DEFAULT_PIPELINE",
    "PipelineSpec",
    "clean",
    "dilate",
    "erode",
    "fill",
    "label_components",
    "majority",
    "run_pipeline",
    "CROSS6",
    "CUBE27",
    "BinaryVolume",
    "SliceMask",
    "StructuringElement",
    "assemble_volume",
    "complement",
    "count_foreground",
    "resample_mask",
]
