"""3D binary morphology: dilation, erosion, component cleaning, majority vote, hole filling."""

from .ops import ComponentLabeling, clean, dilate, erode, fill, label_components, majority
from .pipeline import (
    DEFAULT_PIPELINE,
    Clean,
    Dilate,
    Erode,
    Fill,
    Majority,
    PipelineError,
    PipelineSpec,
    run_pipeline,
)

__all__ = [
    "ComponentLabeling",
    "clean",
    "dilate",
    "erode",
    "fill",
    "label_components",
    "majority",
    "DEFAULT_PIPELINE",
    "Clean",
    "Dilate",
    "Erode",
    "Fill",
    "Majority",
    "PipelineError",
    "PipelineSpec",
    "run_pipeline",
]
