"""Deterministic augmentation and evaluation toolkit for small-object detection datasets."""

__version__ = "0.1.0"

from .boxes import Annotation, Box, NormalizedBox, Sample, clip_box, iou, to_normalized, to_pixel
from .config import PRESETS, AugmentConfig, load_config
from .pipeline import augment_sample, derive_stream, is_mosaic_active, materialize

__all__ = [
    "Annotation",
    "AugmentConfig",
    "Box",
    "NormalizedBox",
    "PRESETS",
    "Sample",
    "augment_sample",
    "clip_box",
    "derive_stream",
    "iou",
    "is_mosaic_active",
    "load_config",
    "materialize",
    "to_normalized",
    "to_pixel",
]
