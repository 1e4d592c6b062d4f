"""
Box types and box arithmetic.

Internally every box is stored in pixel corner form ``(x_min, y_min, x_max, y_max)``
with real-valued coordinates and the origin at the top-left corner. The
normalized center-size form used by YOLO label files only appears at the
serialization boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class Box:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"box coordinates must be finite, got {coords}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"box corners out of order: {coords}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def shift(self, dx: float, dy: float) -> "Box":
        return Box(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def scale(self, sx: float, sy: Optional[float] = None) -> "Box":
        sy = sx if sy is None else sy
        return Box(self.x_min * sx, self.y_min * sy, self.x_max * sx, self.y_max * sy)


@dataclass(frozen=True)
class NormalizedBox:
    """Center-size box in fractions of the image width/height."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"normalized box must be finite, got {vals}")


@dataclass(frozen=True)
class Annotation:
    class_id: int
    box: Box

    def __post_init__(self):
        if int(self.class_id) != self.class_id or self.class_id < 0:
            raise ValueError(f"class_id must be a non-negative integer, got {self.class_id}")


@dataclass(frozen=True, eq=False)
class Sample:
    """One RGB image (H x W x 3, uint8) and its box annotations."""

    image: np.ndarray
    annotations: Tuple[Annotation, ...] = ()
    source_id: str = ""
    # provenance flags set by the pipeline (mosaic, mixup, pastes)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        check_image(self.image)
        object.__setattr__(self, "annotations", tuple(self.annotations))

    @property
    def width(self) -> int:
        return self.image.shape[1]

    @property
    def height(self) -> int:
        return self.image.shape[0]

    def replace(self, **changes) -> "Sample":
        kwargs = dict(
            image=self.image,
            annotations=self.annotations,
            source_id=self.source_id,
            meta=dict(self.meta),
        )
        kwargs.update(changes)
        return Sample(**kwargs)


def check_image(img: np.ndarray) -> None:
    if not isinstance(img, np.ndarray) or img.dtype != np.uint8:
        raise TypeError("image must be a uint8 numpy array")
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image must have shape (H, W, 3) with H, W >= 1, got {img.shape}")


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 when either box or the union has zero area."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = a.area + b.area - inter
    if a.area <= 0 or b.area <= 0 or union <= 0:
        return 0.0
    return inter / union


def clip_box(b: Box, width: float, height: float) -> Optional[Box]:
    """Intersect ``b`` with the frame ``(0, 0, width, height)``.

    Returns None when the intersection has zero area.
    """
    if width <= 0 or height <= 0:
        raise ValueError("frame dimensions must be positive")
    return clip_to_rect(b, 0.0, 0.0, width, height)


def clip_to_rect(b: Box, x0: float, y0: float, x1: float, y1: float) -> Optional[Box]:
    nx0, ny0 = max(b.x_min, x0), max(b.y_min, y0)
    nx1, ny1 = min(b.x_max, x1), min(b.y_max, y1)
    if nx1 <= nx0 or ny1 <= ny0:
        return None
    return Box(nx0, ny0, nx1, ny1)


def to_pixel(n: NormalizedBox, width: float, height: float) -> Box:
    if width <= 0 or height <= 0:
        raise ValueError("frame dimensions must be positive")
    half_w, half_h = n.w / 2.0, n.h / 2.0
    return Box(
        (n.cx - half_w) * width,
        (n.cy - half_h) * height,
        (n.cx + half_w) * width,
        (n.cy + half_h) * height,
    )


def to_normalized(b: Box, width: float, height: float) -> NormalizedBox:
    if width <= 0 or height <= 0:
        raise ValueError("frame dimensions must be positive")
    return NormalizedBox(
        (b.x_min + b.x_max) / 2.0 / width,
        (b.y_min + b.y_max) / 2.0 / height,
        (b.x_max - b.x_min) / width,
        (b.y_max - b.y_min) / height,
    )


def keep_box(clipped: Optional[Box], original: Box, min_side: float, min_area_ratio: float) -> bool:
    """Drop rule shared by mosaic and translate.

    A clipped box survives when both sides are at least ``min_side`` and it
    retains at least ``min_area_ratio`` of its pre-clip area.
    """
    if clipped is None:
        return False
    if clipped.width < min_side or clipped.height < min_side:
        return False
    if original.area <= 0:
        return False
    return clipped.area / original.area >= min_area_ratio


def boxes_array(annotations: Sequence[Annotation]) -> np.ndarray:
    if not annotations:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([a.box.as_tuple() for a in annotations], dtype=np.float64)
