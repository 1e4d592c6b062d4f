"""
Image-level geometric augmentations.

Every op returns a new :class:`~uavaug.boxes.Sample`; boxes follow the pixels
through the same affine map so labels stay aligned with image content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .boxes import Annotation, Box, Sample, clip_to_rect, keep_box
from .imaging import resize_float, resize_image, to_uint8

# lambda is snapped to this grid so blends are exact integer arithmetic
_MIX_DENOM = 1_000_000


@dataclass(frozen=True)
class MosaicParams:
    size: int = 640
    center_jitter: float = 0.5
    min_box_side: float = 2.0
    min_area_ratio: float = 0.1

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("mosaic size must be positive")
        if not 0.0 <= self.center_jitter <= 0.5:
            raise ValueError("center_jitter must lie in [0, 0.5]")
        if not 0.0 <= self.min_area_ratio <= 1.0:
            raise ValueError("min_area_ratio must lie in [0, 1]")


def mosaic_center(p: MosaicParams, rng: np.random.Generator) -> Tuple[int, int]:
    """Draw the integer split point of the 2S x 2S canvas."""
    s = p.size
    u = rng.uniform(s * (1.0 - p.center_jitter), s * (1.0 + p.center_jitter), 2)
    xc, yc = (min(max(int(math.floor(v + 0.5)), 1), 2 * s - 1) for v in u)
    return xc, yc


def quadrants(center: Tuple[int, int], size: int) -> List[Tuple[int, int, int, int]]:
    """(x0, y0, x1, y1) for top-left, top-right, bottom-left, bottom-right."""
    xc, yc = center
    full = 2 * size
    return [(0, 0, xc, yc), (xc, 0, full, yc), (0, yc, xc, full), (xc, yc, full, full)]


def mosaic_canvas(arrays: Sequence[np.ndarray], center: Tuple[int, int], size: int) -> np.ndarray:
    """Pixel half of the mosaic for arbitrary (H, W, C) arrays.

    Each array is resized to fill its quadrant of a 2S x 2S canvas, and the
    canvas is resized to S x S. Returns float32 without rounding.
    """
    if len(arrays) != 4:
        raise ValueError(f"mosaic needs exactly 4 inputs, got {len(arrays)}")
    channels = arrays[0].shape[2] if arrays[0].ndim == 3 else 1
    canvas = np.zeros((2 * size, 2 * size, channels), dtype=np.float32)
    for arr, (x0, y0, x1, y1) in zip(arrays, quadrants(center, size)):
        canvas[y0:y1, x0:x1] = resize_float(arr, y1 - y0, x1 - x0)
    return resize_float(canvas, size, size)


def mosaic_boxes(
    samples: Sequence[Sample], center: Tuple[int, int], p: MosaicParams
) -> List[Annotation]:
    out = []
    for s, (x0, y0, x1, y1) in zip(samples, quadrants(center, p.size)):
        sx = (x1 - x0) / s.width
        sy = (y1 - y0) / s.height
        for ann in s.annotations:
            mapped = ann.box.scale(sx, sy).shift(x0, y0)
            clipped = clip_to_rect(mapped, x0, y0, x1, y1)
            # output resolution is half the canvas
            mapped = mapped.scale(0.5)
            clipped = clipped.scale(0.5) if clipped is not None else None
            if keep_box(clipped, mapped, p.min_box_side, p.min_area_ratio):
                out.append(Annotation(ann.class_id, clipped))
    return out


def mosaic_at(samples: Sequence[Sample], center: Tuple[int, int], p: MosaicParams) -> Sample:
    """Mosaic with an explicit split point; see :func:`mosaic`."""
    if len(samples) != 4:
        raise ValueError(f"mosaic needs exactly 4 samples, got {len(samples)}")
    pixels = to_uint8(mosaic_canvas([s.image for s in samples], center, p.size))
    return Sample(
        image=pixels,
        annotations=mosaic_boxes(samples, center, p),
        source_id=samples[0].source_id,
        meta=dict(samples[0].meta),
    )


def mosaic(samples: Sequence[Sample], p: MosaicParams, rng: np.random.Generator) -> Sample:
    """Stitch four samples into one S x S image around a random center.

    Sample i fills quadrant i (top-left, top-right, bottom-left, bottom-right)
    of a 2S x 2S canvas with bilinear resize and no aspect preservation, so the
    quadrants always tile the canvas. Boxes are clipped to their quadrant and
    dropped by :func:`~uavaug.boxes.keep_box`.
    """
    if len(samples) != 4:
        raise ValueError(f"mosaic needs exactly 4 samples, got {len(samples)}")
    return mosaic_at(samples, mosaic_center(p, rng), p)


def mixup(a: Sample, b: Sample, lam: float) -> Sample:
    """Blend ``lam * a + (1 - lam) * b`` per channel and keep both label sets.

    ``lam`` is snapped to a 1e-6 grid (ties to even), which makes the blend
    exact and ``mixup(b, a, 1 - lam)`` byte-identical to ``mixup(a, b, lam)``.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if a.image.shape != b.image.shape:
        raise ValueError(f"mixup needs equal image shapes, got {a.image.shape} and {b.image.shape}")
    wa = int(np.rint(lam * _MIX_DENOM))
    num = wa * a.image.astype(np.int64) + (_MIX_DENOM - wa) * b.image.astype(np.int64)
    pixels = ((num + _MIX_DENOM // 2) // _MIX_DENOM).astype(np.uint8)
    return a.replace(image=pixels, annotations=a.annotations + b.annotations)


def resize_sample(s: Sample, out_w: int, out_h: int) -> Sample:
    """Stretch-resize to ``out_w x out_h``; boxes scale with the pixels."""
    sx, sy = out_w / s.width, out_h / s.height
    anns = []
    for ann in s.annotations:
        b = clip_to_rect(ann.box.scale(sx, sy), 0, 0, out_w, out_h)
        if b is not None:
            anns.append(Annotation(ann.class_id, b))
    return s.replace(image=resize_image(s.image, out_h, out_w), annotations=anns)


def scale_jitter(s: Sample, scale_range: Tuple[float, float], rng: np.random.Generator) -> Sample:
    """Resize by a factor drawn from ``U[lo, hi]``.

    Output dims are rounded to whole pixels and boxes are scaled by the
    realized per-axis ratio, so they stay aligned with the pixels.
    """
    lo, hi = scale_range
    if not 0 < lo <= hi:
        raise ValueError(f"invalid scale range {scale_range}")
    f = rng.uniform(lo, hi)
    out_w = max(1, int(math.floor(s.width * f + 0.5)))
    out_h = max(1, int(math.floor(s.height * f + 0.5)))
    return resize_sample(s, out_w, out_h)


def flip_horizontal(s: Sample) -> Sample:
    w = s.width
    anns = [
        Annotation(a.class_id, Box(w - a.box.x_max, a.box.y_min, w - a.box.x_min, a.box.y_max))
        for a in s.annotations
    ]
    return s.replace(image=s.image[:, ::-1].copy(), annotations=anns)


def place_on_canvas(
    s: Sample,
    out_w: int,
    out_h: int,
    dx: int,
    dy: int,
    min_side: float = 2.0,
    min_area_ratio: float = 0.1,
) -> Sample:
    """Paste ``s`` at offset (dx, dy) into a zero-filled ``out_w x out_h`` frame."""
    canvas = np.zeros((out_h, out_w, 3), dtype=np.uint8)
    sx0, sy0 = max(0, -dx), max(0, -dy)
    sx1, sy1 = min(s.width, out_w - dx), min(s.height, out_h - dy)
    if sx1 > sx0 and sy1 > sy0:
        canvas[sy0 + dy : sy1 + dy, sx0 + dx : sx1 + dx] = s.image[sy0:sy1, sx0:sx1]
    anns = []
    for ann in s.annotations:
        moved = ann.box.shift(dx, dy)
        clipped = clip_to_rect(moved, 0, 0, out_w, out_h)
        if keep_box(clipped, moved, min_side, min_area_ratio):
            anns.append(Annotation(ann.class_id, clipped))
    return s.replace(image=canvas, annotations=anns)


def translate(
    s: Sample, dx: float, dy: float, min_side: float = 2.0, min_area_ratio: float = 0.1
) -> Sample:
    """Shift content by (dx, dy) pixels, rounded to whole pixels, with zero fill."""
    dx, dy = int(math.floor(dx + 0.5)), int(math.floor(dy + 0.5))
    if dx == 0 and dy == 0:
        return s.replace(image=s.image.copy())
    return place_on_canvas(s, s.width, s.height, dx, dy, min_side, min_area_ratio)
