"""
Rough Copy-Paste with photometric adjustment and overlap-aware placement.

Instances are rectangular crops of their bounding box (no segmentation).
Each crop gets a random gamma and brightness shift before compositing. Some
of its pixels are then dropped so the background shows through, and the
placement keeps clear of existing boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .boxes import Annotation, Box, Sample, clip_box, iou
from .imaging import resize_image
from .photometric import Patch, brightness_adjust, gamma_adjust, pixel_dropout


@dataclass(frozen=True)
class PasteConstraints:
    max_attempts: int = 30
    iou_max: float = 0.05
    margin: int = 1
    max_instances: int = 3

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if not 0.0 <= self.iou_max <= 1.0:
            raise ValueError("iou_max must lie in [0, 1]")
        if self.margin < 0 or self.max_instances < 1:
            raise ValueError("margin must be >= 0 and max_instances >= 1")


@dataclass(frozen=True)
class CopyPasteParams:
    constraints: PasteConstraints = PasteConstraints()
    gamma_range: Tuple[float, float] = (0.7, 1.3)
    brightness_range: Tuple[int, int] = (-32, 32)
    dropout_max: float = 0.1
    # per-instance scale jitter; (1, 1) disables it
    jitter_range: Tuple[float, float] = (1.0, 1.0)
    # pastes with fewer valid pixels than this are skipped entirely
    min_valid_fraction: float = 0.25

    def __post_init__(self):
        lo, hi = self.gamma_range
        if not 0 < lo <= hi:
            raise ValueError(f"invalid gamma range {self.gamma_range}")
        if self.brightness_range[0] > self.brightness_range[1]:
            raise ValueError(f"invalid brightness range {self.brightness_range}")
        if not 0.0 <= self.dropout_max <= 1.0:
            raise ValueError("dropout_max must lie in [0, 1]")
        lo, hi = self.jitter_range
        if not 0 < lo <= hi:
            raise ValueError(f"invalid jitter range {self.jitter_range}")
        if not 0.0 <= self.min_valid_fraction <= 1.0:
            raise ValueError("min_valid_fraction must lie in [0, 1]")


def _pixel_span(lo: float, hi: float) -> Tuple[int, int]:
    a, b = int(math.floor(lo + 0.5)), int(math.floor(hi + 0.5))
    return a, max(b, a + 1)


def extract_instance(s: Sample, index: int) -> Patch:
    """Rectangular crop of annotation ``index``, clipped to the frame, all pixels valid."""
    if not 0 <= index < len(s.annotations):
        raise IndexError(f"annotation index {index} out of range")
    box = clip_box(s.annotations[index].box, s.width, s.height)
    if box is None:
        raise ValueError(f"annotation {index} has no area inside the frame")
    x0, x1 = _pixel_span(box.x_min, box.x_max)
    y0, y1 = _pixel_span(box.y_min, box.y_max)
    x1, y1 = min(x1, s.width), min(y1, s.height)
    x0, y0 = min(x0, x1 - 1), min(y0, y1 - 1)
    pixels = s.image[y0:y1, x0:x1].copy()
    return Patch(pixels, np.ones(pixels.shape[:2], dtype=bool))


def smart_place(
    bg: Sample,
    patch_dims: Tuple[int, int],
    c: PasteConstraints,
    rng: np.random.Generator,
    existing: Optional[Sequence[Box]] = None,
) -> Optional[Tuple[int, int]]:
    """Rejection-sample a top-left corner for a ``(w, h)`` patch.

    Candidates are uniform over positions that keep ``margin`` pixels to every
    frame edge. The first one whose box has IoU <= ``iou_max`` with every
    existing box wins; None after ``max_attempts`` failures or if the patch
    cannot fit at all.
    """
    w, h = patch_dims
    m = c.margin
    x_hi, y_hi = bg.width - m - w, bg.height - m - h
    if x_hi < m or y_hi < m:
        return None
    boxes = [a.box for a in bg.annotations] if existing is None else list(existing)
    for _ in range(c.max_attempts):
        x = int(rng.integers(m, x_hi, endpoint=True))
        y = int(rng.integers(m, y_hi, endpoint=True))
        cand = Box(x, y, x + w, y + h)
        if all(iou(cand, b) <= c.iou_max for b in boxes):
            return x, y
    return None


def paste_patch(img: np.ndarray, patch: Patch, x: int, y: int) -> np.ndarray:
    """Copy the valid pixels of ``patch`` onto a copy of ``img`` at (x, y)."""
    out = img.copy()
    region = out[y : y + patch.height, x : x + patch.width]
    region[patch.mask] = patch.pixels[patch.mask]
    return out


def paste_instance(bg: Sample, patch: Patch, class_id: int, x: int, y: int) -> Sample:
    box = Box(x, y, x + patch.width, y + patch.height)
    return bg.replace(
        image=paste_patch(bg.image, patch, x, y),
        annotations=bg.annotations + (Annotation(class_id, box),),
    )


def _jitter_patch(patch: Patch, lo: float, hi: float, rng: np.random.Generator) -> Patch:
    if lo == hi == 1.0:
        return patch
    f = rng.uniform(lo, hi)
    w = max(1, int(math.floor(patch.width * f + 0.5)))
    h = max(1, int(math.floor(patch.height * f + 0.5)))
    return Patch(resize_image(patch.pixels, h, w), np.ones((h, w), dtype=bool))


def copy_paste(
    bg: Sample, sources: Sequence[Sample], params: CopyPasteParams, rng: np.random.Generator
) -> Sample:
    """Paste between 1 and ``max_instances`` instances from ``sources`` onto ``bg``.

    Each round crops a uniformly chosen (source, annotation) pair and adjusts
    the crop in a fixed order: optional scale jitter first, then gamma before
    brightness, then dropout. Rounds whose patch keeps less than
    ``min_valid_fraction`` of its pixels are skipped, as are rounds that find
    no placement. The returned sample
    records the number of successful pastes in ``meta["pastes"]``.
    """
    pool = [(si, ai) for si, s in enumerate(sources) for ai in range(len(s.annotations))]
    if not pool:
        raise ValueError("copy_paste needs at least one source annotation")
    c = params.constraints
    k = int(rng.integers(1, c.max_instances, endpoint=True))
    out = bg
    pastes = 0
    for _ in range(k):
        si, ai = pool[int(rng.integers(len(pool)))]
        src = sources[si]
        try:
            patch = extract_instance(src, ai)
        except ValueError:
            continue
        patch = _jitter_patch(patch, *params.jitter_range, rng)
        gamma = rng.uniform(*params.gamma_range)
        delta = int(rng.integers(params.brightness_range[0], params.brightness_range[1], endpoint=True))
        frac = rng.uniform(0.0, params.dropout_max)
        pixels = brightness_adjust(gamma_adjust(patch.pixels, gamma), delta)
        patch = pixel_dropout(Patch(pixels, patch.mask), frac, rng)
        if patch.valid_fraction < params.min_valid_fraction:
            continue
        place = smart_place(out, (patch.width, patch.height), c, rng)
        if place is None:
            continue
        out = paste_instance(out, patch, src.annotations[ai].class_id, *place)
        pastes += 1
    out = out.replace()
    out.meta["pastes"] = bg.meta.get("pastes", 0) + pastes
    return out
