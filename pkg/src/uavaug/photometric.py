"""Photometric transforms for whole images and for pasted patches."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .boxes import check_image
from .imaging import to_uint8


@dataclass(frozen=True)
class HsvGains:
    """Per-channel jitter gains; each factor is ``1 + u * gain`` with ``u ~ U[-1, 1]``."""

    h: float = 0.0
    s: float = 0.0
    v: float = 0.0

    def __post_init__(self):
        for name in ("h", "s", "v"):
            g = getattr(self, name)
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"hsv gain {name} must lie in [0, 1], got {g}")


@dataclass
class Patch:
    """A rectangular RGB region with a per-pixel validity mask."""

    pixels: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if self.mask.shape != self.pixels.shape[:2]:
            raise ValueError("mask dims must equal patch dims")
        self.mask = self.mask.astype(bool, copy=False)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def valid_fraction(self) -> float:
        return float(self.mask.mean()) if self.mask.size else 0.0


def rgb_to_hsv(rgb: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """H in degrees [0, 360), S in [0, 1], V in [0, 255] (float64)."""
    rgb = rgb.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    s = np.divide(c, v, out=np.zeros_like(v), where=v > 0)
    safe_c = np.where(c > 0, c, 1.0)
    h = np.where(
        v == r,
        np.mod((g - b) / safe_c, 6.0),
        np.where(v == g, (b - r) / safe_c + 2.0, (r - g) / safe_c + 4.0),
    )
    h = np.where(c > 0, h * 60.0, 0.0)
    return h, s, v


def hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_hsv`; returns float64 RGB in [0, 255]."""
    c = v * s
    hp = np.mod(h, 360.0) / 60.0
    x = c * (1.0 - np.abs(np.mod(hp, 2.0) - 1.0))
    m = v - c
    sector = np.floor(hp).astype(np.int64) % 6
    zero = np.zeros_like(c)
    # (r, g, b) before adding m, indexed by hue sector
    table = [
        (c, x, zero),
        (x, c, zero),
        (zero, c, x),
        (zero, x, c),
        (x, zero, c),
        (c, zero, x),
    ]
    out = np.empty(c.shape + (3,), dtype=np.float64)
    for ch in range(3):
        out[..., ch] = np.choose(sector, [t[ch] for t in table]) + m
    return out


def sample_hsv_factors(gains: HsvGains, rng: np.random.Generator) -> Tuple[float, float, float]:
    # always draw three values so stream consumption is independent of the gains
    u = rng.uniform(-1.0, 1.0, 3)
    return (1.0 + u[0] * gains.h, 1.0 + u[1] * gains.s, 1.0 + u[2] * gains.v)


def apply_hsv_factors(img: np.ndarray, fh: float, fs: float, fv: float) -> np.ndarray:
    check_image(img)
    if fh == 1.0 and fs == 1.0 and fv == 1.0:
        return img.copy()
    h, s, v = rgb_to_hsv(img)
    h = np.mod(h * fh, 360.0)
    s = np.clip(s * fs, 0.0, 1.0)
    v = np.clip(v * fv, 0.0, 255.0)
    return to_uint8(hsv_to_rgb(h, s, v))


def hsv_adjust(img: np.ndarray, gains: HsvGains, rng: np.random.Generator) -> np.ndarray:
    """Multiplicative HSV jitter with one factor triple drawn per image."""
    return apply_hsv_factors(img, *sample_hsv_factors(gains, rng))


def gamma_adjust(img: np.ndarray, gamma: float) -> np.ndarray:
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    lut = to_uint8(255.0 * (np.arange(256) / 255.0) ** gamma)
    return lut[img]


def brightness_adjust(img: np.ndarray, delta: int) -> np.ndarray:
    return np.clip(img.astype(np.int32) + int(delta), 0, 255).astype(np.uint8)


def pixel_dropout(p: Patch, frac: float, rng: np.random.Generator) -> Patch:
    """Invalidate ``floor(frac * N)`` of the N currently valid pixels.

    Pixel values are left untouched; invalid pixels are skipped when the
    patch is composited, so the background shows through.
    """
    if not 0.0 <= frac <= 1.0:
        raise ValueError(f"dropout fraction must lie in [0, 1], got {frac}")
    mask = p.mask.copy()
    valid = np.flatnonzero(mask)
    k = math.floor(frac * valid.size)
    if k:
        drop = rng.choice(valid.size, size=k, replace=False)
        mask.flat[valid[drop]] = False
    return Patch(p.pixels, mask)
