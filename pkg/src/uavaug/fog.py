"""
Fog synthesis with the atmospheric scattering model.

The hazy image is ``I = J * t + A * (1 - t)`` where ``J`` is the clear image,
``A`` the airlight and ``t = exp(-beta * depth)`` the transmittance.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from .boxes import check_image
from .imaging import load_image, resize_float, to_uint8


@dataclass(frozen=True)
class FogParams:
    """Fog strength and airlight colour, plus where per-pixel depth comes from.

    ``depth_mode`` is ``"constant"`` (uses ``d0``), ``"gradient"`` (depth goes
    from ``d_far`` at the top row to ``d_near`` at the bottom) or ``"map"``
    (an 8-bit grayscale image at ``depth_map`` scaled to ``[0, d_max]``).
    """

    beta: float = 1.0
    airlight: Tuple[float, float, float] = (255.0, 255.0, 255.0)
    depth_mode: str = "constant"
    d0: float = 1.0
    d_near: float = 0.0
    d_far: float = 1.0
    depth_map: Optional[Union[str, Path]] = None
    d_max: float = 1.0

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError("beta must be >= 0")
        if len(self.airlight) != 3 or not all(0 <= a <= 255 for a in self.airlight):
            raise ValueError("airlight must be three values in [0, 255]")
        if self.depth_mode not in ("constant", "gradient", "map"):
            raise ValueError(f"unknown depth mode {self.depth_mode!r}")
        if min(self.d0, self.d_near, self.d_far, self.d_max) < 0:
            raise ValueError("depth values must be >= 0")
        if self.depth_mode == "map" and self.depth_map is None:
            raise ValueError("depth mode 'map' needs a depth_map path")


def depth_field(p: FogParams, height: int, width: int) -> np.ndarray:
    if p.depth_mode == "constant":
        return np.full((height, width), p.d0, dtype=np.float64)
    if p.depth_mode == "gradient":
        y = np.arange(height, dtype=np.float64)
        d = p.d_near + (p.d_far - p.d_near) * (1.0 - y / height)
        return np.repeat(d[:, None], width, axis=1)
    gray = load_image(p.depth_map).astype(np.float32).mean(axis=2, keepdims=True)
    if gray.shape[:2] != (height, width):
        gray = resize_float(gray, height, width)
    return gray[:, :, 0].astype(np.float64) / 255.0 * p.d_max


def transmittance(depth, beta: float) -> np.ndarray:
    d = np.asarray(depth, dtype=np.float64)
    if beta < 0 or np.any(d < 0):
        raise ValueError("beta and depth must be non-negative")
    return np.exp(-beta * d)


def apply_fog(img: np.ndarray, t, airlight=(255.0, 255.0, 255.0)) -> np.ndarray:
    """Blend ``img`` toward ``airlight`` by transmittance ``t`` (scalar or H x W map)."""
    check_image(img)
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 2:
        if t.shape != img.shape[:2]:
            raise ValueError(f"transmittance shape {t.shape} does not match image {img.shape[:2]}")
        t = t[:, :, None]
    elif t.ndim != 0:
        raise ValueError("transmittance must be a scalar or an H x W map")
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("transmittance must lie in [0, 1]")
    a = np.asarray(airlight, dtype=np.float64).reshape(1, 1, 3)
    return to_uint8(img * t + a * (1.0 - t))


def fog_image(img: np.ndarray, p: FogParams) -> np.ndarray:
    t = transmittance(depth_field(p, img.shape[0], img.shape[1]), p.beta)
    return apply_fog(img, t, p.airlight)
