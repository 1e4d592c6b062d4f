"""Pixel-level helpers: bilinear resize, rounding, image file I/O."""

from __future__ import annotations

import io
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp")


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def to_uint8(x: np.ndarray) -> np.ndarray:
    """Round half up and clip into [0, 255]."""
    return np.clip(round_half_up(x), 0, 255).astype(np.uint8)


def _axis_weights(n_in: int, n_out: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    # pixel centers at i + 0.5, so continuous coordinates scale exactly by n_out / n_in
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = (src - i0).astype(np.float32)
    return i0, i1, frac


def resize_float(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of an (H, W, C) array, returning float32.

    Uses the half-pixel-center convention, so a continuous coordinate ``x`` in
    the input maps to ``x * out_w / W`` in the output. No antialiasing.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {(out_h, out_w)}")
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim == 2:
        a = a[:, :, None]
    h, w = a.shape[:2]
    if (h, w) == (out_h, out_w):
        return a.copy()
    if h != out_h:
        i0, i1, f = _axis_weights(h, out_h)
        f = f[:, None, None]
        a = a[i0] * (1.0 - f) + a[i1] * f
    if w != out_w:
        i0, i1, f = _axis_weights(w, out_w)
        f = f[None, :, None]
        a = a[:, i0] * (1.0 - f) + a[:, i1] * f
    return a


def resize_image(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    if img.shape[:2] == (out_h, out_w):
        return img.copy()
    return to_uint8(resize_float(img, out_h, out_w))


def load_image(path: Union[str, Path]) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def image_size(path: Union[str, Path]) -> Tuple[int, int]:
    """(width, height) from the file header without decoding pixels."""
    with Image.open(path) as im:
        return im.size


def encode_png(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(img)).save(buf, format="PNG", compress_level=6)
    return buf.getvalue()
