"""Deterministic 2-D raster primitives shared by dataset construction and attention.

All functions are pure: they accept numpy arrays, never mutate their inputs,
and are safe to call from any number of workers. Masks come in two flavours:

* binary masks: values exactly 0 or 1 (any integer/bool dtype accepted),
* soft masks: float values in [0, 1].

Image-like arrays may be 2-D (H, W) or channels-first 3-D (C, H, W); the
spatial axes are always the last two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage


@dataclass(frozen=True)
class StructuringElement:
    """Square dilation window of side 2 * radius + 1."""

    radius: int = 1

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError(f"structuring element radius must be >= 1, got {self.radius}")


def as_binary_mask(arr) -> np.ndarray:
    """Validate and return a 2-D uint8 mask with values in {0, 1}."""
    a = np.asarray(arr)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"binary mask must be a nonempty H x W array, got shape {a.shape}")
    out = a.astype(np.uint8, copy=True)
    if not np.array_equal(np.asarray(a, dtype=np.float64), out.astype(np.float64)):
        raise ValueError("binary mask contains values outside {0, 1}")
    if out.max(initial=0) > 1:
        raise ValueError("binary mask contains values outside {0, 1}")
    return out


def as_soft_mask(arr) -> np.ndarray:
    """Validate and return a 2-D float64 mask with values in [0, 1]."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"soft mask must be a nonempty H x W array, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("soft mask contains non-finite values")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ValueError("soft mask contains values outside [0, 1]")
    return a.copy()


def dilate(mask, se: StructuringElement = StructuringElement(1)) -> np.ndarray:
    """Grayscale dilation: per-pixel max over the square window, clipped at borders."""
    m = as_soft_mask(mask)
    h, w = m.shape
    out = m.copy()
    r = se.radius
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            ys = slice(max(0, -dy), min(h, h - dy))
            xs = slice(max(0, -dx), min(w, w - dx))
            yd = slice(max(0, dy), min(h, h + dy))
            xd = slice(max(0, dx), min(w, w + dx))
            np.maximum(out[yd, xd], m[ys, xs], out=out[yd, xd])
    return out


def extract_boundary(seg, thickness: int) -> np.ndarray:
    """Boundary band of a binary segmentation mask.

    A pixel is boundary iff an oppositely-labelled pixel lies within
    ceil(thickness / 2) Chebyshev distance inside the image. Contact with
    the image frame alone creates no boundary, so an all-foreground mask
    yields no edges.
    """
    s = as_binary_mask(seg)
    if thickness < 1:
        raise ValueError(f"thickness must be >= 1, got {thickness}")
    r = math.ceil(thickness / 2)
    hi = _window_extreme(s, r, np.maximum)
    lo = _window_extreme(s, r, np.minimum)
    return (hi != lo).astype(np.uint8)


def _window_extreme(m: np.ndarray, r: int, reduce) -> np.ndarray:
    h, w = m.shape
    out = m.copy()
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            ys = slice(max(0, -dy), min(h, h - dy))
            xs = slice(max(0, -dx), min(w, w - dx))
            yd = slice(max(0, dy), min(h, h + dy))
            xd = slice(max(0, dx), min(w, w + dx))
            out[yd, xd] = reduce(out[yd, xd], m[ys, xs])
    return out


_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def fill_interior(edges) -> np.ndarray:
    """Foreground = everything not reachable by a 4-connected zero flood from the border.

    Edge pixels themselves count as foreground, matching the rule that pixels
    inside a closed boundary belong to the object.
    """
    e = as_binary_mask(edges)
    zeros = e == 0
    labels, n = ndimage.label(zeros, structure=_CROSS)
    if n == 0:
        return np.ones_like(e)
    border = np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    outside = np.unique(border[border > 0])
    background = np.isin(labels, outside)
    return (~background).astype(np.uint8)


def downsample_avg(mask, factor: int) -> np.ndarray:
    """Block mean over factor x factor cells; dims must divide (pad first otherwise)."""
    m = as_soft_mask(mask)
    if factor < 1:
        raise ValueError(f"downsample factor must be >= 1, got {factor}")
    h, w = m.shape
    if h % factor or w % factor:
        raise ValueError(
            f"mask dims {h}x{w} not divisible by factor {factor}; pad with zeros first"
        )
    return m.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def upsample_bilinear(mask, target_h: int, target_w: int) -> np.ndarray:
    """Corner-aligned bilinear interpolation to (target_h, target_w)."""
    m = as_soft_mask(mask)
    h, w = m.shape
    if target_h < h or target_w < w:
        raise ValueError(
            f"target {target_h}x{target_w} smaller than source {h}x{w}"
        )
    if (target_h, target_w) == (h, w):
        return m.copy()
    ys = _corner_aligned_coords(h, target_h)
    xs = _corner_aligned_coords(w, target_w)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = m[y0][:, x0] * (1 - wx) + m[y0][:, x1] * wx
    bot = m[y1][:, x0] * (1 - wx) + m[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


def _corner_aligned_coords(src: int, dst: int) -> np.ndarray:
    if dst == 1 or src == 1:
        return np.zeros(dst)
    return np.arange(dst) * (src - 1) / (dst - 1)


def pad_to(image_or_mask, target_h: int, target_w: int):
    """Zero-pad to (target_h, target_w) with the source at top-left.

    Returns (padded, valid_region) where valid_region = (top, left, h, w)
    marks the original extent for the evaluator's padded-region rule.
    """
    a = np.asarray(image_or_mask)
    if a.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or channels-first 3-D array, got shape {a.shape}")
    h, w = a.shape[-2:]
    if h > target_h or w > target_w:
        raise ValueError(f"source {h}x{w} does not fit in target {target_h}x{target_w}")
    if (h, w) == (target_h, target_w):
        return a.copy(), (0, 0, h, w)
    pad = [(0, 0)] * (a.ndim - 2) + [(0, target_h - h), (0, target_w - w)]
    return np.pad(a, pad), (0, 0, h, w)


def rotate90(image_or_mask, quarter_turns: int) -> np.ndarray:
    """Lossless counterclockwise rotation of the spatial axes by 90-degree steps."""
    a = np.asarray(image_or_mask)
    if a.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or channels-first 3-D array, got shape {a.shape}")
    if quarter_turns not in (0, 1, 2, 3):
        raise ValueError(f"quarter_turns must be in {{0,1,2,3}}, got {quarter_turns}")
    return np.rot90(a, k=quarter_turns, axes=(-2, -1)).copy()


def save_mask_png(path, mask) -> None:
    """Write a mask as single-channel 8-bit PNG (0..1 scaled to 0..255)."""
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"mask PNG must be 2-D, got shape {m.shape}")
    data = np.round(np.clip(m, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path)


def load_mask_png(path, binary: bool = False) -> np.ndarray:
    """Read a single-channel PNG back into a mask in [0, 1] (or {0, 1})."""
    data = np.asarray(Image.open(path).convert("L"), dtype=np.float64) / 255.0
    if binary:
        if not np.isin(data, (0.0, 1.0)).all():
            raise ValueError(f"mask at {path} is not binary")
        return data.astype(np.uint8)
    return data
