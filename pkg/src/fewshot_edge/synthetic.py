"""Synthetic parametric-shape image sources for tests, demos, and smoke training.

Generates a directory tree in the same layout the FSE-style builder consumes:
``<root>/<class>/<k>.jpg`` next to a binary mask ``<root>/<class>/<k>.png``.
Each class is a shape family (regular polygons, stars, ellipses) with a
class-specific hue; position, scale, rotation, and texture vary per sample.
"""
from __future__ import annotations

import colorsys
import math
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

FAMILIES = (
    "triangle",
    "square",
    "pentagon",
    "hexagon",
    "star4",
    "star5",
    "ellipse_round",
    "ellipse_wide",
    "ellipse_tall",
    "diamond",
)


def _shape_points(family: str, cx: float, cy: float, radius: float, angle: float):
    if family.startswith("ellipse"):
        if family == "ellipse_wide":
            a, b = radius, radius * 0.45
        elif family == "ellipse_tall":
            a, b = radius * 0.45, radius
        else:
            a, b = radius, radius * 0.85
        ts = np.linspace(0, 2 * math.pi, 64, endpoint=False)
        xs, ys = a * np.cos(ts), b * np.sin(ts)
    elif family.startswith("star"):
        n = int(family[4:])
        ts = np.arange(2 * n) * math.pi / n
        rr = np.where(np.arange(2 * n) % 2 == 0, radius, radius * 0.45)
        xs, ys = rr * np.cos(ts), rr * np.sin(ts)
    else:
        n = {"triangle": 3, "square": 4, "diamond": 4, "pentagon": 5, "hexagon": 6}[family]
        ts = np.arange(n) * 2 * math.pi / n
        if family == "diamond":
            stretch = 1.6
        else:
            stretch = 1.0
        xs, ys = radius * np.cos(ts), radius * np.sin(ts) * stretch
    ca, sa = math.cos(angle), math.sin(angle)
    px = cx + xs * ca - ys * sa
    py = cy + xs * sa + ys * ca
    return list(zip(px.tolist(), py.tolist()))


def render_sample(family: str, size: int, hue: float, rng: np.random.Generator):
    """One (image, mask) pair: a filled shape on a noisy darker background."""
    radius = size * rng.uniform(0.18, 0.32)
    cx = rng.uniform(radius + 1, size - radius - 1)
    cy = rng.uniform(radius + 1, size - radius - 1)
    angle = rng.uniform(0, 2 * math.pi)
    pts = _shape_points(family, cx, cy, radius, angle)

    canvas = Image.new("L", (size, size), 0)
    ImageDraw.Draw(canvas).polygon(pts, fill=255)
    mask = (np.asarray(canvas) > 127).astype(np.uint8)

    fg = colorsys.hsv_to_rgb((hue + rng.normal(0, 0.02)) % 1.0,
                             rng.uniform(0.6, 0.9), rng.uniform(0.7, 0.95))
    bg = colorsys.hsv_to_rgb(rng.uniform(0, 1), rng.uniform(0.0, 0.25),
                             rng.uniform(0.15, 0.4))
    img = np.empty((size, size, 3), dtype=np.float64)
    img[...] = np.asarray(bg)
    img[mask == 1] = np.asarray(fg)
    img += rng.normal(0, 0.04, size=img.shape)
    img = np.clip(img, 0, 1)
    return (img * 255).astype(np.uint8), mask


def make_source(root, n_classes: int = 10, per_class: int = 10, size: int = 64,
                seed: int = 0) -> list[str]:
    """Write a shape-image source tree; returns the generated class names."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    names = []
    for ci in range(n_classes):
        family = FAMILIES[ci % len(FAMILIES)]
        name = f"{family}_{ci:02d}"
        names.append(name)
        hue = rng.uniform(0, 1)
        class_dir = root / name
        class_dir.mkdir(parents=True, exist_ok=True)
        for k in range(per_class):
            img, mask = render_sample(family, size, hue, rng)
            Image.fromarray(img).save(class_dir / f"{k}.jpg", quality=95)
            Image.fromarray(mask * 255).save(class_dir / f"{k}.png")
    return names
