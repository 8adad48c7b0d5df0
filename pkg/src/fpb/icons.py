"""Procedural agent sprites.

40 "seen" icons cover 8 base shapes x 5 fill colors; 10 "unseen" icons use
two further fills on 5 of the shapes.  No fill is close to the corridor
white or the goal red, so every sprite pixel survives background
subtraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geom import ColorRGB, rasterize

BASE_SHAPES = ("star", "circle", "triangle", "diamond", "heart", "cross", "hexagon", "ring")

SEEN_FILLS = (
    ColorRGB(40, 90, 220),  # blue
    ColorRGB(30, 160, 70),  # green
    ColorRGB(130, 50, 190),  # purple
    ColorRGB(240, 130, 20),  # orange
    ColorRGB(0, 150, 160),  # teal
)
UNSEEN_FILLS = (
    ColorRGB(230, 80, 170),  # pink
    ColorRGB(140, 90, 40),  # brown
)
UNSEEN_SHAPES = ("star", "circle", "triangle", "diamond", "hexagon")
ACCENT = ColorRGB(25, 25, 35)


@dataclass(frozen=True)
class IconSpec:
    icon_id: int
    base_shape: str
    fill: ColorRGB
    accent: ColorRGB
    split: str


def _build_catalog() -> tuple[IconSpec, ...]:
    icons = []
    for shape in BASE_SHAPES:
        for fill in SEEN_FILLS:
            icons.append(IconSpec(len(icons), shape, fill, ACCENT, "seen"))
    for fill in UNSEEN_FILLS:
        for shape in UNSEEN_SHAPES:
            icons.append(IconSpec(len(icons), shape, fill, ACCENT, "unseen"))
    return tuple(icons)


ICONS = _build_catalog()
SEEN_IDS = tuple(i.icon_id for i in ICONS if i.split == "seen")
UNSEEN_IDS = tuple(i.icon_id for i in ICONS if i.split == "unseen")


def get_icon(icon_id: int) -> IconSpec:
    if not 0 <= icon_id < len(ICONS):
        raise KeyError(f"unknown icon id {icon_id}")
    return ICONS[icon_id]


def _regular(n: int, radius: float, phase: float = -math.pi / 2) -> np.ndarray:
    t = phase + 2 * math.pi * np.arange(n) / n
    return np.stack([radius * np.cos(t), radius * np.sin(t)], axis=1)


def _unit_outline(shape: str) -> np.ndarray | None:
    """Outline in a unit box centred on the origin; None for round shapes."""
    if shape == "star":
        outer = _regular(5, 0.5)
        inner = _regular(5, 0.22, -math.pi / 2 + math.pi / 5)
        return np.stack([outer, inner], axis=1).reshape(-1, 2)
    if shape == "triangle":
        return np.array([[0.0, -0.5], [0.5, 0.4], [-0.5, 0.4]])
    if shape == "diamond":
        return np.array([[0.0, -0.5], [0.5, 0.0], [0.0, 0.5], [-0.5, 0.0]])
    if shape == "hexagon":
        return _regular(6, 0.5, 0.0)
    if shape == "cross":
        a, b = 0.17, 0.5
        return np.array(
            [[-a, -b], [a, -b], [a, -a], [b, -a], [b, a], [a, a], [a, b], [-a, b], [-a, a], [-b, a], [-b, -a], [-a, -a]]
        )
    if shape == "heart":
        t = np.linspace(0, 2 * math.pi, 48, endpoint=False)
        x = 16 * np.sin(t) ** 3
        y = -(13 * np.cos(t) - 5 * np.cos(2 * t) - 2 * np.cos(3 * t) - np.cos(4 * t))
        pts = np.stack([x, y], axis=1)
        pts -= (pts.max(axis=0) + pts.min(axis=0)) / 2
        return pts / (2 * np.abs(pts).max())
    return None


@lru_cache(maxsize=256)
def sprite(icon_id: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(mask, rgb)`` for a ``size x size`` sprite patch."""
    icon = get_icon(icon_id)
    size = max(int(size), 3)
    outline = _unit_outline(icon.base_shape)
    c = size / 2.0
    if outline is None:
        ys, xs = np.indices((size, size)) + 0.5
        r = np.hypot(xs - c, ys - c)
        mask = r <= size / 2.0
        if icon.base_shape == "ring":
            mask &= r >= size * 0.22
    else:
        mask = rasterize(outline * size + c, size, size)
    # accent: one-pixel rim around the fill
    inner = mask.copy()
    inner[1:, :] &= mask[:-1, :]
    inner[:-1, :] &= mask[1:, :]
    inner[:, 1:] &= mask[:, :-1]
    inner[:, :-1] &= mask[:, 1:]
    rgb = np.zeros((size, size, 3), dtype=np.uint8)
    rgb[mask] = icon.accent
    rgb[inner] = icon.fill
    mask.setflags(write=False)
    rgb.setflags(write=False)
    return mask, rgb
