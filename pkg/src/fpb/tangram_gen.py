"""Tangram scenes for the FadeIn, Rotation and Translation variants and their golden videos.

Board coordinates are pixels with y pointing down.  Sidebar variants use a
512x256 canvas whose left half is the sidebar and right half the board;
FadeIn uses a 256x256 canvas that is all board.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import prompts
from .errors import InvalidLayout, ScheduleError
from .frames import FrameSequence, LazyFrames
from .geom import (
    ShapeClass,
    classify_shape,
    extract_contour,
    polygon_centroid,
    rasterize,
    simplify_polygon,
    transform_polygon,
)
from .layouts import KIND_AREA, PIECE_KINDS, Layout, canonical_piece, validate_layout
from .records import InstanceManifest

VARIANTS = ("FadeIn", "Rotation", "Translation")

BOARD_SIZE = 256
BOARD_MARGIN = 8
MAX_SCALE = 96
SIDEBAR_GAP = 4
SIDEBAR_SCALE = 1.0
ROTATION_STEP = 15

FADEIN_PALETTE = (
    (30, 90, 230),  # big_tri: blue
    (245, 140, 20),  # big_tri: orange
    (40, 170, 60),  # medium_tri: green
    (140, 60, 200),  # small_tri: purple
    (240, 220, 30),  # small_tri: yellow
    (128, 128, 128),  # square: gray
    (220, 30, 40),  # parallelogram: red
)

# every pair differs by at least 125 in some channel
RANDOM_POOL = tuple(
    (r, g, b)
    for r in (0, 125, 250)
    for g in (0, 125, 250)
    for b in (0, 125, 250)
    if (r, g, b) not in ((0, 0, 0), (250, 250, 250))
)

BACKGROUND = (255, 255, 255)
SILHOUETTE = (0, 0, 0)

DEFAULT_FRAMES = {"FadeIn": 81, "Rotation": 201}
TRANSLATION_FRAMES = tuple(range(61, 82, 4))

KIND_SHAPE = {
    "big_tri": ShapeClass.TRIANGLE,
    "medium_tri": ShapeClass.TRIANGLE,
    "small_tri": ShapeClass.TRIANGLE,
    "square": ShapeClass.SQUARE,
    "parallelogram": ShapeClass.PARALLELOGRAM,
}


def canvas_for(variant: str) -> tuple[int, int]:
    if variant not in VARIANTS:
        raise ValueError(f"unknown tangram variant {variant!r}")
    return (BOARD_SIZE, BOARD_SIZE) if variant == "FadeIn" else (2 * BOARD_SIZE, BOARD_SIZE)


def board_origin(variant: str) -> tuple[int, int]:
    return (0, 0) if variant == "FadeIn" else (BOARD_SIZE, 0)


def _match_pose(canon: np.ndarray, poly: np.ndarray) -> tuple[float, tuple[float, float]]:
    """(angle, translation) with poly = rotate(canon, angle about origin) + translation."""
    n = len(canon)
    scale = max(1.0, float(np.abs(canon).max()))
    for shift in range(n):
        tgt = np.roll(poly, -shift, axis=0)
        e0, e1 = canon[1] - canon[0], tgt[1] - tgt[0]
        ang = math.degrees(math.atan2(e1[1], e1[0]) - math.atan2(e0[1], e0[0]))
        rotated = transform_polygon(canon, ang, (0.0, 0.0), (0.0, 0.0))
        t = tgt[0] - rotated[0]
        if np.allclose(rotated + t, tgt, atol=1e-6 * scale):
            ang = (ang + 180.0) % 360.0 - 180.0
            return (round(ang, 6), (float(t[0]), float(t[1])))
    raise InvalidLayout("piece polygon is not a rigid motion of its canonical shape")


@dataclass(eq=False)
class PieceRecord:
    piece_id: int
    kind: str
    canonical_poly: np.ndarray  # unit square coordinates
    color: tuple[int, int, int]
    target_poly: np.ndarray  # board pixels
    initial_poly: Optional[np.ndarray]  # None when the piece starts hidden (FadeIn)
    target_pose: tuple[float, tuple[float, float]]
    initial_pose: Optional[tuple[float, tuple[float, float]]]
    rotation_offset: int = 0
    ref_area: int = 0
    ref_shape: ShapeClass = ShapeClass.UNKNOWN

    @property
    def target_centroid(self) -> np.ndarray:
        return polygon_centroid(self.target_poly)


@dataclass(eq=False)
class TangramScene:
    variant: str
    layout: Layout
    pieces: tuple
    canvas: tuple[int, int]
    scale: int
    offset: tuple[float, float]
    order: tuple[int, ...]
    seed: int
    total_frames: int
    sidebar_scale: float = SIDEBAR_SCALE
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def board_origin(self) -> tuple[int, int]:
        return board_origin(self.variant)

    def board_region(self) -> np.ndarray:
        w, h = self.canvas
        m = np.zeros((h, w), dtype=bool)
        x0, y0 = self.board_origin
        m[y0 : y0 + BOARD_SIZE, x0 : x0 + BOARD_SIZE] = True
        return m

    def target_mask(self, piece_id: int) -> np.ndarray:
        key = ("target", piece_id)
        if key not in self._cache:
            m = rasterize(self.pieces[piece_id].target_poly, *self.canvas)
            m.setflags(write=False)
            self._cache[key] = m
        return self._cache[key]

    @property
    def silhouette(self) -> np.ndarray:
        if "silhouette" not in self._cache:
            sil = np.zeros(self.canvas[::-1], dtype=bool)
            for i in range(7):
                sil |= self.target_mask(i)
            sil.setflags(write=False)
            self._cache["silhouette"] = sil
        return self._cache["silhouette"]

    def windows(self, total_frames: Optional[int] = None) -> dict[int, tuple[int, int]]:
        """Frame window ``(first, last)`` (inclusive) of each piece."""
        w = window_length(total_frames or self.total_frames)
        return {pid: (1 + i * w, (i + 1) * w) for i, pid in enumerate(self.order)}


def window_length(total_frames: int) -> int:
    w = (total_frames - 1) // 7
    if w < 4:
        raise ScheduleError(f"{total_frames} frames leave a {w}-frame window per piece (need 4)")
    return w


def placement_order() -> tuple[int, ...]:
    """Descending area, ties by piece id."""
    return tuple(sorted(range(7), key=lambda i: (-KIND_AREA[PIECE_KINDS[i]], i)))


def draw_palette(variant: str, seed: int) -> tuple:
    if variant == "FadeIn":
        return FADEIN_PALETTE
    rng = random.Random(seed * 7919 + 17)
    return tuple(rng.sample(RANDOM_POOL, 7))


def draw_rotation_offsets(variant: str, seed: int) -> tuple:
    if variant != "Rotation":
        return (0,) * 7
    rng = random.Random(seed * 104729 + 3)
    out = []
    for _ in range(7):
        deg = ROTATION_STEP * rng.randrange(1, 360 // ROTATION_STEP)
        out.append(deg - 360 if deg > 180 else deg)
    return tuple(out)


def default_total_frames(variant: str, seed: int) -> int:
    if variant == "Translation":
        return random.Random(seed * 31 + 5).choice(TRANSLATION_FRAMES)
    return DEFAULT_FRAMES[variant]


def board_scale(layout: Layout) -> tuple[int, tuple[float, float]]:
    """Integer pixels per tangram unit and the pixel offset of the layout origin."""
    x0, y0, x1, y1 = layout.bbox()
    extent = max(x1 - x0, y1 - y0)
    s = min(MAX_SCALE, int((BOARD_SIZE - 2 * BOARD_MARGIN) // extent))
    if s < 16:
        raise InvalidLayout(f"layout {layout.name!r} is too large for the board")
    ox = (BOARD_SIZE - int(math.ceil(s * (x1 - x0)))) // 2 - s * x0
    oy = (BOARD_SIZE - int(math.ceil(s * (y1 - y0)))) // 2 - s * y0
    return s, (float(ox), float(oy))


def _sidebar_slots(polys: dict[int, np.ndarray], order) -> dict[int, tuple[float, float]]:
    """Shelf-pack one circumscribed circle per piece into the left half."""
    slots = {}
    x, y, row_h = SIDEBAR_GAP, SIDEBAR_GAP, 0
    for pid in order:
        poly = polys[pid]
        c = polygon_centroid(poly)
        d = int(math.ceil(2 * np.hypot(*(poly - c).T).max())) + 2
        if x + d > BOARD_SIZE - SIDEBAR_GAP:
            x, y, row_h = SIDEBAR_GAP, y + row_h + SIDEBAR_GAP, 0
        if x + d > BOARD_SIZE - SIDEBAR_GAP or y + d > BOARD_SIZE - SIDEBAR_GAP:
            raise InvalidLayout("pieces do not fit in the sidebar")
        slots[pid] = (x + d / 2.0, y + d / 2.0)
        x += d + SIDEBAR_GAP
        row_h = max(row_h, d)
    return slots


def _raster_shape(mask: np.ndarray) -> ShapeClass:
    return classify_shape(simplify_polygon(extract_contour(mask)))


def assemble_scene(
    layout: Layout,
    variant: str,
    colors,
    rotation_offsets,
    seed: int = 0,
    total_frames: Optional[int] = None,
    sidebar_scale: float = SIDEBAR_SCALE,
) -> TangramScene:
    """Deterministic scene geometry from a layout and its drawn parameters."""
    canvas = canvas_for(variant)
    validate_layout(layout)
    colors = tuple(tuple(int(v) for v in c) for c in colors)
    if len(set(colors)) != 7:
        raise InvalidLayout("piece colors must be 7 distinct colors")
    s, (ox, oy) = board_scale(layout)
    bx, by = board_origin(variant)
    order = placement_order()
    targets = {pid: layout.polygon(pid) * s + (ox + bx, oy + by) for pid in range(7)}

    # disjoint at pixel level, not only geometrically
    occupied = np.zeros(canvas[::-1], dtype=np.int16)
    for pid in range(7):
        occupied += rasterize(targets[pid], *canvas)
    if occupied.max() > 1:
        raise InvalidLayout(f"layout {layout.name!r} has overlapping pieces")

    initials: dict[int, Optional[np.ndarray]] = {}
    if variant == "FadeIn":
        initials = {pid: None for pid in range(7)}
    else:
        scaled = {}
        for pid in range(7):
            c = polygon_centroid(targets[pid])
            scaled[pid] = (targets[pid] - c) * sidebar_scale + c
        slots = _sidebar_slots(scaled, order)
        for pid in range(7):
            c = polygon_centroid(scaled[pid])
            initials[pid] = transform_polygon(scaled[pid], rotation_offsets[pid], tuple(c), tuple(np.subtract(slots[pid], c)))

    pieces = []
    for pid in range(7):
        kind = PIECE_KINDS[pid]
        canon = canonical_piece(pid)
        init = initials[pid]
        ref_poly = targets[pid] if init is None else init
        mask = rasterize(ref_poly, *canvas)
        init_pose = None
        if init is not None:
            init_pose = _match_pose(canon * s * sidebar_scale, init)
        pieces.append(
            PieceRecord(
                piece_id=pid,
                kind=kind,
                canonical_poly=canon,
                color=colors[pid],
                target_poly=targets[pid],
                initial_poly=init,
                target_pose=_match_pose(canon * s, targets[pid]),
                initial_pose=init_pose,
                rotation_offset=int(rotation_offsets[pid]),
                ref_area=int(mask.sum()),
                ref_shape=_raster_shape(mask),
            )
        )
    if total_frames is None:
        total_frames = default_total_frames(variant, seed)
    window_length(total_frames)
    return TangramScene(
        variant=variant,
        layout=layout,
        pieces=tuple(pieces),
        canvas=canvas,
        scale=s,
        offset=(ox, oy),
        order=order,
        seed=seed,
        total_frames=int(total_frames),
        sidebar_scale=sidebar_scale,
    )


def build_scene(layout: Layout, variant: str, seed: int, total_frames: Optional[int] = None) -> TangramScene:
    return assemble_scene(
        layout,
        variant,
        draw_palette(variant, seed),
        draw_rotation_offsets(variant, seed),
        seed=seed,
        total_frames=total_frames,
    )


# --- golden assembly video ---------------------------------------------------


def piece_state(scene: TangramScene, pid: int, progress: float):
    """(polygon, color) of a piece at window progress in [0, 1]; polygon None if hidden."""
    rec = scene.pieces[pid]
    tgt = rec.target_poly
    if progress >= 1.0:
        return tgt, rec.color
    if scene.variant == "FadeIn":
        if progress <= 0.0:
            return None, rec.color
        color = tuple(int(v) for v in np.rint(np.asarray(rec.color) * progress))
        return tgt, color
    tc = polygon_centroid(tgt)
    init = rec.initial_poly
    slot = polygon_centroid(init)
    rel = tgt - tc
    if progress <= 0.0:
        return init, rec.color
    w = window_length(scene.total_frames)
    j = progress * w
    if scene.variant == "Rotation":
        h = w // 2
        if j <= h:
            remaining = rec.rotation_offset * (1.0 - j / h)
            rel = transform_polygon(rel * scene.sidebar_scale, remaining, (0.0, 0.0), (0.0, 0.0))
            return rel + slot, rec.color
        q = (j - h) / (w - h)
    else:
        q = j / w
    center = slot + (tc - slot) * q
    return rel + center, rec.color


def _paint(img: np.ndarray, poly, color, canvas) -> None:
    if poly is None:
        return
    img[rasterize(poly, *canvas)] = color


def _base_image(scene: TangramScene, active_index: int) -> np.ndarray:
    w, h = scene.canvas
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = BACKGROUND
    img[scene.silhouette] = SILHOUETTE
    for k, pid in enumerate(scene.order):
        if k < active_index:
            img[scene.target_mask(pid)] = scene.pieces[pid].color
        elif k > active_index:
            poly, color = piece_state(scene, pid, 0.0)
            _paint(img, poly, color, scene.canvas)
    return img


def frame_progress(total_frames: int, t: int) -> tuple[int, float]:
    """(index into placement order, progress) of the piece moving at frame t."""
    w = window_length(total_frames)
    if t <= 0:
        return 0, 0.0
    if t > 7 * w:
        return 6, 1.0
    return (t - 1) // w, ((t - 1) % w + 1) / w


def synthesize_assembly_video(scene: TangramScene, total_frames: Optional[int] = None) -> FrameSequence:
    """Golden video: pieces move one at a time in placement order and then stay put."""
    total = int(total_frames or scene.total_frames)
    window_length(total)
    if total != scene.total_frames:
        scene = TangramScene(
            scene.variant, scene.layout, scene.pieces, scene.canvas, scene.scale, scene.offset,
            scene.order, scene.seed, total, scene.sidebar_scale,
        )
    bases: dict[int, np.ndarray] = {}

    def render(t: int) -> np.ndarray:
        k, p = frame_progress(total, t)
        if k not in bases:
            base = _base_image(scene, k)
            base.setflags(write=False)
            bases[k] = base
        img = bases[k].copy()
        poly, color = piece_state(scene, scene.order[k], p)
        _paint(img, poly, color, scene.canvas)
        return img

    return FrameSequence(LazyFrames(total, render), *scene.canvas)


def make_tangram_instance(
    layout: Layout,
    variant: str,
    seed: int,
    *,
    instance_id: Optional[str] = None,
    group: str = "",
    splits: tuple = ("iid",),
    total_frames: Optional[int] = None,
) -> InstanceManifest:
    scene = build_scene(layout, variant, seed, total_frames)
    return InstanceManifest(
        task="tangram",
        instance_id=instance_id or f"tangram-{variant.lower()}-{layout.name}-{seed}",
        seed=seed,
        group=group or variant,
        splits=tuple(splits),
        prompt_text=prompts.TANGRAM[variant],
        canvas=scene.canvas,
        scene=scene,
    )


def scene_area_check(scene: TangramScene) -> bool:
    """Silhouette area equals the sum of the target piece areas."""
    total = sum(int(scene.target_mask(i).sum()) for i in range(7))
    return total == int(scene.silhouette.sum())

