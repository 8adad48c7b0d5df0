"""Rendering of maze boards and golden solution videos.

Agent positions are ``(row, col)`` floats in cell units with integer values
at cell centres, so linear interpolation between path cells is trivial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ScheduleError, TaskMismatch
from .frames import FrameSequence, LazyFrames
from .icons import sprite
from .maze_gen import MazeSpec, replay
from .records import MAZE_CANVAS, FrameSchedule, InstanceManifest

WHITE = (255, 255, 255)
BLACK = (0, 0, 0)
GOAL_RED = (230, 30, 30)
CANVAS_COLOR = (255, 255, 255)

BOARD_MARGIN = 20
SPRITE_SCALE = 0.6
GOAL_RADIUS = 0.3


@dataclass(frozen=True)
class BoardGeometry:
    x0: int
    y0: int
    cell: int
    wall: int
    rows: int
    cols: int

    def cell_center_px(self, row: float, col: float) -> tuple[float, float]:
        return (self.x0 + (col + 0.5) * self.cell, self.y0 + (row + 0.5) * self.cell)

    def px_to_cell_coords(self, x: float, y: float) -> tuple[float, float]:
        """Continuous (row, col) with cell (r, c) spanning [r, r+1) x [c, c+1)."""
        return ((y - self.y0) / self.cell, (x - self.x0) / self.cell)

    @property
    def width(self) -> int:
        return self.cell * self.cols

    @property
    def height(self) -> int:
        return self.cell * self.rows

    @property
    def sprite_size(self) -> int:
        return max(3, int(round(SPRITE_SCALE * self.cell)))


def board_geometry(rows: int, cols: int, canvas: tuple[int, int] = MAZE_CANVAS) -> BoardGeometry:
    w, h = canvas
    cell = (min(w, h) - 2 * BOARD_MARGIN) // max(rows, cols)
    if cell < 8:
        raise ValueError(f"canvas {canvas} too small for a {rows}x{cols} maze")
    x0 = (w - cell * cols) // 2
    y0 = (h - cell * rows) // 2
    return BoardGeometry(x0, y0, cell, max(2, cell // 12), rows, cols)


def _fill_rect(img: np.ndarray, x0: float, y0: float, x1: float, y1: float, color) -> None:
    h, w = img.shape[:2]
    a, b = max(0, int(math.floor(x0))), min(w, int(math.ceil(x1)))
    c, d = max(0, int(math.floor(y0))), min(h, int(math.ceil(y1)))
    if a < b and c < d:
        img[c:d, a:b] = color


def goal_disc_mask(spec: MazeSpec, geo: BoardGeometry, canvas: tuple[int, int]) -> np.ndarray:
    w, h = canvas
    cx, cy = geo.cell_center_px(*spec.goal)
    ys, xs = np.ogrid[:h, :w]
    return (xs + 0.5 - cx) ** 2 + (ys + 0.5 - cy) ** 2 <= (GOAL_RADIUS * geo.cell) ** 2


def _background(spec: MazeSpec, canvas: tuple[int, int]) -> np.ndarray:
    w, h = canvas
    geo = board_geometry(spec.rows, spec.cols, canvas)
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = CANVAS_COLOR
    _fill_rect(img, geo.x0, geo.y0, geo.x0 + geo.width, geo.y0 + geo.height, WHITE)
    half = geo.wall / 2.0
    x0, y0, cs = geo.x0, geo.y0, geo.cell
    # outer border
    _fill_rect(img, x0 - half, y0 - half, x0 + geo.width + half, y0 + half, BLACK)
    _fill_rect(img, x0 - half, y0 + geo.height - half, x0 + geo.width + half, y0 + geo.height + half, BLACK)
    _fill_rect(img, x0 - half, y0 - half, x0 + half, y0 + geo.height + half, BLACK)
    _fill_rect(img, x0 + geo.width - half, y0 - half, x0 + geo.width + half, y0 + geo.height + half, BLACK)
    for (r1, c1), (r2, c2) in spec.walls:
        if r1 == r2:  # vertical wall between horizontally adjacent cells
            x = x0 + max(c1, c2) * cs
            _fill_rect(img, x - half, y0 + r1 * cs - half, x + half, y0 + (r1 + 1) * cs + half, BLACK)
        else:
            y = y0 + max(r1, r2) * cs
            _fill_rect(img, x0 + c1 * cs - half, y - half, x0 + (c1 + 1) * cs + half, y + half, BLACK)
    if spec.goal is not None:
        img[goal_disc_mask(spec, geo, canvas)] = GOAL_RED
    return img


@lru_cache(maxsize=8)
def _cached_background(spec: MazeSpec, canvas: tuple[int, int]) -> np.ndarray:
    img = _background(spec, canvas)
    img.setflags(write=False)
    return img


def maze_background(spec: MazeSpec, canvas: tuple[int, int] = MAZE_CANVAS) -> np.ndarray:
    """Board with walls and goal disc, no agent."""
    return _cached_background(spec, tuple(canvas)).copy()


def paste_sprite(img: np.ndarray, icon_id: int, cx: float, cy: float, size: int) -> None:
    mask, rgb = sprite(icon_id, size)
    h, w = img.shape[:2]
    left = int(math.floor(cx - size / 2.0 + 0.5))
    top = int(math.floor(cy - size / 2.0 + 0.5))
    a, b = max(0, left), min(w, left + size)
    c, d = max(0, top), min(h, top + size)
    if a >= b or c >= d:
        return
    m = mask[c - top : d - top, a - left : b - left]
    img[c:d, a:b][m] = rgb[c - top : d - top, a - left : b - left][m]


def render_maze_frame(
    spec: MazeSpec,
    agent_pos: tuple[float, float] | None,
    canvas: tuple[int, int] = MAZE_CANVAS,
    icon_id: int | None = None,
) -> np.ndarray:
    """One frame: board, goal disc and (unless ``agent_pos`` is None) the sprite."""
    img = maze_background(spec, canvas)
    if agent_pos is not None:
        row, col = agent_pos
        if not (-0.5 <= row <= spec.rows - 0.5 and -0.5 <= col <= spec.cols - 0.5):
            raise ValueError(f"agent position {agent_pos} outside the grid")
        geo = board_geometry(spec.rows, spec.cols, canvas)
        cx, cy = geo.cell_center_px(row, col)
        paste_sprite(img, spec.icon_id if icon_id is None else icon_id, cx, cy, geo.sprite_size)
    return img


def path_position(cells: list[tuple[int, int]], u: float) -> tuple[float, float]:
    """Point at arc parameter ``u`` (in steps) along a cell path."""
    L = len(cells) - 1
    if L == 0 or u <= 0:
        return (float(cells[0][0]), float(cells[0][1]))
    if u >= L:
        return (float(cells[-1][0]), float(cells[-1][1]))
    k = int(math.floor(u))
    f = u - k
    (r0, c0), (r1, c1) = cells[k], cells[k + 1]
    return (r0 + (r1 - r0) * f, c0 + (c1 - c0) * f)


def schedule_positions(cells: list[tuple[int, int]], schedule: FrameSchedule) -> list[tuple[float, float]]:
    """Agent position for every frame of the schedule."""
    L = len(cells) - 1
    schedule.validate(L)
    m = schedule.motion_frames(L)
    us = [0.0] * schedule.lead_hold
    us += [L * j / (m - 1) for j in range(m)]
    us += [float(L)] * schedule.tail_hold
    return [path_position(cells, u) for u in us]


def render_positions(
    spec: MazeSpec,
    positions: list[tuple[float, float] | None],
    canvas: tuple[int, int] = MAZE_CANVAS,
    icon_id: int | None = None,
) -> FrameSequence:
    """Lazy video with the agent at the given per-frame positions (None hides it)."""
    canvas = tuple(canvas)
    geo = board_geometry(spec.rows, spec.cols, canvas)
    icon = spec.icon_id if icon_id is None else icon_id
    positions = list(positions)

    def render(i: int) -> np.ndarray:
        img = maze_background(spec, canvas)
        pos = positions[i]
        if pos is not None:
            cx, cy = geo.cell_center_px(*pos)
            paste_sprite(img, icon, cx, cy, geo.sprite_size)
        return img

    return FrameSequence(LazyFrames(len(positions), render), canvas[0], canvas[1])


def synthesize_solution_video(
    manifest: InstanceManifest, schedule: FrameSchedule | None = None
) -> FrameSequence:
    if manifest.task != "maze" or manifest.maze is None:
        raise TaskMismatch(f"{manifest.instance_id} is not a maze instance")
    schedule = schedule or manifest.schedule
    if schedule is None:
        raise ScheduleError("no schedule given and manifest has none")
    cells = replay(manifest.maze, manifest.actions)
    return render_positions(manifest.maze, schedule_positions(cells, schedule), manifest.canvas)
