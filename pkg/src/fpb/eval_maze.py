"""Pixel-level maze video evaluation: agent tracking, path discretization, EM/PR."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import TaskMismatch, TrackingFailure
from .geom import label_components
from .maze_gen import MazeSpec, replay
from .maze_render import BoardGeometry, board_geometry, maze_background
from .records import EvalReport, InstanceManifest

TAG_BOUNDARY = "boundary violation"
TAG_KINEMATIC = "kinematic inconsistency"
TAG_STRUCTURAL = "structural distortion"
TAG_WRONG_MOVE = "wrong movement actions"
TAG_INCOMPLETE = "incomplete path"
TAG_OVERSHOOT = "overshoot"
TAG_TRACKING = "tracking failure"


@dataclass(frozen=True)
class MazeEvalParams:
    tau: int = 30
    min_area: int = 25
    continuity_radius: float = 1.5  # in cell widths
    resample_per_step: int = 20
    hysteresis: float = 0.15  # in cell widths
    max_gap_fraction: float = 0.5


@dataclass
class TrajectoryTrace:
    samples: list[tuple[int, tuple[float, float], int]] = field(default_factory=list)
    gaps: list[int] = field(default_factory=list)
    violation_frame: Optional[int] = None
    tags: list[str] = field(default_factory=list)

    @property
    def points(self) -> np.ndarray:
        if not self.samples:
            return np.zeros((0, 2))
        return np.array([c for _, c, _ in self.samples], dtype=float)


def build_background(manifest: InstanceManifest) -> np.ndarray:
    if manifest.task != "maze" or manifest.maze is None:
        raise TaskMismatch(f"{manifest.instance_id} is not a maze instance")
    return maze_background(manifest.maze, tuple(manifest.canvas))


def median_background(frames: Sequence[np.ndarray]) -> np.ndarray:
    """Per-pixel temporal median; fallback when no manifest is available."""
    stack = np.stack([np.asarray(f) for f in frames])
    return np.median(stack, axis=0).astype(np.uint8)


def _board_window(geo: BoardGeometry, shape: tuple[int, int]) -> tuple[slice, slice]:
    pad = geo.wall + 1
    h, w = shape
    return (
        slice(max(0, geo.y0 - pad), min(h, geo.y0 + geo.height + pad)),
        slice(max(0, geo.x0 - pad), min(w, geo.x0 + geo.width + pad)),
    )


def changed_pixels(frame: np.ndarray, background: np.ndarray, tau: int) -> np.ndarray:
    """Pixels whose max per-channel absolute difference exceeds ``tau``."""
    d = np.maximum(frame, background) - np.minimum(frame, background)
    return (d[..., 0] > tau) | (d[..., 1] > tau) | (d[..., 2] > tau)


def extract_agent_trajectory(
    frames: Sequence[np.ndarray],
    background: np.ndarray,
    geo: BoardGeometry,
    start_px: tuple[float, float],
    params: MazeEvalParams = MazeEvalParams(),
) -> TrajectoryTrace:
    """Track the moving agent by background subtraction.

    The search is limited to the board area.  A frame without any
    sufficiently large foreground blob is a gap; a frame whose nearest blob
    lies beyond the continuity radius ends the trace.
    """
    trace = TrajectoryTrace()
    ys, xs = _board_window(geo, background.shape[:2])
    bg = np.asarray(background)[ys, xs]
    radius = params.continuity_radius * geo.cell
    prev: Optional[np.ndarray] = None
    n = len(frames)
    for i in range(n):
        frame = np.asarray(frames[i])
        if frame.shape != background.shape:
            raise TrackingFailure(f"frame {i} shape {frame.shape} != background {background.shape}")
        win = frame[ys, xs]
        diff = changed_pixels(win, bg, params.tau)
        rows = np.flatnonzero(diff.any(axis=1))
        if len(rows) == 0:
            trace.gaps.append(i)
            continue
        cols = np.flatnonzero(diff.any(axis=0))
        r0, c0 = rows[0], cols[0]
        _, _, areas, cents = label_components(diff[r0 : rows[-1] + 1, c0 : cols[-1] + 1])
        ok = areas >= params.min_area
        if not ok.any():
            trace.gaps.append(i)
            continue
        areas, cents = areas[ok], cents[ok] + (xs.start + c0, ys.start + r0)
        ref = prev if prev is not None else np.asarray(start_px, dtype=float)
        d = np.hypot(cents[:, 0] - ref[0], cents[:, 1] - ref[1])
        k = int(np.argmin(d))
        if prev is not None and d[k] > radius:
            trace.violation_frame = i
            trace.tags.append(TAG_KINEMATIC)
            break
        prev = cents[k]
        trace.samples.append((i, (float(prev[0]), float(prev[1])), int(areas[k])))
    if n and len(trace.gaps) > params.max_gap_fraction * n:
        raise TrackingFailure(f"agent not detected in {len(trace.gaps)} of {n} frames")
    if not trace.samples:
        raise TrackingFailure("agent never detected")
    blob = np.array([a for _, _, a in trace.samples], dtype=float)
    med = float(np.median(blob))
    if np.any((blob < 0.5 * med) | (blob > 2.0 * med)):
        trace.tags.append(TAG_STRUCTURAL)
    return trace


def resample_by_arclength(points: np.ndarray, m: int) -> np.ndarray:
    """``m`` points equally spaced in cumulative arc length along a polyline."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("cannot resample an empty trajectory")
    if m < 2:
        raise ValueError("m must be >= 2")
    seg = np.hypot(*np.diff(pts, axis=0).T) if len(pts) > 1 else np.zeros(0)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total == 0:
        return np.repeat(pts[:1], m, axis=0)
    # drop zero-length segments so s is strictly increasing for interpolation
    keep = np.concatenate([[True], seg > 0])
    s, pts = s[keep], pts[keep]
    targets = np.linspace(0.0, total, m)
    return np.stack([np.interp(targets, s, pts[:, 0]), np.interp(targets, s, pts[:, 1])], axis=1)


def trace_to_cells(
    polyline: np.ndarray, geo: BoardGeometry, hysteresis: float = 0.15
) -> tuple[list[tuple[int, int]], list[str]]:
    """Map board-pixel points to grid cells, collapsing repeats.

    A point closer than ``hysteresis`` cell widths to the border of its cell
    keeps the previous point's cell.
    """
    cells: list[tuple[int, int]] = []
    tags: list[str] = []
    prev: Optional[tuple[int, int]] = None
    for x, y in np.asarray(polyline, dtype=float).reshape(-1, 2):
        fr, fc = geo.px_to_cell_coords(x, y)
        r, c = int(math.floor(fr)), int(math.floor(fc))
        if not (0 <= r < geo.rows and 0 <= c < geo.cols):
            if TAG_BOUNDARY not in tags:
                tags.append(TAG_BOUNDARY)
            r, c = min(max(r, 0), geo.rows - 1), min(max(c, 0), geo.cols - 1)
            fr, fc = min(max(fr, r), r + 1.0), min(max(fc, c), c + 1.0)
        cell = (r, c)
        if prev is not None and cell != prev:
            dr, dc = fr - r, fc - c
            if min(dr, 1.0 - dr, dc, 1.0 - dc) < hysteresis:
                cell = prev
        if cell != prev:
            cells.append(cell)
            prev = cell
    return cells, tags


def score_em_pr(
    cells: Sequence[tuple[int, int]], spec: MazeSpec, actions: Sequence[str]
) -> tuple[int, float, list[str]]:
    """Exact match and longest-correct-prefix progress rate.

    ``k`` is the number of golden steps reproduced, in order and through
    open passages, from the start cell.  PR = k / L.  EM requires the whole
    candidate path to equal the golden path.
    """
    golden = replay(spec, actions)
    L = len(golden) - 1
    cells = [tuple(c) for c in cells]
    tags: list[str] = []
    legal = [True]
    for a, b in zip(cells, cells[1:]):
        if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
            legal.append(False)
            if TAG_KINEMATIC not in tags:
                tags.append(TAG_KINEMATIC)
        elif spec.blocked(a, b):
            legal.append(False)
            if TAG_BOUNDARY not in tags:
                tags.append(TAG_BOUNDARY)
        else:
            legal.append(True)
    k = -1
    for i, cell in enumerate(cells):
        if i > L or cell != golden[i] or not legal[i]:
            break
        k = i
    k = max(k, 0)
    em = int(cells == golden and all(legal))
    pr = k / L if (cells and cells[0] == golden[0]) else 0.0
    if not em:
        if len(cells) > k + 1 and k < L and all(legal):
            tags.append(TAG_WRONG_MOVE)
        elif len(cells) == k + 1 and k < L:
            tags.append(TAG_INCOMPLETE)
        elif k == L and len(cells) > L + 1:
            tags.append(TAG_OVERSHOOT)
    return em, pr, tags


def evaluate_maze(
    frames: Sequence[np.ndarray],
    manifest: InstanceManifest,
    params: MazeEvalParams = MazeEvalParams(),
    background: Optional[np.ndarray] = None,
) -> EvalReport:
    if manifest.task != "maze" or manifest.maze is None:
        raise TaskMismatch(f"{manifest.instance_id} is not a maze instance")
    spec = manifest.maze
    geo = board_geometry(spec.rows, spec.cols, tuple(manifest.canvas))
    report = EvalReport(manifest.instance_id, "maze", manifest.group, tuple(manifest.splits))
    if background is None:
        background = build_background(manifest)
    start_px = geo.cell_center_px(*spec.start)
    try:
        trace = extract_agent_trajectory(frames, background, geo, start_px, params)
    except TrackingFailure as exc:
        report.metrics = {"em": 0.0, "pr": 0.0}
        report.failure_tags = [TAG_TRACKING]
        report.diagnostics = {"tracking": str(exc)}
        return report
    L = len(manifest.actions)
    poly = resample_by_arclength(trace.points, max(2, params.resample_per_step * L))
    cells, cell_tags = trace_to_cells(poly, geo, params.hysteresis)
    em, pr, score_tags = score_em_pr(cells, spec, manifest.actions)
    tags = []
    for t in trace.tags + cell_tags + score_tags:
        if t not in tags:
            tags.append(t)
    if em:
        tags = [t for t in tags if t == TAG_STRUCTURAL]
    report.metrics = {"em": float(em), "pr": float(pr)}
    report.failure_tags = tags
    report.diagnostics = {
        "cells": [list(c) for c in cells],
        "golden_cells": [list(c) for c in replay(spec, manifest.actions)],
        "n_samples": len(trace.samples),
        "gaps": len(trace.gaps),
        "violation_frame": trace.violation_frame,
    }
    return report
