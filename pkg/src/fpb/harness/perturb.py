"""Deterministic perturbations of golden videos, used as stress fixtures for the evaluators.

Maze modes re-render the agent along an altered cell path; tangram modes
edit golden frames pixel by pixel.  Every mode records what it did (step,
piece, frame range) so tests can check the evaluator's response.
"""

from __future__ import annotations

import colorsys
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import UsageError
from ..geom import dilate, fill_holes, polygon_centroid, rasterize
from ..maze_gen import ACTIONS, MazeSpec, replay, solve_shortest_path
from ..maze_render import path_position, render_positions
from ..records import InstanceManifest
from ..tangram_gen import synthesize_assembly_video
from ..video_io import write_frames
from .dataset import list_instances, load_instance, run_jobs

MAZE_MODES = ("wrong_turn", "wall_cross", "teleport", "freeze")
TANGRAM_MODES = ("shape_distort", "color_drift", "piece_vanish", "teleport")
MODES = ("wrong_turn", "wall_cross", "teleport", "freeze", "shape_distort", "color_drift", "piece_vanish")

DEFAULT_MAGNITUDE = {"shape_distort": 1.5, "color_drift": 0.5, "piece_vanish": 0.5, "teleport": 1.0}
MAGNITUDE_RANGE = {
    "shape_distort": (1.1, 3.0),
    "color_drift": (0.05, 0.95),
    "piece_vanish": (0.05, 1.0),
    "teleport": (0.25, 3.0),
}


class NotApplicable(Exception):
    """The mode cannot be applied to this particular instance."""


@dataclass(frozen=True)
class PerturbSpec:
    mode: str
    magnitude: Optional[float] = None
    at_step: Union[int, float] = 0.5  # step index (int) or fraction of the path / video (float)

    def validated(self, task: str) -> "PerturbSpec":
        if self.mode not in MODES:
            raise UsageError(f"unknown perturbation mode {self.mode!r}")
        allowed = MAZE_MODES if task == "maze" else TANGRAM_MODES
        if self.mode not in allowed:
            raise UsageError(f"mode {self.mode!r} does not apply to {task} instances")
        mag = self.magnitude
        if mag is None:
            mag = DEFAULT_MAGNITUDE.get(self.mode, 0.0) if task == "tangram" else 0.0
        if task == "tangram":
            lo, hi = MAGNITUDE_RANGE[self.mode]
            if not lo <= mag <= hi:
                raise UsageError(f"{self.mode} magnitude {mag} outside [{lo}, {hi}]")
        if isinstance(self.at_step, float) and not 0.0 <= self.at_step <= 1.0:
            raise UsageError("fractional at_step must lie in [0, 1]")
        if isinstance(self.at_step, int) and self.at_step < 0:
            raise UsageError("at_step must be >= 0")
        return replace(self, magnitude=float(mag))


# --- maze --------------------------------------------------------------------


def _path_between(spec: MazeSpec, a, b) -> list:
    tmp = replace(spec, start=tuple(a), goal=tuple(b))
    return replay(tmp, solve_shortest_path(tmp)) if a != b else [tuple(a)]


def _step_index(at, L: int) -> int:
    k = at if isinstance(at, int) else int(round(at * L))
    return min(max(k, 0), L - 1)


def _search_steps(k: int, L: int) -> list[int]:
    """Steps to try: from k forward, then backward from k - 1."""
    return list(range(k, L)) + list(range(k - 1, -1, -1))


def segment_positions(segments: Sequence[list], total: int, lead: int, tail: int = 4) -> list:
    """Per-frame agent positions moving at constant speed along each segment.

    Consecutive segments are joined without interpolation, so a gap between
    the end of one and the start of the next is a jump.
    """
    steps = [len(s) - 1 for s in segments]
    motion = total - lead - tail
    if motion < len(segments) * 2:
        raise NotApplicable("not enough frames for the perturbed path")
    S = sum(steps)
    alloc = [max(2, int(round(motion * n / S))) if S else motion // len(segments) for n in steps]
    alloc[-1] = motion - sum(alloc[:-1])
    if alloc[-1] < 1:
        raise NotApplicable("not enough frames for the perturbed path")
    pos = [path_position(segments[0], 0.0)] * lead
    for seg, n, f in zip(segments, steps, alloc):
        pos += [path_position(seg, n * j / (f - 1)) if f > 1 else path_position(seg, n) for j in range(f)]
    pos += [pos[-1]] * tail
    return pos


def perturb_maze(m: InstanceManifest, spec: PerturbSpec):
    maze = m.maze
    golden = replay(maze, m.actions)
    L = len(golden) - 1
    k = _step_index(spec.at_step, L)
    total = m.schedule.total_frames
    lead = m.schedule.lead_hold
    info: dict = {"mode": spec.mode, "step": k, "path_len": L}

    if spec.mode == "freeze":
        segments = [golden[: k + 1]]
    elif spec.mode in ("wall_cross", "wrong_turn"):
        for kk in _search_steps(k, L):
            cur, nxt = golden[kk], golden[kk + 1]
            prev = golden[kk - 1] if kk else None
            options = []
            for dr, dc in ACTIONS.values():
                n = (cur[0] + dr, cur[1] + dc)
                if not maze.in_bounds(n) or n == nxt:
                    continue
                walled = maze.blocked(cur, n)
                if spec.mode == "wall_cross" and walled:
                    options.append(n)
                elif spec.mode == "wrong_turn" and not walled:
                    options.append(n)
            if spec.mode == "wrong_turn" and len(options) > 1 and prev in options:
                options.remove(prev)
            if options:
                n = options[0]
                segments = [golden[: kk + 1] + _path_between(maze, n, maze.goal)]
                info.update(step=kk, detour=list(n))
                break
        else:
            raise NotApplicable(f"no {spec.mode} option anywhere along the path")
    elif spec.mode == "teleport":
        cells = list(maze.cells())
        for kk in _search_steps(k, L):
            cur = golden[kk]
            far = max(cells, key=lambda c: (math.hypot(c[0] - cur[0], c[1] - cur[1]), c))
            if math.hypot(far[0] - cur[0], far[1] - cur[1]) > 1.5:
                segments = [golden[: kk + 1], _path_between(maze, far, maze.goal)]
                info.update(step=kk, jump_to=list(far))
                break
        else:
            raise NotApplicable("maze too small for a teleport beyond the continuity radius")
    else:
        raise UsageError(f"mode {spec.mode!r} does not apply to maze instances")
    positions = segment_positions(segments, total, lead)
    return render_positions(maze, positions, m.canvas), info


# --- tangram -----------------------------------------------------------------


def _frame_from(at, total: int) -> int:
    return at if isinstance(at, int) else int(round(at * (total - 1)))


def _materialize(video) -> list:
    return [np.array(video[i]) for i in range(len(video))]


def _exact(frame: np.ndarray, color) -> np.ndarray:
    return np.all(frame == np.asarray(color, dtype=np.uint8), axis=2)


def perturb_tangram(m: InstanceManifest, spec: PerturbSpec):
    scene = m.scene
    frames = _materialize(synthesize_assembly_video(scene))
    T = len(frames)
    windows = scene.windows()
    sil = scene.silhouette
    allowed = dilate(sil, 2)
    info: dict = {"mode": spec.mode, "magnitude": spec.magnitude}

    if spec.mode == "shape_distort":
        best = None
        for pid in range(7):
            rec = scene.pieces[pid]
            c = polygon_centroid(rec.target_poly)
            grown = rasterize((rec.target_poly - c) * spec.magnitude + c, *scene.canvas)
            others = np.zeros_like(sil)
            for j in range(7):
                if j != pid:
                    others |= scene.target_mask(j)
            vis = scene.target_mask(pid) | (grown & ~others)
            overflow = int((vis & ~allowed).sum())
            enclosed = int((fill_holes(vis) & others).sum())
            if enclosed == 0 and (best is None or overflow > best[0]):
                best = (overflow, pid, grown)
        if best is None or best[0] == 0:
            raise NotApplicable("no piece can be enlarged past the silhouette")
        _, pid, grown = best
        t0 = max(_frame_from(spec.at_step, T), windows[pid][1])
        color = scene.pieces[pid].color
        for t in range(t0, T):
            f = frames[t]
            under = grown & (_exact(f, (0, 0, 0)) | _exact(f, (255, 255, 255)))
            f[under] = color
        info.update(piece=pid, first_frame=t0)
    elif spec.mode == "color_drift":
        palette = [np.array(p.color) for p in scene.pieces]
        chosen = None
        for pid in scene.order:
            r, g, b = (v / 255.0 for v in scene.pieces[pid].color)
            h, s, v = colorsys.rgb_to_hsv(r, g, b)
            new = np.rint(np.array(colorsys.hsv_to_rgb((h + spec.magnitude) % 1.0, s, v)) * 255).astype(int)
            far = all(np.abs(new - c).max() > 60 for c in palette)
            if far and new.max() > 60 and np.abs(new - 255).max() > 60:
                chosen = (pid, tuple(int(x) for x in new))
                break
        if chosen is None:
            raise NotApplicable("no piece color drifts clear of the palette")
        pid, new = chosen
        t0 = max(1, _frame_from(spec.at_step, T))
        for t in range(t0, T):
            f = frames[t]
            f[_exact(f, scene.pieces[pid].color)] = new
        info.update(piece=pid, first_frame=t0, new_color=list(new))
    elif spec.mode == "piece_vanish":
        pid = scene.order[0]
        t0 = int(math.ceil((1.0 - spec.magnitude) * (T - 1)))
        for t in range(t0, T):
            f = frames[t]
            hit = _exact(f, scene.pieces[pid].color)
            f[hit & sil] = (0, 0, 0)
            f[hit & ~sil] = (255, 255, 255)
        info.update(piece=pid, first_frame=t0)
    elif spec.mode == "teleport":
        pid = scene.order[-1]
        rec = scene.pieces[pid]
        others = np.zeros_like(sil)
        for j in range(7):
            if j != pid:
                others |= scene.target_mask(j)
        board = scene.board_region()
        moved = None
        unit = scene.scale * spec.magnitude
        for k in range(1, 13):
            for ang in range(0, 360, 45):
                d = np.array([math.cos(math.radians(ang)), math.sin(math.radians(ang))]) * unit * k / 4
                poly = rec.target_poly + d
                mask = rasterize(poly, *scene.canvas)
                cx, cy = polygon_centroid(poly)
                inside = 0 <= int(cy) < sil.shape[0] and 0 <= int(cx) < sil.shape[1] and allowed[int(cy), int(cx)]
                if mask.any() and not (mask & ~board).any() and not (mask & others).any() and not inside:
                    moved = (mask, d)
                    break
            if moved:
                break
        if moved is None:
            raise NotApplicable("no free spot off the silhouette for the last piece")
        mask, d = moved
        t0 = max(_frame_from(spec.at_step, T), windows[pid][1])
        for t in range(t0, T):
            f = frames[t]
            f[scene.target_mask(pid)] = (0, 0, 0)
            f[mask] = rec.color
        info.update(piece=pid, first_frame=t0, shift=[float(d[0]), float(d[1])])
    else:
        raise UsageError(f"mode {spec.mode!r} does not apply to tangram instances")
    return frames, info


def perturb_instance(m: InstanceManifest, spec: PerturbSpec):
    spec = spec.validated(m.task)
    if m.task == "maze":
        return perturb_maze(m, spec)
    return perturb_tangram(m, spec)


def _perturb_job(args):
    dataset, iid, spec, out = args
    m = load_instance(dataset, iid)
    try:
        frames, info = perturb_instance(m, spec)
    except NotApplicable as exc:
        return iid, {"skipped": str(exc)}
    write_frames(frames, Path(out) / iid)
    return iid, info


def cmd_perturb(
    dataset_dir,
    spec: PerturbSpec,
    out_dir,
    workers: int = 1,
    ids: Optional[Sequence[str]] = None,
    limit: Optional[int] = None,
) -> dict:
    """Write perturbed videos for every applicable instance plus ``perturb.json``."""
    ids = list(ids) if ids is not None else list_instances(dataset_dir)
    tasks = {load_instance(dataset_dir, i).task for i in ids}
    for task in tasks:
        try:
            spec.validated(task)
        except UsageError:
            if len(tasks) == 1:
                raise
    ids = [i for i in ids if _applies(spec, load_instance(dataset_dir, i).task)]
    if not ids:
        raise UsageError(f"mode {spec.mode!r} applies to none of the instances")
    if limit is not None:
        ids = ids[:limit]
    results = run_jobs(_perturb_job, [(str(dataset_dir), i, spec, str(out_dir)) for i in ids], workers)
    record = {
        "mode": spec.mode,
        "magnitude": spec.magnitude,
        "at_step": spec.at_step,
        "instances": {iid: info for iid, info in results},
    }
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    (Path(out_dir) / "perturb.json").write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")
    if all("skipped" in info for _, info in results):
        raise UsageError(f"mode {spec.mode!r} could not be applied to any instance")
    return record


def _applies(spec: PerturbSpec, task: str) -> bool:
    return spec.mode in (MAZE_MODES if task == "maze" else TANGRAM_MODES)
