"""Dataset tiers, generation and golden-video synthesis.

Dataset directory layout::

    <dataset>/dataset.json                  task, tier, seed, per-config counts
    <dataset>/instances/<id>/manifest.json  instance manifest
    <dataset>/instances/<id>/initial.png    first frame shown to a model
    <dataset>/golden/<id>/frame_00000.png   golden video (after ``synthesize``)
"""

from __future__ import annotations

import json
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from PIL import Image

from ..errors import InfeasibleRange, UsageError
from ..layouts import Layout, bundled_layouts, load_layout_dir
from ..maze_gen import sample_instance
from ..maze_render import render_maze_frame, synthesize_solution_video
from ..records import FrameSchedule, InstanceManifest
from ..tangram_gen import VARIANTS, make_tangram_instance, synthesize_assembly_video
from ..video_io import list_frames, read_manifest, write_frames, write_manifest
from .config import DEFAULTS, derive_seed

COMPLETE_MARKER = ".complete"


@dataclass(frozen=True)
class TierConfig:
    name: str
    rows: int
    cols: int
    path_range: tuple[int, int]
    count: int
    icon_pool: str = "seen"


def _test_configs(icon_pool: str) -> list[TierConfig]:
    short, long = (2, 12), (13, 18)
    out = [TierConfig(f"iid-{n}x{n}", n, n, short, 250, icon_pool) for n in (3, 4, 5, 6)]
    out += [TierConfig(f"spatial-{n}x{n}", n, n, short, 250, icon_pool) for n in (7, 8)]
    out += [TierConfig(f"temporal-{n}x{n}", n, n, long, 250, icon_pool) for n in (5, 6)]
    out += [TierConfig(f"both-{n}x{n}", n, n, long, 250, icon_pool) for n in (7, 8)]
    return out


MAZE_TIERS = {
    "train": [TierConfig(f"train-{n}x{n}", n, n, (2, 12), 1000) for n in (3, 4, 5, 6)],
    "test": _test_configs("seen"),
    "test-unseen-icon": _test_configs("unseen"),
}

TANGRAM_TIERS = {"train": ("iid",), "test": ("unseen_silhouette",)}


def run_jobs(fn: Callable, jobs: Sequence, workers: int = 1) -> list:
    """Apply ``fn`` to each job; results come back in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=1))


def instance_dir(dataset: Path, instance_id: str) -> Path:
    return Path(dataset) / "instances" / instance_id


def list_instances(dataset) -> list[str]:
    root = Path(dataset) / "instances"
    if not root.is_dir():
        raise UsageError(f"{dataset} has no instances/ directory")
    return sorted(p.name for p in root.iterdir() if (p / "manifest.json").is_file())


def load_instance(dataset, instance_id: str) -> InstanceManifest:
    return read_manifest(instance_dir(Path(dataset), instance_id) / "manifest.json")


def _save_png(frame: np.ndarray, path: Path) -> None:
    Image.fromarray(np.ascontiguousarray(frame, dtype=np.uint8), "RGB").save(path, compress_level=1)


def initial_frame(m: InstanceManifest) -> np.ndarray:
    if m.task == "maze":
        return render_maze_frame(m.maze, tuple(float(v) for v in m.maze.start), m.canvas)
    return synthesize_assembly_video(m.scene)[0]


def _write_instance(m: InstanceManifest, dataset: Path, images: bool) -> None:
    d = instance_dir(dataset, m.instance_id)
    d.mkdir(parents=True, exist_ok=True)
    write_manifest(m, d / "manifest.json")
    if images:
        _save_png(initial_frame(m), d / "initial.png")


# --- generate ----------------------------------------------------------------


def _maze_job(args) -> list[str]:
    cfg, tier, seed, dataset, images, exclude = args
    avoid = set(exclude)
    ids = []
    for k in range(cfg.count):
        iid = f"maze-{tier}-{cfg.name}-{k:04d}"
        m = sample_instance(
            cfg.rows,
            cfg.cols,
            cfg.path_range,
            cfg.icon_pool,
            derive_seed(seed, tier, cfg.name, k),
            instance_id=iid,
            group=cfg.name,
            avoid=avoid,
            total_frames=int(DEFAULTS["maze.total_frames"]),
            lead_hold=int(DEFAULTS["maze.lead_hold"]),
        )
        avoid.add(m.maze.layout_key())
        _write_instance(m, Path(dataset), images)
        ids.append(iid)
    return ids


def _tangram_job(args) -> list[str]:
    layout, variant, tier, seed, dataset, images = args
    splits = TANGRAM_TIERS[tier]
    m = make_tangram_instance(
        layout,
        variant,
        derive_seed(seed, tier, variant, layout.name),
        instance_id=f"tangram-{tier}-{variant.lower()}-{layout.name}",
        group=variant,
        splits=splits,
    )
    _write_instance(m, Path(dataset), images)
    return [m.instance_id]


def maze_layout_keys(dataset) -> set:
    return {load_instance(dataset, i).maze.layout_key() for i in list_instances(dataset)}


def resolve_maze_tier(
    tier: str,
    per_config: Optional[int] = None,
    sizes: Optional[Sequence[int]] = None,
    path_range: Optional[tuple[int, int]] = None,
    icon_pool: str = "seen",
) -> list[TierConfig]:
    if tier == "custom":
        if not sizes or not path_range:
            raise UsageError("custom tier needs --sizes and --path-range")
        configs = [TierConfig(f"custom-{n}x{n}", n, n, tuple(path_range), per_config or 250, icon_pool) for n in sizes]
    elif tier in MAZE_TIERS:
        configs = MAZE_TIERS[tier]
    else:
        raise UsageError(f"unknown maze tier {tier!r} (choose from {sorted(MAZE_TIERS)} or custom)")
    if per_config is not None:
        configs = [replace(c, count=per_config) for c in configs]
    return configs


def check_feasible(configs: Sequence[TierConfig]) -> None:
    """Fail fast on configs whose path range can never occur."""
    for c in configs:
        lo, hi = c.path_range
        if lo > hi or lo > c.rows * c.cols - 1 or hi < 1:
            raise InfeasibleRange(f"tier config {c.name}: path length {c.path_range} impossible on {c.rows}x{c.cols}")


def cmd_generate(
    task: str,
    tier: str,
    out_dir,
    seed: int = 0,
    workers: int = 1,
    *,
    per_config: Optional[int] = None,
    sizes: Optional[Sequence[int]] = None,
    path_range: Optional[tuple[int, int]] = None,
    icon_pool: str = "seen",
    layouts_dir=None,
    variants: Sequence[str] = VARIANTS,
    limit: Optional[int] = None,
    images: bool = True,
    exclude_dataset=None,
) -> dict:
    """Write manifests (and initial frames) for one tier; returns per-config counts."""
    out = Path(out_dir)
    counts: dict[str, int] = {}
    if task == "maze":
        configs = resolve_maze_tier(tier, per_config, sizes, path_range, icon_pool)
        check_feasible(configs)
        exclude = frozenset(maze_layout_keys(exclude_dataset)) if exclude_dataset else frozenset()
        jobs = [(c, tier, seed, str(out), images, exclude) for c in configs]
        results = run_jobs(_maze_job, jobs, workers)
        for c, ids in zip(configs, results):
            counts[c.name] = len(ids)
    elif task == "tangram":
        if tier not in TANGRAM_TIERS:
            raise UsageError(f"unknown tangram tier {tier!r} (choose from {sorted(TANGRAM_TIERS)})")
        bad = [v for v in variants if v not in VARIANTS]
        if bad:
            raise UsageError(f"unknown tangram variants {bad}")
        layouts: list[Layout] = load_layout_dir(layouts_dir) if layouts_dir else bundled_layouts()
        if not layouts:
            raise UsageError(f"no layouts found in {layouts_dir}")
        if limit is not None:
            layouts = layouts[:limit]
        jobs = [(l, v, tier, seed, str(out), images) for v in variants for l in layouts]
        results = run_jobs(_tangram_job, jobs, workers)
        for (l, v, *_), ids in zip(jobs, results):
            counts[v] = counts.get(v, 0) + len(ids)
    else:
        raise UsageError(f"unknown task {task!r}")
    out.mkdir(parents=True, exist_ok=True)
    summary = {"task": task, "tier": tier, "seed": seed, "counts": counts, "total": sum(counts.values())}
    (out / "dataset.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return summary


# --- synthesize --------------------------------------------------------------


def apply_overrides(
    m: InstanceManifest,
    total_frames: Optional[int] = None,
    kappa: Optional[int] = None,
    lead_hold: Optional[int] = None,
    tail_hold: Optional[int] = None,
) -> InstanceManifest:
    """Copy of the manifest with its frame budget replaced."""
    if total_frames is not None and kappa is not None:
        raise UsageError("give either a total frame budget or kappa, not both")
    if m.task == "maze":
        L = len(m.actions)
        lead = int(DEFAULTS["maze.lead_hold"]) if lead_hold is None else lead_hold
        if total_frames is not None:
            return replace(m, schedule=FrameSchedule.fixed_total(L, total_frames, lead))
        if kappa is not None:
            tail = int(DEFAULTS["maze.sweep_tail_hold"]) if tail_hold is None else tail_hold
            return replace(m, schedule=FrameSchedule.per_step(L, kappa, lead, tail))
        return m
    if kappa is not None:
        raise UsageError("kappa only applies to maze instances")
    if total_frames is not None:
        from ..tangram_gen import assemble_scene

        sc = m.scene
        scene = assemble_scene(
            sc.layout,
            sc.variant,
            [p.color for p in sc.pieces],
            [p.rotation_offset for p in sc.pieces],
            seed=sc.seed,
            total_frames=total_frames,
            sidebar_scale=sc.sidebar_scale,
        )
        return replace(m, scene=scene)
    return m


def golden_video(m: InstanceManifest):
    if m.task == "maze":
        return synthesize_solution_video(m)
    return synthesize_assembly_video(m.scene)


def expected_frames(m: InstanceManifest) -> int:
    return m.schedule.total_frames if m.task == "maze" else m.scene.total_frames


def is_complete(d: Path, n: int) -> bool:
    marker = d / COMPLETE_MARKER
    return marker.is_file() and marker.read_text().strip() == str(n)


def _synth_job(args) -> str:
    dataset, iid, out, total_frames, kappa = args
    m = apply_overrides(load_instance(dataset, iid), total_frames, kappa)
    d = Path(out) / iid
    if d.exists():
        shutil.rmtree(d)
    write_frames(golden_video(m), d)
    (d / COMPLETE_MARKER).write_text(f"{expected_frames(m)}\n")
    return iid


def cmd_synthesize(
    dataset_dir,
    out_dir=None,
    workers: int = 1,
    force: bool = False,
    total_frames: Optional[int] = None,
    kappa: Optional[int] = None,
    ids: Optional[Sequence[str]] = None,
) -> dict:
    """Render golden videos; complete outputs are skipped, partial ones refused without force."""
    dataset = Path(dataset_dir)
    out = Path(out_dir) if out_dir else dataset / "golden"
    ids = list(ids) if ids is not None else list_instances(dataset)
    todo, skipped, offenders = [], [], []
    for iid in ids:
        m = apply_overrides(load_instance(dataset, iid), total_frames, kappa)
        d = out / iid
        if not d.exists():
            todo.append(iid)
        elif not force and is_complete(d, expected_frames(m)):
            skipped.append(iid)
        elif force:
            todo.append(iid)
        else:
            offenders.append(iid)
    if offenders:
        raise UsageError(
            f"{len(offenders)} partial or stale outputs in {out} (use --force): " + ", ".join(offenders[:20])
        )
    out.mkdir(parents=True, exist_ok=True)
    run_jobs(_synth_job, [(str(dataset), i, str(out), total_frames, kappa) for i in todo], workers)
    return {"written": len(todo), "skipped": len(skipped), "out": str(out)}


def read_candidate(root, iid: str):
    from ..video_io import read_frames

    return read_frames(Path(root) / iid)


def frame_count(d) -> int:
    return len(list_frames(d))
