"""Frame-budget sweeps: re-synthesize schedules per budget and evaluate each cell."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..errors import FPBError, ScheduleError, UsageError
from ..video_io import MAZE_METRICS, TANGRAM_METRICS, fmt_float, read_frames
from .config import DEFAULTS
from .dataset import apply_overrides, expected_frames, golden_video, list_instances, load_instance, run_jobs
from .evaluate import evaluate_frames
from .plot import line_plot

AXES = ("total_frames", "kappa")


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    values: tuple[int, ...]
    splits: tuple[str, ...] = ()
    instances_per_cell: int = 5
    seed: int = 0

    def validate(self) -> "SweepConfig":
        if self.axis not in AXES:
            raise UsageError(f"sweep axis must be one of {AXES}")
        if not self.values or any(v <= 0 for v in self.values):
            raise UsageError("sweep values must be a nonempty list of positive integers")
        if self.axis == "kappa" and min(self.values) < 3:
            raise UsageError("kappa values must be >= 3")
        if self.instances_per_cell < 1:
            raise UsageError("instances_per_cell must be >= 1")
        return self


def motion_frames(m) -> int:
    if m.task == "maze":
        return m.schedule.motion_frames(len(m.actions))
    return 7 * ((m.scene.total_frames - 1) // 7)


def _cell_job(args) -> dict:
    dataset, iid, axis, value, candidates, cfg = args
    base = load_instance(dataset, iid)
    try:
        kw = {"total_frames": value} if axis == "total_frames" else {"kappa": value}
        m = apply_overrides(base, **kw)
        if m.task == "maze":
            s = m.schedule
            L = len(m.actions)
            s.validate(L)
            if s.lead_hold + s.kappa * L + s.tail_hold != s.total_frames:
                raise ScheduleError("frame arithmetic mismatch")
    except (ScheduleError, FPBError) as exc:
        return {"id": iid, "valid": False, "error": str(exc)}
    try:
        if candidates:
            frames = read_frames(Path(candidates) / f"{axis}={value}" / iid)
        else:
            frames = golden_video(m)
        r = evaluate_frames(frames, m, cfg)
    except FPBError as exc:
        return {"id": iid, "valid": True, "error": str(exc), "task": m.task, "metrics": {}}
    return {
        "id": iid,
        "valid": True,
        "task": m.task,
        "metrics": r.metrics,
        "total_frames": expected_frames(m),
        "motion_frames": motion_frames(m),
    }


def select_instances(dataset, splits: Sequence[str], per_cell: int) -> dict[str, list[str]]:
    ids = list_instances(dataset)
    tags = {i: load_instance(dataset, i).splits for i in ids}
    if not splits:
        splits = sorted({t for ts in tags.values() for t in ts})
    chosen = {}
    for split in splits:
        members = [i for i in ids if split in tags[i]][:per_cell]
        if members:
            chosen[split] = members
    if not chosen:
        raise UsageError(f"no instances carry the splits {list(splits)}")
    return chosen


SWEEP_COLUMNS = ("axis", "value", "split", "n", "valid", "total_frames", "motion_frames") + MAZE_METRICS + TANGRAM_METRICS + (
    "errors",
)


def cmd_sweep(
    sweep: SweepConfig,
    dataset_dir,
    out_dir,
    workers: int = 1,
    candidates: Optional[str] = None,
    cfg: Optional[dict] = None,
) -> list[dict]:
    """Long-format ``sweep.csv`` plus ``sweep.svg`` (metric vs axis, one line per split)."""
    sweep = sweep.validate()
    cfg = cfg or DEFAULTS
    chosen = select_instances(dataset_dir, sweep.splits, sweep.instances_per_cell)
    jobs, keys = [], []
    for value in sweep.values:
        for split, ids in chosen.items():
            for iid in ids:
                jobs.append((str(dataset_dir), iid, sweep.axis, value, candidates, cfg))
                keys.append((value, split))
    results = run_jobs(_cell_job, jobs, workers)
    cells: dict[tuple, list[dict]] = {}
    for key, res in zip(keys, results):
        cells.setdefault(key, []).append(res)
    rows = []
    for (value, split), members in cells.items():
        row = {c: "" for c in SWEEP_COLUMNS}
        valid = all(r["valid"] for r in members)
        row.update(axis=sweep.axis, value=str(value), split=split, n=str(len(members)), valid=str(int(valid)))
        errors = [f"{r['id']}: {r['error']}" for r in members if "error" in r]
        row["errors"] = " | ".join(errors)
        if valid:
            row["total_frames"] = fmt_float(sum(r.get("total_frames", 0) for r in members) / len(members))
            row["motion_frames"] = fmt_float(sum(r.get("motion_frames", 0) for r in members) / len(members))
            task = members[0].get("task", "maze")
            for metric in MAZE_METRICS if task == "maze" else TANGRAM_METRICS:
                vals = [r.get("metrics", {}).get(metric, 0.0) for r in members]
                row[metric] = fmt_float(sum(vals) / len(vals))
        rows.append(row)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    metric = "em" if any(r["em"] for r in rows) else "strict_gc"
    series: dict[str, list] = {}
    for r in rows:
        if r["valid"] == "1" and r[metric] != "":
            series.setdefault(r["split"], []).append((float(r["value"]), 100.0 * float(r[metric])))
    svg = line_plot(series, f"{metric} vs {sweep.axis}", sweep.axis, f"{metric} (%)")
    (out / "sweep.svg").write_text(svg)
    return rows
