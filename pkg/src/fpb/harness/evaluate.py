"""Batch evaluation of candidate frame directories against a dataset."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

from ..errors import FPBError
from ..eval_maze import evaluate_maze
from ..eval_tangram import evaluate_tangram
from ..records import EvalReport, InstanceManifest
from ..video_io import TANGRAM_METRICS, MAZE_METRICS, read_frames, write_aggregate_csv, write_report
from .config import DEFAULTS, maze_params, tangram_params
from .dataset import list_instances, load_instance, run_jobs

TAG_MISSING = "missing"


def zero_metrics(task: str) -> dict:
    return {m: 0.0 for m in (MAZE_METRICS if task == "maze" else TANGRAM_METRICS)}


def evaluate_frames(frames, m: InstanceManifest, cfg: Optional[dict] = None) -> EvalReport:
    cfg = cfg or DEFAULTS
    if m.task == "maze":
        return evaluate_maze(frames, m, maze_params(cfg))
    return evaluate_tangram(frames, m, tangram_params(cfg))


def evaluate_one(m: InstanceManifest, candidate_dir: Path, cfg: Optional[dict] = None) -> EvalReport:
    """Never raises for bad candidates: problems become an error entry."""
    if not candidate_dir.is_dir():
        r = EvalReport(m.instance_id, m.task, m.group, tuple(m.splits), zero_metrics(m.task), [TAG_MISSING])
        return r
    try:
        return evaluate_frames(read_frames(candidate_dir), m, cfg)
    except (FPBError, OSError, ValueError) as exc:
        return EvalReport(
            m.instance_id,
            m.task,
            m.group,
            tuple(m.splits),
            zero_metrics(m.task),
            [],
            {},
            f"{type(exc).__name__}: {exc}",
        )


def _eval_job(args) -> EvalReport:
    dataset, iid, cand_root, cfg = args
    m = load_instance(dataset, iid)
    return evaluate_one(m, Path(cand_root) / iid, cfg)


def cmd_evaluate(
    candidate_root,
    dataset_dir,
    out_dir,
    workers: int = 1,
    cfg: Optional[dict] = None,
    ids: Optional[Sequence[str]] = None,
) -> list[EvalReport]:
    """Write ``reports/<id>.json`` per instance and ``aggregate.csv``."""
    out = Path(out_dir)
    ids = list(ids) if ids is not None else list_instances(dataset_dir)
    jobs = [(str(dataset_dir), i, str(candidate_root), cfg) for i in ids]
    reports = run_jobs(_eval_job, jobs, workers)
    for r in reports:
        write_report(r, out / "reports" / f"{r.instance_id}.json")
    write_aggregate_csv(reports, out / "aggregate.csv")
    return reports
