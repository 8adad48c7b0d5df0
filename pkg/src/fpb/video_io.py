"""On-disk formats: PNG frame directories, instance manifests, reports and aggregate CSV.

Frame directories hold ``frame_00000.png``, ``frame_00001.png``, ... with no
gaps.  Manifests and reports are JSON with sorted keys; floats that must
round-trip exactly (layout vertices) are stored as decimal strings with 6
significant digits.
"""

from __future__ import annotations

import csv
import json
import math
import re
from collections import OrderedDict
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from PIL import Image

from .errors import (
    EmptySequence,
    InvalidLayout,
    InvalidManifest,
    InvalidMaze,
    MissingFrame,
    ScheduleError,
    ShapeMismatch,
    VersionError,
)
from .frames import FrameSequence, LazyFrames
from .records import SCHEMA_VERSION, EvalReport, FrameSchedule, InstanceManifest

FRAME_RE = re.compile(r"^frame_(\d{5})\.png$")

MAZE_METRICS = ("em", "pr")
TANGRAM_METRICS = ("strict_gc", "progress_gc", "boundary_iou", "visual_consistency")


def frame_name(i: int) -> str:
    return f"frame_{i:05d}.png"


def write_frames(seq: Sequence[np.ndarray], directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(len(seq)):
        frame = np.ascontiguousarray(seq[i], dtype=np.uint8)
        Image.fromarray(frame, "RGB").save(directory / frame_name(i), compress_level=1)
    return directory


def list_frames(directory) -> list[Path]:
    """Frame files in index order; raises MissingFrame on a gap."""
    directory = Path(directory)
    if not directory.is_dir():
        raise EmptySequence(f"{directory} is not a directory")
    found = {}
    for p in directory.iterdir():
        m = FRAME_RE.match(p.name)
        if m:
            found[int(m.group(1))] = p
    if not found:
        raise EmptySequence(f"no frames in {directory}")
    n = max(found) + 1
    missing = [i for i in range(n) if i not in found]
    if missing:
        raise MissingFrame(f"{directory}: missing {frame_name(missing[0])} ({len(missing)} gaps)")
    return [found[i] for i in range(n)]


def _load_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def read_frames(directory) -> FrameSequence:
    """Lazy frame sequence; sizes are checked up front from image headers."""
    paths = list_frames(directory)
    sizes = set()
    for p in paths:
        with Image.open(p) as im:
            sizes.add(im.size)
        if len(sizes) > 1:
            raise ShapeMismatch(f"{directory}: mixed frame sizes {sorted(sizes)}")
    w, h = sizes.pop()
    return FrameSequence(LazyFrames(len(paths), lambda i: _load_png(paths[i])), w, h)


# --- manifests ---------------------------------------------------------------


def fmt_float(x: float) -> str:
    s = f"{float(x):.6g}"
    return "0" if s == "-0" else s


def manifest_to_dict(m: InstanceManifest) -> dict:
    out = OrderedDict(
        schema_version=SCHEMA_VERSION,
        task=m.task,
        instance_id=m.instance_id,
        seed=int(m.seed),
        group=m.group,
        splits=list(m.splits),
        prompt_text=m.prompt_text,
        canvas=[int(v) for v in m.canvas],
    )
    if m.task == "maze":
        mz = m.maze
        out["maze"] = {
            "rows": mz.rows,
            "cols": mz.cols,
            "walls": [[list(a), list(b)] for a, b in sorted(mz.walls)],
            "start": list(mz.start),
            "goal": list(mz.goal),
            "icon_id": mz.icon_id,
            "seed": mz.seed,
        }
        out["actions"] = list(m.actions)
        s = m.schedule
        out["schedule"] = {
            "mode": s.mode,
            "total_frames": s.total_frames,
            "kappa": s.kappa,
            "lead_hold": s.lead_hold,
            "tail_hold": s.tail_hold,
        }
    elif m.task == "tangram":
        from .layouts import layout_to_dict

        sc = m.scene
        out["scene"] = {
            "variant": sc.variant,
            "layout": layout_to_dict(sc.layout),
            "colors": [list(p.color) for p in sc.pieces],
            "rotation_offsets": [p.rotation_offset for p in sc.pieces],
            "seed": sc.seed,
            "total_frames": sc.total_frames,
            "sidebar_scale": fmt_float(sc.sidebar_scale),
            "order": list(sc.order),
        }
    else:
        raise InvalidManifest(f"unknown task {m.task!r}")
    return out


def dumps_manifest(m: InstanceManifest) -> str:
    return json.dumps(manifest_to_dict(m), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def write_manifest(m: InstanceManifest, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_manifest(m), encoding="utf-8")
    return path


def manifest_from_dict(d: dict) -> InstanceManifest:
    from . import icons
    from .maze_gen import MazeSpec, classify_splits, validate_maze
    from .tangram_gen import assemble_scene
    from .layouts import layout_from_dict

    if d.get("schema_version") != SCHEMA_VERSION:
        raise VersionError(f"unsupported manifest schema_version {d.get('schema_version')!r}")
    try:
        task = d["task"]
        common = dict(
            task=task,
            instance_id=str(d["instance_id"]),
            seed=int(d["seed"]),
            group=str(d.get("group", "")),
            splits=tuple(d["splits"]),
            prompt_text=str(d["prompt_text"]),
            canvas=tuple(int(v) for v in d["canvas"]),
        )
        if task == "maze":
            mz = d["maze"]
            spec = MazeSpec(
                rows=int(mz["rows"]),
                cols=int(mz["cols"]),
                walls=frozenset((tuple(a), tuple(b)) for a, b in mz["walls"]),
                start=tuple(mz["start"]),
                goal=tuple(mz["goal"]),
                icon_id=int(mz["icon_id"]),
                seed=int(mz["seed"]),
            )
            actions = tuple(d["actions"])
            sd = d["schedule"]
            schedule = FrameSchedule(
                sd["mode"], int(sd["total_frames"]), int(sd["kappa"]), int(sd["lead_hold"]), int(sd["tail_hold"])
            )
            validate_maze(spec, list(actions))
            schedule.validate(len(actions))
            icon_split = "unseen" if spec.icon_id in icons.UNSEEN_IDS else "seen"
            if not 0 <= spec.icon_id < len(icons.ICONS):
                raise InvalidManifest(f"unknown icon id {spec.icon_id}")
            expect = classify_splits(spec.rows, spec.cols, len(actions), icon_split)
            if tuple(common["splits"]) != expect:
                raise InvalidManifest(f"split tags {common['splits']} do not match body ({expect})")
            return InstanceManifest(maze=spec, actions=actions, schedule=schedule, **common)
        if task == "tangram":
            sd = d["scene"]
            layout = layout_from_dict(sd["layout"])
            scene = assemble_scene(
                layout,
                sd["variant"],
                [tuple(c) for c in sd["colors"]],
                [int(v) for v in sd["rotation_offsets"]],
                seed=int(sd["seed"]),
                total_frames=int(sd["total_frames"]),
                sidebar_scale=float(sd.get("sidebar_scale", "1")),
            )
            if tuple(sd.get("order", scene.order)) != scene.order:
                raise InvalidManifest("placement order does not match the scene")
            if tuple(common["canvas"]) != scene.canvas:
                raise InvalidManifest(f"canvas {common['canvas']} does not match variant {scene.variant}")
            return InstanceManifest(scene=scene, **common)
        raise InvalidManifest(f"unknown task {task!r}")
    except (InvalidMaze, InvalidLayout, ScheduleError) as exc:
        raise InvalidManifest(str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidManifest(f"malformed manifest: {exc!r}") from exc


def read_manifest(path) -> InstanceManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidManifest(f"{path}: {exc}") from exc
    return manifest_from_dict(data)


# --- reports -----------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy with floats rounded to 6 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not math.isfinite(x) else float(fmt_float(x))
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if hasattr(obj, "value"):
        return obj.value
    return obj


def report_to_dict(r: EvalReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "instance_id": r.instance_id,
        "task": r.task,
        "group": r.group,
        "splits": list(r.splits),
        "metrics": _clean(r.metrics),
        "failure_tags": list(r.failure_tags),
        "diagnostics": _clean(r.diagnostics),
        "error": r.error,
    }


def report_from_dict(d: dict) -> EvalReport:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise VersionError(f"unsupported report schema_version {d.get('schema_version')!r}")
    return EvalReport(
        instance_id=d["instance_id"],
        task=d["task"],
        group=d.get("group", ""),
        splits=tuple(d.get("splits", ())),
        metrics={k: float(v) for k, v in d.get("metrics", {}).items()},
        failure_tags=list(d.get("failure_tags", [])),
        diagnostics=d.get("diagnostics", {}),
        error=d.get("error"),
    )


def write_report(report: EvalReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report_to_dict(report), indent=1, sort_keys=True) + "\n")
    return path


def read_report(path) -> EvalReport:
    return report_from_dict(json.loads(Path(path).read_text()))


def read_reports(directory) -> list[EvalReport]:
    return [read_report(p) for p in sorted(Path(directory).glob("*.json"))]


# --- aggregate ---------------------------------------------------------------

AGG_COLUMNS = ("row_type", "task", "group", "split", "instance_id", "n") + MAZE_METRICS + TANGRAM_METRICS + (
    "failure_tags",
    "error",
)


def metric_columns(task: str) -> tuple[str, ...]:
    return MAZE_METRICS if task == "maze" else TANGRAM_METRICS


def aggregate_rows(reports: Iterable[EvalReport]) -> list[dict]:
    """Instance rows sorted by id, then one mean row per (task, group, split)."""
    reports = sorted(reports, key=lambda r: r.instance_id)
    rows = []
    buckets: dict[tuple[str, str, str], list[dict]] = {}
    for r in reports:
        row = {c: "" for c in AGG_COLUMNS}
        row.update(
            row_type="instance",
            task=r.task,
            group=r.group,
            split=";".join(r.splits),
            instance_id=r.instance_id,
            n="1",
            failure_tags=";".join(r.failure_tags),
            error=r.error or "",
        )
        for m in metric_columns(r.task):
            row[m] = fmt_float(r.metrics.get(m, 0.0))
        rows.append(row)
        for split in r.splits or ("",):
            buckets.setdefault((r.task, r.group, split), []).append(row)
    for (task, group, split), members in sorted(buckets.items()):
        row = {c: "" for c in AGG_COLUMNS}
        row.update(row_type="mean", task=task, group=group, split=split, n=str(len(members)))
        for m in metric_columns(task):
            row[m] = fmt_float(sum(float(x[m]) for x in members) / len(members))
        rows.append(row)
    return rows


def write_aggregate_csv(reports: Iterable[EvalReport], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = aggregate_rows(reports)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=AGG_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return path


def read_aggregate_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def mean_rows(rows: Sequence[dict], task: Optional[str] = None) -> list[dict]:
    return [r for r in rows if r["row_type"] == "mean" and (task is None or r["task"] == task)]
