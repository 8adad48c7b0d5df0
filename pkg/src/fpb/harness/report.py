"""Report emission from a directory of per-instance evaluation reports."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Sequence

from ..errors import CorrelationUndefined, UsageError
from ..eval_tangram import consistency_success_correlation
from ..records import EvalReport
from ..video_io import AGG_COLUMNS, MAZE_METRICS, TANGRAM_METRICS, aggregate_rows, read_reports, write_aggregate_csv
from .plot import line_plot

FORMATS = ("csv", "json", "svg")


def primary_tag(r: EvalReport) -> str:
    if r.failure_tags:
        return r.failure_tags[0]
    return "error" if r.error else "untagged"


def tag_histogram(reports: Sequence[EvalReport]) -> dict[str, int]:
    """One count per failed instance, keyed by its first failure tag."""
    return dict(sorted(Counter(primary_tag(r) for r in reports if not r.passed).items()))


def all_tag_counts(reports: Sequence[EvalReport]) -> dict[str, int]:
    return dict(sorted(Counter(t for r in reports for t in r.failure_tags).items()))


def _numeric(row: dict) -> dict:
    out = {}
    for k in AGG_COLUMNS:
        v = row[k]
        if k in MAZE_METRICS + TANGRAM_METRICS or k == "n":
            out[k] = float(v) if v != "" else None
        else:
            out[k] = v
    return out


def find_reports(path) -> list[EvalReport]:
    p = Path(path)
    if (p / "reports").is_dir():
        p = p / "reports"
    if not p.is_dir():
        raise UsageError(f"{path} is not a directory")
    reports = read_reports(p)
    if not reports:
        raise UsageError(f"no reports found in {path}")
    return reports


def cmd_report(reports_dir, formats: Sequence[str], out_dir) -> dict:
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise UsageError(f"unknown report formats {bad}")
    reports = find_reports(reports_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = aggregate_rows(reports)
    try:
        rho = consistency_success_correlation([r for r in reports if r.task == "tangram"])
        corr = {"value": rho, "reason": None}
    except CorrelationUndefined as exc:
        corr = {"value": None, "reason": str(exc)}
    summary = {
        "n_reports": len(reports),
        "n_failed": sum(not r.passed for r in reports),
        "tag_histogram": tag_histogram(reports),
        "tag_counts": all_tag_counts(reports),
        "consistency_success_correlation": corr,
    }
    written = []
    if "csv" in formats:
        written.append(write_aggregate_csv(reports, out / "aggregate.csv"))
    if "json" in formats:
        payload = dict(summary, rows=[_numeric(r) for r in rows])
        p = out / "aggregate.json"
        p.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
        written.append(p)
    if "svg" in formats:
        means = [r for r in rows if r["row_type"] == "mean"]
        groups = sorted({r["group"] for r in means})
        xpos = {g: i for i, g in enumerate(groups)}
        series: dict[str, list] = {}
        for r in means:
            metric = "em" if r["task"] == "maze" else "strict_gc"
            series.setdefault(f"{r['task']}:{r['split']}", []).append((xpos[r["group"]], 100.0 * float(r[metric])))
        svg = line_plot(
            series,
            "mean success by group",
            "group",
            "EM / strict GC (%)",
            xticks=[(i, g) for g, i in xpos.items()],
        )
        p = out / "report.svg"
        p.write_text(svg)
        written.append(p)
    summary["written"] = [str(p) for p in written]
    return summary
