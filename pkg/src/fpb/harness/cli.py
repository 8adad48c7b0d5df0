"""``fpb`` command line.

Exit codes: 0 when the command ran to completion (evaluation outcomes live
in the reports), 1 on bad input or an infeasible request, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from ..errors import FPBError, InfeasibleRange, UsageError
from ..tangram_gen import VARIANTS
from .config import load_config

log = logging.getLogger("fpb")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _at(text: str):
    return float(text) if "." in text else int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpb", description="Maze and tangram video-reasoning benchmark toolkit.")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: config, FPB_WORKERS, or 1)")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write instance manifests and initial frames")
    g.add_argument("--task", choices=("maze", "tangram"), required=True)
    g.add_argument("--tier", required=True, help="maze: train, test, test-unseen-icon, custom; tangram: train, test")
    g.add_argument("--out", required=True)
    g.add_argument("--per-config", type=int, default=None, help="override instances per maze config")
    g.add_argument("--sizes", type=_ints, default=None, help="custom maze tier grid sizes, e.g. 5,6")
    g.add_argument("--path-range", type=_ints, default=None, help="custom maze tier path range, e.g. 13,18")
    g.add_argument("--icons", choices=("seen", "unseen"), default="seen", help="custom tier icon pool")
    g.add_argument("--exclude", default=None, help="dataset whose maze layouts must not be reused")
    g.add_argument("--layouts", default=None, help="directory of tangram layout files (default: bundled)")
    g.add_argument("--variants", default=",".join(VARIANTS))
    g.add_argument("--limit", type=int, default=None, help="use only the first N layouts")
    g.add_argument("--no-images", action="store_true", help="skip initial.png")

    s = sub.add_parser("synthesize", help="render golden videos")
    s.add_argument("dataset")
    s.add_argument("--out", default=None, help="default <dataset>/golden")
    s.add_argument("--force", action="store_true")
    s.add_argument("--total-frames", type=int, default=None)
    s.add_argument("--kappa", type=int, default=None)

    e = sub.add_parser("evaluate", help="score candidate videos")
    e.add_argument("candidates", help="root holding one frame directory per instance id")
    e.add_argument("dataset")
    e.add_argument("--out", required=True)

    q = sub.add_parser("perturb", help="write perturbed golden videos")
    q.add_argument("dataset")
    q.add_argument("--mode", required=True)
    q.add_argument("--magnitude", type=float, default=None)
    q.add_argument("--at", type=_at, default=0.5, help="step index (int) or fraction (float)")
    q.add_argument("--limit", type=int, default=None)
    q.add_argument("--out", required=True)

    w = sub.add_parser("sweep", help="frame-budget sweep")
    w.add_argument("dataset")
    w.add_argument("--axis", choices=("total_frames", "kappa"), required=True)
    w.add_argument("--values", type=_ints, required=True)
    w.add_argument("--splits", default="")
    w.add_argument("--per-cell", type=int, default=5)
    w.add_argument("--candidates", default=None, help="root with <axis>=<value>/<id> frame dirs (default: golden)")
    w.add_argument("--out", required=True)

    r = sub.add_parser("report", help="aggregate, tag histogram and plot from reports")
    r.add_argument("reports")
    r.add_argument("--format", default="csv,json,svg")
    r.add_argument("--out", required=True)

    lay = sub.add_parser("layouts", help="convert SVG drawings or synthesize tangram layout files")
    lay.add_argument("--out", required=True)
    lay.add_argument("--convert", nargs="*", default=[], help="SVG files with seven <polygon> pieces")
    lay.add_argument("--synthesize", type=int, default=0, help="number of synthetic layouts to write")
    lay.add_argument("--prefix", default="synthetic")
    return p


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.workers)
    workers = int(cfg["workers"])
    if args.command == "generate":
        from .dataset import cmd_generate

        path_range = tuple(args.path_range) if args.path_range else None
        if path_range is not None and len(path_range) != 2:
            raise UsageError("--path-range takes two integers")
        summary = cmd_generate(
            args.task,
            args.tier,
            args.out,
            args.seed,
            workers,
            per_config=args.per_config,
            sizes=args.sizes,
            path_range=path_range,
            icon_pool=args.icons,
            layouts_dir=args.layouts,
            variants=[v for v in args.variants.split(",") if v],
            limit=args.limit,
            images=not args.no_images,
            exclude_dataset=args.exclude,
        )
        for name, n in sorted(summary["counts"].items()):
            print(f"{name}\t{n}")
        print(f"total\t{summary['total']}")
    elif args.command == "synthesize":
        from .dataset import cmd_synthesize

        res = cmd_synthesize(args.dataset, args.out, workers, args.force, args.total_frames, args.kappa)
        print(f"written {res['written']}, skipped {res['skipped']} -> {res['out']}")
    elif args.command == "evaluate":
        from .evaluate import cmd_evaluate

        reports = cmd_evaluate(args.candidates, args.dataset, args.out, workers, cfg)
        errors = sum(r.error is not None for r in reports)
        passed = sum(r.passed for r in reports)
        print(f"evaluated {len(reports)}: passed {passed}, errors {errors} -> {args.out}")
    elif args.command == "perturb":
        from .perturb import PerturbSpec, cmd_perturb

        rec = cmd_perturb(args.dataset, PerturbSpec(args.mode, args.magnitude, args.at), args.out, workers, limit=args.limit)
        done = sum("skipped" not in v for v in rec["instances"].values())
        print(f"{args.mode}: wrote {done} of {len(rec['instances'])} -> {args.out}")
    elif args.command == "sweep":
        from .sweep import SweepConfig, cmd_sweep

        sc = SweepConfig(args.axis, tuple(args.values), tuple(s for s in args.splits.split(",") if s), args.per_cell, args.seed)
        rows = cmd_sweep(sc, args.dataset, args.out, workers, args.candidates, cfg)
        for row in rows:
            print(f"{row['axis']}={row['value']}\t{row['split']}\tvalid={row['valid']}\tem={row['em']}\tstrict={row['strict_gc']}")
    elif args.command == "report":
        from .report import cmd_report

        summary = cmd_report(args.reports, [f for f in args.format.split(",") if f], args.out)
        print(json.dumps({k: summary[k] for k in ("n_reports", "n_failed", "tag_histogram")}, sort_keys=True))
    elif args.command == "layouts":
        from ..layouts import convert_svg_layout, synthesize_layouts, write_layouts

        layouts = [convert_svg_layout(pth) for pth in args.convert]
        if args.synthesize:
            layouts += synthesize_layouts(args.synthesize, args.seed, args.prefix)
        if not layouts:
            raise UsageError("nothing to do: give --convert files or --synthesize N")
        write_layouts(layouts, args.out)
        print(f"wrote {len(layouts)} layouts -> {args.out}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return run(args)
    except UsageError as exc:
        print(f"fpb: error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleRange as exc:
        print(f"fpb: infeasible tier: {exc}", file=sys.stderr)
        return 1
    except FPBError as exc:
        print(f"fpb: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
