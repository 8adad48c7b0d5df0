"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected into the "acceptance criteria" section of the
terminal summary.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np

from fpb.eval_maze import TAG_BOUNDARY, TAG_KINEMATIC, evaluate_maze
from fpb.eval_tangram import TAG_CHROMATIC, TAG_STRUCTURAL, evaluate_tangram
from fpb.geom import (
    classify_shape,
    extract_contour,
    mask_iou,
    polygon_centroid,
    rasterize,
    simplify_polygon,
    transform_polygon,
)
from fpb.harness.cli import main
from fpb.harness.dataset import MAZE_TIERS, cmd_generate, list_instances, load_instance
from fpb.harness.perturb import NotApplicable, PerturbSpec, perturb_instance
from fpb.harness.report import cmd_report
from fpb.harness.sweep import SweepConfig, cmd_sweep
from fpb.layouts import PIECE_KINDS, canonical_piece, load_layout_dir, synthesize_layouts, write_layouts
from fpb.maze_gen import sample_instance
from fpb.maze_render import synthesize_solution_video
from fpb.records import EvalReport, FrameSchedule
from fpb.tangram_gen import KIND_SHAPE, VARIANTS, make_tangram_instance, synthesize_assembly_video
from fpb.video_io import write_report


def _test_tier_manifests(tmp_path, per_config: int):
    cmd_generate("maze", "test", tmp_path, seed=0, per_config=per_config, images=False)
    return [load_instance(tmp_path, i) for i in list_instances(tmp_path)]


def test_01_maze_round_trip(tmp_path, criterion):
    with criterion(1, "maze golden round-trip, 200 instances") as d:
        t0 = time.perf_counter()
        manifests = _test_tier_manifests(tmp_path, 20)
        groups = {m.group for m in manifests}
        assert len(manifests) == 200 and len(groups) == 10
        em = pr = 0.0
        for m in manifests:
            r = evaluate_maze(synthesize_solution_video(m), m)
            em += r.metrics["em"]
            pr += r.metrics["pr"]
        elapsed = time.perf_counter() - t0
        d["msg"] = f"EM={100 * em / 200:.1f}% PR={100 * pr / 200:.1f}% in {elapsed:.0f}s"
        assert em == 200 and pr == 200
        assert elapsed <= 300


def test_02_tangram_round_trip(layouts, criterion):
    with criterion(2, "tangram golden round-trip, 30 layouts x 3 variants") as d:
        worst = 1.0
        n = 0
        for k, layout in enumerate(layouts[:30]):
            for variant in VARIANTS:
                m = make_tangram_instance(layout, variant, 1000 + k)
                video = synthesize_assembly_video(m.scene)
                r = evaluate_tangram(video, m)
                met = r.metrics
                d["msg"] = f"{m.instance_id}: {met}"
                assert met["strict_gc"] == 1.0 and met["progress_gc"] == 1.0
                assert met["boundary_iou"] >= 0.99
                assert met["visual_consistency"] == 1.0
                assert r.diagnostics["reference_mode"] == "golden"
                worst = min(worst, met["boundary_iou"])
                n += 1
        d["msg"] = f"{n} instances, min boundary IoU {worst:.4f}"
        assert n == 90


def _retiming(rng, T: int, max_step: int) -> list[int]:
    """Random nondecreasing frame map from 0 to T-1 with holds and bursts."""
    weights = rng.dirichlet(np.ones(max_step + 1))
    idx = [0]
    while idx[-1] < T - 1:
        idx.append(min(T - 1, idx[-1] + int(rng.choice(max_step + 1, p=weights))))
    return idx


def test_03_speed_invariance(criterion):
    with criterion(3, "speed invariance, 100 monotone re-timings") as d:
        rng = np.random.default_rng(3)
        configs = [c for c in MAZE_TIERS["test"]]
        trials = 0
        for k in range(10):
            c = configs[k]
            m = sample_instance(c.rows, c.cols, c.path_range, "seen", 500 + k)
            video = synthesize_solution_video(m)
            base = evaluate_maze(video, m).metrics
            # at most one cell per retimed frame keeps motion continuous
            step = min(3, m.schedule.kappa)
            for _ in range(10):
                idx = _retiming(rng, len(video), step)
                got = evaluate_maze(video.retimed(idx), m).metrics
                d["msg"] = f"trial {trials}: {got} vs {base}"
                assert got == base
                trials += 1
        d["msg"] = f"{trials} trials unchanged"
        assert trials == 100


def _maze_pool():
    configs = [c for c in MAZE_TIERS["test"] if c.rows >= 5]
    k = 0
    while True:
        c = configs[k % len(configs)]
        yield sample_instance(c.rows, c.cols, c.path_range, "seen", 9000 + k)
        k += 1


def _tangram_pool(layouts):
    k = 0
    while True:
        layout = layouts[k % len(layouts)]
        yield make_tangram_instance(layout, VARIANTS[k % 3], 7000 + k)
        k += 1


def _apply(pool, spec, n=20):
    out = []
    for m in pool:
        try:
            frames, info = perturb_instance(m, spec)
        except NotApplicable:
            continue
        out.append((m, frames, info))
        if len(out) == n:
            return out


def test_04_perturbation_sensitivity(layouts, criterion):
    with criterion(4, "perturbation sensitivity, 7 modes x 20 videos") as d:
        summary = []
        for mode in ("wall_cross", "wrong_turn", "freeze", "teleport"):
            for m, frames, info in _apply(_maze_pool(), PerturbSpec(mode, at_step=0.5)):
                r = evaluate_maze(frames, m)
                L, k = info["path_len"], info["step"]
                em, pr = r.metrics["em"], r.metrics["pr"]
                d["msg"] = f"{mode} {m.instance_id}: em={em} pr={pr} k/L={k}/{L} tags={r.failure_tags}"
                assert em == 0.0
                if mode == "teleport":
                    assert pr <= k / L + 1 / L + 1e-9
                    assert TAG_KINEMATIC in r.failure_tags
                else:
                    assert abs(pr - k / L) <= 1 / L + 1e-9
                if mode == "wall_cross":
                    assert TAG_BOUNDARY in r.failure_tags
            summary.append(mode)

        for m, frames, info in _apply(_tangram_pool(layouts), PerturbSpec("shape_distort", 1.5)):
            r = evaluate_tangram(frames, m)
            us = [p["u"] for p in r.diagnostics["pieces"]]
            d["msg"] = f"shape_distort {m.instance_id}: u={us}"
            assert us.count(0) == 1 and us[info["piece"]] == 0
            assert TAG_STRUCTURAL in r.failure_tags
        summary.append("shape_distort")

        for m, frames, info in _apply(_tangram_pool(layouts), PerturbSpec("color_drift", 0.5)):
            r = evaluate_tangram(frames, m)
            d["msg"] = f"color_drift {m.instance_id}: {r.metrics} {r.failure_tags}"
            assert r.metrics["strict_gc"] == 0.0
            assert r.diagnostics["pieces"][info["piece"]]["u"] == 0
            assert TAG_CHROMATIC in r.failure_tags
        summary.append("color_drift")

        f = 0.5
        for m, frames, info in _apply(_tangram_pool(layouts), PerturbSpec("piece_vanish", f)):
            vc = evaluate_tangram(frames, m).metrics["visual_consistency"]
            d["msg"] = f"piece_vanish {m.instance_id}: vc={vc}"
            assert vc <= 1 - f / 7 + 0.02
        summary.append("piece_vanish")
        d["msg"] = "all targeted metrics flipped: " + ", ".join(summary)


def test_05_shape_classifier_robustness(criterion):
    with criterion(5, "shape classifier on 1000 rigid placements") as d:
        rng = np.random.default_rng(5)
        scale = 96
        raster_ok = poly_ok = 0
        for i in range(1000):
            pid = int(rng.integers(7))
            want = KIND_SHAPE[PIECE_KINDS[pid]]
            poly = canonical_piece(pid) * scale
            c = polygon_centroid(poly)
            shift = np.array([128.0, 128.0]) + rng.uniform(-1, 1, 2) - c
            moved = transform_polygon(poly, rng.uniform(0, 360), tuple(c), tuple(shift))
            poly_ok += classify_shape(moved) == want
            mask = rasterize(moved, 256, 256)
            raster_ok += classify_shape(simplify_polygon(extract_contour(mask))) == want
        d["msg"] = f"raster {raster_ok / 10:.1f}%, polygons {1000 - poly_ok} errors"
        assert raster_ok >= 995
        assert poly_ok == 1000


def test_06_iou_oracle(criterion):
    with criterion(6, "raster IoU vs analytic IoU, 100 rectangle pairs") as d:
        rng = np.random.default_rng(6)

        def rect():
            x0, y0 = rng.uniform(0, 130, 2)
            w, h = rng.uniform(40, 120, 2)
            return (x0, y0, x0 + w, y0 + h)

        def raster(r):
            x0, y0, x1, y1 = r
            return rasterize([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], 256, 256)

        worst = 0.0
        overlapping = 0
        for _ in range(100):
            a, b = rect(), rect()
            iw = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
            ih = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
            inter = iw * ih
            union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
            overlapping += inter > 0
            worst = max(worst, abs(mask_iou(raster(a), raster(b)) - inter / union))
        d["msg"] = f"max abs error {worst:.4f} ({overlapping} overlapping pairs)"
        assert worst <= 0.01


def test_07_scaling_arithmetic(tmp_path, criterion):
    with criterion(7, "kappa scaling on an 18-step path") as d:
        expected = {5: 90, 7: 126, 9: 162, 11: 198}
        for kappa, total in expected.items():
            assert FrameSchedule.per_step(18, kappa).motion_frames(18) == total
        assert main(["generate", "--task", "maze", "--tier", "custom", "--sizes", "6", "--path-range", "18,18",
                     "--per-config", "1", "--no-images", "--out", str(tmp_path / "ds")]) == 0
        m = load_instance(tmp_path / "ds", list_instances(tmp_path / "ds")[0])
        assert len(m.actions) == 18
        rows = cmd_sweep(SweepConfig("kappa", tuple(expected), instances_per_cell=1), tmp_path / "ds", tmp_path / "sw")
        got = {int(r["value"]): int(float(r["motion_frames"])) for r in rows}
        d["msg"] = f"motion frames {got}"
        assert got == expected
        assert all(float(r["em"]) == 1.0 for r in rows)


def test_08_dataset_shape(tmp_path, criterion):
    with criterion(8, "dataset shape, maze tiers and tangram layout dirs") as d:
        train = cmd_generate("maze", "train", tmp_path / "train", images=False)
        test = cmd_generate("maze", "test", tmp_path / "test", images=False)
        assert train["total"] == 4000 and len(list_instances(tmp_path / "train")) == 4000
        assert set(test["counts"].values()) == {250} and len(test["counts"]) == 10
        assert len(list_instances(tmp_path / "test")) == 2500

        layouts = synthesize_layouts(692 + 125, seed=8, prefix="lay")
        write_layouts(layouts[:692], tmp_path / "lay-train")
        write_layouts(layouts[692:], tmp_path / "lay-test")
        n_train = len(load_layout_dir(tmp_path / "lay-train"))
        n_test = len(load_layout_dir(tmp_path / "lay-test"))
        assert (n_train, n_test) == (692, 125)
        tt = cmd_generate("tangram", "train", tmp_path / "t-train", layouts_dir=tmp_path / "lay-train",
                          variants=["Translation"], images=False)
        te = cmd_generate("tangram", "test", tmp_path / "t-test", layouts_dir=tmp_path / "lay-test",
                          variants=["Translation"], images=False)
        d["msg"] = f"maze {train['total']} train / {test['counts']['iid-3x3']} per test config; tangram {tt['total']}/{te['total']}"
        assert (tt["total"], te["total"]) == (692, 125)


def _planted_reports(rho: float, n: int = 200) -> list[EvalReport]:
    """Reports whose sample correlation is exactly ``rho`` by construction."""
    rng = np.random.default_rng(int(1000 * (rho + 2)))
    y = np.array([1.0] * (n // 2) + [0.0] * (n - n // 2))
    yc = (y - y.mean()) / y.std()
    z = rng.standard_normal(n)
    z -= z.mean()
    z -= (z @ yc) / (yc @ yc) * yc
    z /= z.std()
    x = rho * yc + math.sqrt(max(0.0, 1 - rho * rho)) * z
    vc = 0.5 + 0.08 * x
    assert vc.min() >= 0 and vc.max() <= 1
    return [
        EvalReport(f"r{i:03d}", "tangram", "Translation", ("iid",),
                   {"strict_gc": y[i], "progress_gc": y[i], "boundary_iou": 1.0, "visual_consistency": float(vc[i])})
        for i in range(n)
    ]


def test_09_correlation_recovery(tmp_path, criterion):
    with criterion(9, "planted correlation recovery") as d:
        got = {}
        for rho in (-1.0, 0.0, 0.6, 1.0):
            rd = tmp_path / f"rho{rho}"
            for r in _planted_reports(rho):
                write_report(r, rd / "reports" / f"{r.instance_id}.json")
            summary = cmd_report(rd, ["json"], rd / "out")
            payload = json.loads((rd / "out" / "aggregate.json").read_text())
            value = payload["consistency_success_correlation"]["value"]
            assert value == summary["consistency_success_correlation"]["value"]
            got[rho] = value
        d["msg"] = "recovered " + ", ".join(f"{k:g}->{v:.4f}" for k, v in got.items())
        assert all(abs(v - k) <= 0.02 for k, v in got.items())


def _pipeline(root: Path) -> None:
    maze = ["generate", "--task", "maze", "--tier", "custom", "--sizes", "4,6", "--path-range", "5,12", "--per-config", "2"]
    tangram = ["generate", "--task", "tangram", "--tier", "test", "--limit", "1"]
    for task, args in (("maze", maze), ("tangram", tangram)):
        ds = root / task
        assert main(["--seed", "42"] + args + ["--out", str(ds)]) == 0
        assert main(["synthesize", str(ds)]) == 0
        assert main(["evaluate", str(ds / "golden"), str(ds), "--out", str(root / f"eval-{task}")]) == 0


def _artifacts(root: Path) -> dict:
    keep = ("manifest.json", ".png", "aggregate.csv")
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name.endswith(keep)
    }


def test_10_determinism(tmp_path, criterion):
    with criterion(10, "two seeded pipeline runs are byte-identical") as d:
        _pipeline(tmp_path / "a")
        _pipeline(tmp_path / "b")
        a, b = _artifacts(tmp_path / "a"), _artifacts(tmp_path / "b")
        kinds = {k: sum(1 for p in a if p.endswith(k)) for k in ("manifest.json", ".png", "aggregate.csv")}
        d["msg"] = f"{len(a)} files compared {kinds}"
        assert kinds["manifest.json"] == 7 and kinds["aggregate.csv"] == 2
        assert a.keys() == b.keys()
        assert all(a[k] == b[k] for k in a)
