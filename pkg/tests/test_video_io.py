from __future__ import annotations

import json
from dataclasses import replace

import numpy as np
import pytest

from fpb.errors import EmptySequence, InvalidManifest, MissingFrame, ShapeMismatch, VersionError
from fpb.frames import FrameSequence
from fpb.records import EvalReport
from fpb.video_io import (
    AGG_COLUMNS,
    aggregate_rows,
    dumps_manifest,
    manifest_from_dict,
    manifest_to_dict,
    mean_rows,
    read_aggregate_csv,
    read_frames,
    read_manifest,
    read_report,
    write_aggregate_csv,
    write_frames,
    write_manifest,
    write_report,
)


def _frames(n=4, w=8, h=6):
    rng = np.random.default_rng(0)
    return [rng.integers(0, 256, (h, w, 3), dtype=np.uint8) for _ in range(n)]


def test_frames_round_trip(tmp_path):
    frames = _frames()
    write_frames(frames, tmp_path / "v")
    back = read_frames(tmp_path / "v")
    assert (back.width, back.height, len(back)) == (8, 6, 4)
    for a, b in zip(frames, back):
        assert np.array_equal(a, b)


def test_missing_frame_detected(tmp_path):
    write_frames(_frames(), tmp_path)
    (tmp_path / "frame_00002.png").unlink()
    with pytest.raises(MissingFrame):
        read_frames(tmp_path)


def test_empty_directory(tmp_path):
    with pytest.raises(EmptySequence):
        read_frames(tmp_path)
    with pytest.raises(EmptySequence):
        read_frames(tmp_path / "absent")


def test_mixed_sizes_detected(tmp_path):
    write_frames(_frames(2) + _frames(1, w=9), tmp_path)
    with pytest.raises(ShapeMismatch):
        read_frames(tmp_path)


def test_frame_sequence_checks():
    with pytest.raises(EmptySequence):
        FrameSequence([])
    seq = FrameSequence([np.zeros((4, 4, 3), np.uint8), np.zeros((5, 4, 3), np.uint8)])
    with pytest.raises(ShapeMismatch):
        seq[1]
    re = FrameSequence(_frames()).retimed([0, 0, 3])
    assert len(re) == 3 and np.array_equal(re[2], _frames()[3])


def test_maze_manifest_round_trip(maze_5x5, tmp_path):
    text = dumps_manifest(maze_5x5)
    back = manifest_from_dict(json.loads(text))
    assert back.maze == maze_5x5.maze
    assert back.actions == maze_5x5.actions
    assert back.schedule == maze_5x5.schedule
    assert dumps_manifest(back) == text
    p = write_manifest(maze_5x5, tmp_path / "m.json")
    assert read_manifest(p).instance_id == "m55"


@pytest.mark.parametrize("variant", ["FadeIn", "Rotation", "Translation"])
def test_tangram_manifest_round_trip(tangram_instances, variant):
    m = tangram_instances[variant]
    text = dumps_manifest(m)
    back = manifest_from_dict(json.loads(text))
    assert dumps_manifest(back) == text
    assert np.array_equal(back.scene.silhouette, m.scene.silhouette)
    assert back.scene.total_frames == m.scene.total_frames


def test_manifest_version_error(maze_5x5):
    d = manifest_to_dict(maze_5x5)
    d["schema_version"] = 2
    with pytest.raises(VersionError):
        manifest_from_dict(d)


def _mutated(m, fn):
    d = json.loads(dumps_manifest(m))
    fn(d)
    return d


def test_manifest_with_wall_crossing_solution_rejected(maze_5x5):
    from fpb.maze_gen import ACTIONS

    spec = maze_5x5.maze
    r, c = spec.start
    through = [
        a for a, (dr, dc) in ACTIONS.items() if spec.in_bounds((r + dr, c + dc)) and spec.blocked((r, c), (r + dr, c + dc))
    ]
    assert through, "fixture start cell should touch an internal wall"

    def fn(d):
        d["actions"] = [through[0]] + list(d["actions"])

    with pytest.raises(InvalidManifest):
        manifest_from_dict(_mutated(maze_5x5, fn))


@pytest.mark.parametrize(
    "fn",
    [
        lambda d: d["maze"].update(goal=d["maze"]["start"]),
        lambda d: d["maze"]["walls"].pop(),
        lambda d: d["schedule"].update(total_frames=d["schedule"]["total_frames"] + 1),
        lambda d: d.update(splits=["spatial_ood"]),
        lambda d: d.pop("actions"),
        lambda d: d.update(task="cube"),
    ],
)
def test_inconsistent_maze_manifest_rejected(maze_5x5, fn):
    with pytest.raises(InvalidManifest):
        manifest_from_dict(_mutated(maze_5x5, fn))


def test_inconsistent_tangram_manifest_rejected(tangram_instances):
    m = tangram_instances["Rotation"]
    with pytest.raises(InvalidManifest):
        manifest_from_dict(_mutated(m, lambda d: d.update(canvas=[256, 256])))
    with pytest.raises(InvalidManifest):
        manifest_from_dict(_mutated(m, lambda d: d["scene"].update(total_frames=12)))


def test_manifest_not_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(InvalidManifest):
        read_manifest(p)


def _reports():
    return [
        EvalReport("a", "maze", "g1", ("iid",), {"em": 1.0, "pr": 1.0}),
        EvalReport("b", "maze", "g1", ("iid",), {"em": 0.0, "pr": 0.5}, ["incomplete path"]),
        EvalReport("c", "maze", "g2", ("both_ood", "unseen_icon"), {"em": 0.0, "pr": 0.25}),
        EvalReport(
            "d",
            "tangram",
            "FadeIn",
            ("iid",),
            {"strict_gc": 1.0, "progress_gc": 1.0, "boundary_iou": 0.995, "visual_consistency": 1.0},
        ),
    ]


def test_report_round_trip(tmp_path):
    r = EvalReport("x", "maze", "g", ("iid",), {"em": 0.0, "pr": 1 / 3}, ["overshoot"], {"cells": [[0, 1]]}, None)
    write_report(r, tmp_path / "x.json")
    back = read_report(tmp_path / "x.json")
    assert back.metrics["pr"] == pytest.approx(1 / 3, abs=1e-6)
    assert back.failure_tags == ["overshoot"]
    assert back.splits == ("iid",)


def test_aggregate_rows_and_means(tmp_path):
    rows = aggregate_rows(_reports())
    inst = [r for r in rows if r["row_type"] == "instance"]
    assert [r["instance_id"] for r in inst] == ["a", "b", "c", "d"]
    means = {(r["task"], r["group"], r["split"]): r for r in mean_rows(rows)}
    assert means[("maze", "g1", "iid")]["em"] == "0.5"
    assert means[("maze", "g1", "iid")]["pr"] == "0.75"
    assert means[("maze", "g2", "unseen_icon")]["n"] == "1"
    assert means[("tangram", "FadeIn", "iid")]["boundary_iou"] == "0.995"
    assert means[("tangram", "FadeIn", "iid")]["em"] == ""

    p = write_aggregate_csv(_reports(), tmp_path / "agg.csv")
    back = read_aggregate_csv(p)
    assert back == rows
    assert list(back[0]) == list(AGG_COLUMNS)


def test_aggregate_is_order_independent(tmp_path):
    a = write_aggregate_csv(_reports(), tmp_path / "a.csv").read_bytes()
    b = write_aggregate_csv(_reports()[::-1], tmp_path / "b.csv").read_bytes()
    assert a == b


def test_mean_rows_recompute_from_instances():
    reps = _reports() + [replace(_reports()[0], instance_id="e", metrics={"em": 1.0, "pr": 0.9})]
    rows = aggregate_rows(reps)
    inst = [r for r in rows if r["row_type"] == "instance" and r["task"] == "maze" and "iid" in r["split"].split(";")]
    m = [r for r in mean_rows(rows, "maze") if r["split"] == "iid"][0]
    assert float(m["pr"]) == pytest.approx(np.mean([float(r["pr"]) for r in inst]), abs=1e-6)
