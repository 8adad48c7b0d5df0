from __future__ import annotations

import numpy as np
import pytest

from fpb.errors import CorrelationUndefined, PaletteError, SilhouetteError, TaskMismatch
from fpb.eval_tangram import (
    TAG_ANGULAR,
    TAG_CENTROID,
    TAG_CHROMATIC,
    TAG_OVERLAP,
    TAG_STRUCTURAL,
    PaletteProps,
    PieceProps,
    assign_colors,
    boundary_iou,
    consistency_success_correlation,
    evaluate_tangram,
    extract_palette_props,
    extract_target_silhouette,
    overlapping_pairs,
    piece_completion,
    sample_indices,
    strict_and_progress,
    visual_consistency,
)
from fpb.geom import ShapeClass
from fpb.records import EvalReport
from fpb.tangram_gen import synthesize_assembly_video


def frames_of(m):
    video = synthesize_assembly_video(m.scene)
    return [np.array(video[i]) for i in range(len(video))]


@pytest.mark.parametrize("variant", ["FadeIn", "Rotation", "Translation"])
def test_golden_round_trip(tangram_instances, variant):
    m = tangram_instances[variant]
    r = evaluate_tangram(frames_of(m), m)
    assert r.metrics["strict_gc"] == 1.0
    assert r.metrics["progress_gc"] == 1.0
    assert r.metrics["boundary_iou"] >= 0.99
    assert r.metrics["visual_consistency"] == 1.0
    assert r.failure_tags == []
    assert r.diagnostics["reference_mode"] == "golden"


def test_assign_colors_strict_nearest():
    palette = np.array([[200, 0, 0], [0, 200, 0]])
    frame = np.array([[[190, 10, 0], [100, 100, 0], [0, 0, 0], [0, 150, 0]]], dtype=np.uint8)
    out = assign_colors(frame, palette, 60)
    # (100, 100, 0) is equidistant from both colors and stays unassigned
    assert out.tolist() == [[0, -1, -1, 1]]


def test_static_reference_penalizes_fadein(tangram_instances):
    m = tangram_instances["FadeIn"]
    frames = frames_of(m)
    props = extract_palette_props(frames[0], m)
    vc = visual_consistency(frames, props, None, 16)
    assert 0.0 < vc < 1.0
    t = tangram_instances["Translation"]
    tf = frames_of(t)
    assert visual_consistency(tf, extract_palette_props(tf[0], t), None, 16) == 1.0


def test_palette_discovery_without_manifest(tangram_instances):
    m = tangram_instances["Rotation"]
    first = np.array(synthesize_assembly_video(m.scene)[0])
    found = extract_palette_props(first, variant="Rotation")
    assert {p.color for p in found.pieces} == {p.color for p in m.scene.pieces}
    with pytest.raises(PaletteError):
        extract_palette_props(np.full((256, 256, 3), 255, np.uint8), variant="FadeIn")
    with pytest.raises(PaletteError):
        extract_palette_props(np.full_like(first, 255), variant="Rotation")


def test_missing_sidebar_piece_is_palette_error(tangram_instances):
    m = tangram_instances["Translation"]
    first = np.array(synthesize_assembly_video(m.scene)[0])
    color = np.array(m.scene.pieces[3].color, dtype=np.uint8)
    first[np.all(first == color, axis=2)] = 255
    with pytest.raises(PaletteError):
        extract_palette_props(first, m)


def test_silhouette_errors(tangram_instances):
    m = tangram_instances["Translation"]
    blank = np.full((256, 512, 3), 255, dtype=np.uint8)
    with pytest.raises(SilhouetteError):
        extract_target_silhouette(blank, m)
    wrong = blank.copy()
    wrong[40:100, 300:400] = 0
    with pytest.raises(SilhouetteError):
        extract_target_silhouette(wrong, m)
    with pytest.raises(TaskMismatch):
        extract_target_silhouette(np.zeros((10, 10, 3), np.uint8), m)


def _square(mask_shape, x0, y0, n):
    m = np.zeros(mask_shape, bool)
    m[y0 : y0 + n, x0 : x0 + n] = True
    return m


def _props(areas, shapes):
    return PaletteProps("Translation", [PieceProps((i, i, i), a, s, "sidebar") for i, (a, s) in enumerate(zip(areas, shapes))])


def test_piece_completion_tags():
    shape = (100, 100)
    sil = _square(shape, 10, 10, 40)
    props = _props([400, 400, 400, 400], [ShapeClass.SQUARE] * 4)
    ok = _square(shape, 10, 10, 20)
    small = _square(shape, 30, 10, 10)
    out_far = _square(shape, 70, 70, 20)
    straddle = _square(shape, 40, 30, 20)  # centroid inside, part hangs outside
    v = piece_completion([ok, small, out_far, straddle], props, sil)
    assert [x.u for x in v] == [1, 0, 0, 0]
    assert v[1].failure_tags == [TAG_STRUCTURAL]
    assert v[2].failure_tags == [TAG_CENTROID]
    assert v[3].failure_tags == [TAG_ANGULAR]


def test_absent_piece_tags():
    shape = (50, 50)
    sil = _square(shape, 0, 0, 20)
    props = _props([100, 100], [ShapeClass.SQUARE] * 2)
    empty = np.zeros(shape, bool)
    v = piece_completion([empty, empty], props, sil, present_elsewhere=[False, True])
    assert v[0].failure_tags == [TAG_CHROMATIC]
    assert v[1].failure_tags == [TAG_CENTROID]


def test_overlap_pairs_and_forcing():
    shape = (60, 60)
    a = _square(shape, 0, 0, 20)
    b = _square(shape, 19, 0, 20)  # one shared column: 5% of a 400 px piece
    c = _square(shape, 40, 40, 10)
    touching = _square(shape, 20, 20, 10)
    assert overlapping_pairs([a, b, c]) == [(0, 1)]
    assert overlapping_pairs([a, touching]) == []
    # a ring drawn around another piece counts as covering it
    ring = _square(shape, 30, 30, 20) & ~_square(shape, 35, 35, 10)
    inner = _square(shape, 37, 37, 6)
    assert overlapping_pairs([ring, inner]) == [(0, 1)]

    sil = np.ones(shape, bool)
    props = _props([400, 400, 100], [ShapeClass.SQUARE] * 3)
    v = piece_completion([a, b, c], props, sil)
    assert [x.u for x in v] == [1, 1, 1]
    strict, progress = strict_and_progress(v, [a, b, c])
    assert strict == 0 and progress == pytest.approx(1 / 3)
    assert TAG_OVERLAP in v[0].failure_tags and TAG_OVERLAP in v[1].failure_tags


def test_boundary_iou_cases():
    sil = _square((20, 20), 0, 0, 10)
    assert boundary_iou([sil[:, :]], sil) == 1.0
    half = _square((20, 20), 0, 0, 10) & (np.arange(20) < 5)[None, :]
    assert boundary_iou([half], sil) == pytest.approx(0.5)
    empty = np.zeros((20, 20), bool)
    assert boundary_iou([empty], empty) == 1.0


def test_sample_indices():
    idx = sample_indices(81, 16)
    assert len(idx) == 16 and idx[0] == 0 and idx[-1] == 80
    assert idx == sorted(idx)
    with pytest.raises(ValueError):
        sample_indices(81, 1)


def test_correlation():
    reps = [EvalReport(str(i), "tangram", metrics={"visual_consistency": x, "strict_gc": y}) for i, (x, y) in enumerate(
        [(1.0, 1.0), (0.9, 1.0), (0.5, 0.0), (0.4, 0.0)]
    )]
    x = np.array([1.0, 0.9, 0.5, 0.4])
    y = np.array([1.0, 1.0, 0.0, 0.0])
    assert consistency_success_correlation(reps) == pytest.approx(np.corrcoef(x, y)[0, 1])
    with pytest.raises(CorrelationUndefined):
        consistency_success_correlation(reps[:2])
    same = [EvalReport(str(i), "tangram", metrics={"visual_consistency": 1.0, "strict_gc": 1.0}) for i in range(5)]
    with pytest.raises(CorrelationUndefined):
        consistency_success_correlation(same)


def test_final_frame_with_missing_piece(tangram_instances):
    m = tangram_instances["Translation"]
    frames = frames_of(m)
    pid = m.scene.order[-1]
    color = np.array(m.scene.pieces[pid].color, dtype=np.uint8)
    last = frames[-1]
    last[np.all(last == color, axis=2)] = 0
    r = evaluate_tangram(frames, m)
    assert r.metrics["strict_gc"] == 0.0
    assert r.metrics["progress_gc"] == pytest.approx(6 / 7)
    assert r.metrics["boundary_iou"] < 1.0
    assert TAG_CHROMATIC in r.failure_tags
