from __future__ import annotations

import numpy as np
import pytest

from fpb.errors import InvalidLayout, ScheduleError
from fpb.geom import polygon_centroid, rasterize
from fpb.layouts import Layout, square_layout
from fpb.tangram_gen import (
    FADEIN_PALETTE,
    RANDOM_POOL,
    TRANSLATION_FRAMES,
    VARIANTS,
    assemble_scene,
    board_scale,
    build_scene,
    draw_palette,
    draw_rotation_offsets,
    frame_progress,
    piece_state,
    placement_order,
    scene_area_check,
    synthesize_assembly_video,
    window_length,
)


def test_window_length_and_minimum():
    assert window_length(81) == 11
    assert window_length(201) == 28
    assert window_length(29) == 4
    with pytest.raises(ScheduleError):
        window_length(28)


def test_frame_progress_covers_every_window():
    T = 81
    w = window_length(T)
    assert frame_progress(T, 0) == (0, 0.0)
    seen = {}
    for t in range(1, 7 * w + 1):
        k, p = frame_progress(T, t)
        seen.setdefault(k, []).append(p)
    assert sorted(seen) == list(range(7))
    for ps in seen.values():
        assert ps[-1] == 1.0 and all(0 < a < b for a, b in zip(ps, ps[1:]))
    assert frame_progress(T, 80) == (6, 1.0)


def test_placement_order_descending_area():
    assert placement_order() == (0, 1, 2, 5, 6, 3, 4)


def test_palettes():
    assert draw_palette("FadeIn", 3) == FADEIN_PALETTE
    pal = draw_palette("Rotation", 3)
    assert len(set(pal)) == 7 and set(pal) <= set(RANDOM_POOL)
    assert (0, 0, 0) not in RANDOM_POOL and (255, 255, 255) not in RANDOM_POOL


def test_rotation_offsets_are_nonzero_multiples():
    for seed in range(20):
        offs = draw_rotation_offsets("Rotation", seed)
        assert all(o % 15 == 0 and o != 0 and -180 < o <= 180 for o in offs)
    assert draw_rotation_offsets("Translation", 1) == (0,) * 7


@pytest.mark.parametrize("variant", VARIANTS)
def test_scene_geometry(layouts, variant):
    scene = build_scene(layouts[2], variant, 5)
    assert scene_area_check(scene)
    w, h = scene.canvas
    assert (w, h) == ((256, 256) if variant == "FadeIn" else (512, 256))
    sil = scene.silhouette
    assert not (sil & ~scene.board_region()).any()
    for rec in scene.pieces:
        if variant == "FadeIn":
            assert rec.initial_poly is None
        else:
            init = rasterize(rec.initial_poly, w, h)
            assert init.any()
            assert not init[:, 256:].any()
            assert rec.ref_area == int(init.sum())
    if variant == "Translation":
        assert scene.total_frames in TRANSLATION_FRAMES


def test_sidebar_pieces_do_not_overlap(layouts):
    for layout in layouts[:10]:
        scene = build_scene(layout, "Rotation", 1)
        acc = np.zeros(scene.canvas[::-1], dtype=int)
        for rec in scene.pieces:
            acc += rasterize(rec.initial_poly, *scene.canvas)
        assert acc.max() == 1


def test_board_scale_is_integer_and_fits(layouts):
    for layout in layouts:
        s, (ox, oy) = board_scale(layout)
        x0, y0, x1, y1 = layout.bbox()
        assert isinstance(s, int) and s <= 96
        assert 0 <= ox + s * x0 and ox + s * x1 <= 256
        assert 0 <= oy + s * y0 and oy + s * y1 <= 256


def test_scene_is_deterministic(layouts):
    a = build_scene(layouts[3], "Rotation", 9)
    b = build_scene(layouts[3], "Rotation", 9)
    assert [p.color for p in a.pieces] == [p.color for p in b.pieces]
    assert all(np.array_equal(p.initial_poly, q.initial_poly) for p, q in zip(a.pieces, b.pieces))


def test_duplicate_colors_rejected():
    with pytest.raises(InvalidLayout):
        assemble_scene(square_layout(), "Translation", [(250, 0, 0)] * 7, (0,) * 7, total_frames=61)


def test_overlapping_layout_rejected():
    sq = square_layout()
    pieces = list(sq.pieces)
    pieces[3] = pieces[3] - np.array([0.2, 0.0])
    with pytest.raises(InvalidLayout):
        build_scene(Layout("bad", tuple(pieces)), "FadeIn", 0)


def test_too_short_video_rejected(layouts):
    with pytest.raises(ScheduleError):
        build_scene(layouts[0], "FadeIn", 0, total_frames=20)


def test_rotation_piece_state(layouts):
    scene = build_scene(layouts[4], "Rotation", 2)
    pid = scene.order[0]
    rec = scene.pieces[pid]
    start, _ = piece_state(scene, pid, 0.0)
    assert np.allclose(start, rec.initial_poly)
    end, _ = piece_state(scene, pid, 1.0)
    assert np.allclose(end, rec.target_poly)
    # after the spin phase the piece has its target orientation at the slot
    w = window_length(scene.total_frames)
    mid, _ = piece_state(scene, pid, (w // 2) / w)
    rel = mid - polygon_centroid(mid)
    assert np.allclose(rel, rec.target_poly - polygon_centroid(rec.target_poly))


def test_fadein_color_ramps(layouts):
    scene = build_scene(layouts[0], "FadeIn", 0)
    rec = scene.pieces[0]
    assert piece_state(scene, 0, 0.0)[0] is None
    _, c = piece_state(scene, 0, 0.5)
    assert c == tuple(int(v) for v in np.rint(np.array(rec.color) * 0.5))


@pytest.mark.parametrize("variant", VARIANTS)
def test_golden_video_frames(layouts, variant):
    scene = build_scene(layouts[5], variant, 4)
    video = synthesize_assembly_video(scene)
    assert len(video) == scene.total_frames
    sil = scene.silhouette
    first, last = video[0], video[len(video) - 1]
    # frame 0 shows the whole silhouette, the last frame has it fully covered
    assert np.all(first[sil] == 0)
    covered = np.zeros_like(sil)
    for rec in scene.pieces:
        hit = np.all(last == np.array(rec.color, dtype=np.uint8), axis=2)
        assert np.array_equal(hit & scene.board_region(), scene.target_mask(rec.piece_id))
        covered |= hit
    assert np.array_equal(covered & sil, sil)
    assert not np.any(np.all(last == 0, axis=2))


def test_pieces_arrive_in_order(layouts):
    scene = build_scene(layouts[6], "Translation", 0)
    video = synthesize_assembly_video(scene)
    windows = scene.windows()
    for pid in scene.order:
        first, last = windows[pid]
        mask = scene.target_mask(pid)
        color = np.array(scene.pieces[pid].color, dtype=np.uint8)
        before = np.all(video[first - 1][mask] == color, axis=1).mean()
        after = np.all(video[last][mask] == color, axis=1).mean()
        assert before < 1.0 and after == 1.0


def test_resynthesis_with_other_length(layouts):
    scene = build_scene(layouts[0], "FadeIn", 0)
    assert len(synthesize_assembly_video(scene, 43)) == 43
    with pytest.raises(ScheduleError):
        synthesize_assembly_video(scene, 10)
