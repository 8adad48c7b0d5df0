from __future__ import annotations

from collections import deque
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpb.errors import InfeasibleRange, InvalidMaze, ScheduleError
from fpb.icons import SEEN_IDS, UNSEEN_IDS
from fpb.maze_gen import (
    ACTIONS,
    classify_splits,
    generate_maze,
    internal_edges,
    is_spanning_tree,
    replay,
    sample_instance,
    sample_layout,
    solve_shortest_path,
    validate_maze,
)
from fpb.records import FrameSchedule


def ref_distance(spec, a, b):
    """Grid BFS written against the raw wall set."""
    dist = {a: 0}
    q = deque([a])
    while q:
        cur = q.popleft()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            n = (cur[0] + dr, cur[1] + dc)
            if not (0 <= n[0] < spec.rows and 0 <= n[1] < spec.cols):
                continue
            wall = (cur, n) if cur <= n else (n, cur)
            if wall in spec.walls or n in dist:
                continue
            dist[n] = dist[cur] + 1
            q.append(n)
    return dist.get(b)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.integers(3, 12), st.integers(0, 2**31 - 1))
def test_generated_maze_is_spanning_tree(rows, cols, seed):
    m = generate_maze(rows, cols, seed)
    assert is_spanning_tree(m)
    n_open = len(internal_edges(rows, cols)) - len(m.walls)
    assert n_open == rows * cols - 1


def test_generation_is_deterministic():
    assert generate_maze(6, 7, 99).walls == generate_maze(6, 7, 99).walls
    assert generate_maze(6, 7, 99).walls != generate_maze(6, 7, 100).walls


@pytest.mark.parametrize("seed", range(15))
def test_solver_matches_bfs_oracle(seed):
    m = sample_instance(6, 6, (2, 18), "seen", seed)
    spec = m.maze
    actions = solve_shortest_path(spec)
    assert len(actions) == ref_distance(spec, spec.start, spec.goal)
    cells = replay(spec, actions)
    assert cells[0] == spec.start and cells[-1] == spec.goal
    for a, b in zip(cells, cells[1:]):
        assert not spec.blocked(a, b)


def test_sample_layout_respects_range():
    for seed in range(10):
        spec = sample_layout(5, 5, (13, 18), seed)
        d = ref_distance(spec, spec.start, spec.goal)
        assert 13 <= d <= 18


def test_infeasible_range_raises():
    with pytest.raises(InfeasibleRange):
        sample_layout(3, 3, (9, 12), 0)
    with pytest.raises(InfeasibleRange):
        sample_layout(4, 4, (5, 2), 0)


def test_avoid_set_forces_new_layout():
    a = sample_layout(3, 3, (2, 4), 1)
    b = sample_layout(3, 3, (2, 4), 1, avoid={a.layout_key()})
    assert a.layout_key() != b.layout_key()


def test_validate_rejects_bad_mazes():
    spec = sample_layout(4, 4, (3, 6), 2)
    extra = next(iter(spec.walls))
    with pytest.raises(InvalidMaze):
        validate_maze(replace(spec, walls=spec.walls - {extra}))
    with pytest.raises(InvalidMaze):
        validate_maze(replace(spec, goal=spec.start))
    with pytest.raises(InvalidMaze):
        validate_maze(replace(spec, start=(9, 9)))


def test_validate_rejects_wall_crossing_solution():
    spec = sample_layout(4, 4, (3, 6), 2)
    actions = solve_shortest_path(spec)
    validate_maze(spec, actions)
    cur = spec.start
    bad = None
    for name, (dr, dc) in ACTIONS.items():
        n = (cur[0] + dr, cur[1] + dc)
        if spec.in_bounds(n) and spec.blocked(cur, n):
            bad = name
    if bad is None:
        pytest.skip("start cell has no internal wall")
    with pytest.raises(InvalidMaze):
        validate_maze(spec, [bad] + actions)


def test_split_tags():
    assert classify_splits(4, 4, 5, "seen") == ("iid",)
    assert classify_splits(7, 7, 5, "seen") == ("spatial_ood",)
    assert classify_splits(5, 5, 13, "seen") == ("temporal_ood",)
    assert classify_splits(8, 8, 18, "unseen") == ("both_ood", "unseen_icon")


def test_instance_icon_pools():
    seen = sample_instance(4, 4, (2, 12), "seen", 3)
    unseen = sample_instance(4, 4, (2, 12), "unseen", 3)
    assert seen.maze.icon_id in SEEN_IDS
    assert unseen.maze.icon_id in UNSEEN_IDS
    assert not set(SEEN_IDS) & set(UNSEEN_IDS)


def test_fixed_total_schedule_arithmetic():
    s = FrameSchedule.fixed_total(10)
    assert (s.total_frames, s.kappa, s.lead_hold, s.tail_hold) == (81, 7, 4, 7)
    s.validate(10)
    with pytest.raises(ScheduleError):
        FrameSchedule.fixed_total(90)
    with pytest.raises(ScheduleError):
        s.validate(11)


@pytest.mark.parametrize("kappa", [5, 7, 9, 11])
def test_per_step_schedule(kappa):
    s = FrameSchedule.per_step(18, kappa, 4, 4)
    assert s.motion_frames(18) == 18 * kappa
    assert s.total_frames == 18 * kappa + 8
    s.validate(18)
