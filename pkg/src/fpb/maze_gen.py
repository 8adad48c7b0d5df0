"""Perfect-maze generation, shortest-path solving and instance sampling."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from . import icons, prompts
from .errors import InfeasibleRange, InvalidMaze
from .records import MAZE_CANVAS, FrameSchedule, InstanceManifest

Cell = tuple[int, int]
Wall = tuple[Cell, Cell]

ACTIONS = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}
DELTA_TO_ACTION = {v: k for k, v in ACTIONS.items()}

MIN_SIDE, MAX_SIDE = 3, 12
MAX_REJECTIONS = 10_000


def _wall(a: Cell, b: Cell) -> Wall:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class MazeSpec:
    rows: int
    cols: int
    walls: frozenset = field(default_factory=frozenset)
    start: Optional[Cell] = None
    goal: Optional[Cell] = None
    icon_id: int = 0
    seed: int = 0

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.rows and 0 <= cell[1] < self.cols

    def cells(self) -> Iterable[Cell]:
        for r in range(self.rows):
            for c in range(self.cols):
                yield (r, c)

    def blocked(self, a: Cell, b: Cell) -> bool:
        return _wall(a, b) in self.walls

    def neighbors(self, cell: Cell) -> list[Cell]:
        """Cells reachable in one move (open passage, in bounds)."""
        out = []
        for dr, dc in ACTIONS.values():
            n = (cell[0] + dr, cell[1] + dc)
            if self.in_bounds(n) and not self.blocked(cell, n):
                out.append(n)
        return out

    def layout_key(self) -> tuple:
        return (self.rows, self.cols, tuple(sorted(self.walls)), self.start, self.goal)


def internal_edges(rows: int, cols: int) -> list[Wall]:
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append(((r, c), (r, c + 1)))
            if r + 1 < rows:
                edges.append(((r, c), (r + 1, c)))
    return edges


def generate_maze(rows: int, cols: int, seed: int) -> MazeSpec:
    """Randomized depth-first-search spanning tree over the grid."""
    if rows < 2 or cols < 2:
        raise ValueError("maze needs at least 2 rows and 2 columns")
    rng = random.Random(seed)
    start = (rng.randrange(rows), rng.randrange(cols))
    visited = {start}
    stack = [start]
    passages: set[Wall] = set()
    while stack:
        cur = stack[-1]
        options = []
        for dr, dc in ACTIONS.values():
            n = (cur[0] + dr, cur[1] + dc)
            if 0 <= n[0] < rows and 0 <= n[1] < cols and n not in visited:
                options.append(n)
        if not options:
            stack.pop()
            continue
        nxt = rng.choice(options)
        passages.add(_wall(cur, nxt))
        visited.add(nxt)
        stack.append(nxt)
    walls = frozenset(e for e in internal_edges(rows, cols) if e not in passages)
    return MazeSpec(rows=rows, cols=cols, walls=walls, seed=seed)


def bfs_distances(spec: MazeSpec, source: Cell) -> dict[Cell, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        for n in spec.neighbors(cur):
            if n not in dist:
                dist[n] = dist[cur] + 1
                queue.append(n)
    return dist


def solve_shortest_path(spec: MazeSpec) -> list[str]:
    if spec.start is None or spec.goal is None:
        raise InvalidMaze("maze has no start/goal")
    parent: dict[Cell, Optional[Cell]] = {spec.start: None}
    queue = deque([spec.start])
    while queue:
        cur = queue.popleft()
        if cur == spec.goal:
            break
        for n in spec.neighbors(cur):
            if n not in parent:
                parent[n] = cur
                queue.append(n)
    if spec.goal not in parent:
        raise InvalidMaze(f"goal {spec.goal} unreachable from {spec.start}")
    path = [spec.goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()
    return cells_to_actions(path)


def cells_to_actions(path: list[Cell]) -> list[str]:
    actions = []
    for a, b in zip(path, path[1:]):
        delta = (b[0] - a[0], b[1] - a[1])
        if delta not in DELTA_TO_ACTION:
            raise InvalidMaze(f"non-adjacent step {a} -> {b}")
        actions.append(DELTA_TO_ACTION[delta])
    return actions


def replay(spec: MazeSpec, actions: Iterable[str]) -> list[Cell]:
    """Apply actions from the start cell; raise InvalidMaze on an illegal move."""
    if spec.start is None:
        raise InvalidMaze("maze has no start")
    cur = spec.start
    cells = [cur]
    for a in actions:
        if a not in ACTIONS:
            raise InvalidMaze(f"unknown action {a!r}")
        dr, dc = ACTIONS[a]
        nxt = (cur[0] + dr, cur[1] + dc)
        if not spec.in_bounds(nxt):
            raise InvalidMaze(f"action {a!r} leaves the grid at {cur}")
        if spec.blocked(cur, nxt):
            raise InvalidMaze(f"action {a!r} crosses a wall between {cur} and {nxt}")
        cur = nxt
        cells.append(cur)
    return cells


def is_spanning_tree(spec: MazeSpec) -> bool:
    n_cells = spec.rows * spec.cols
    n_open = len(internal_edges(spec.rows, spec.cols)) - len(spec.walls)
    if n_open != n_cells - 1:
        return False
    return len(bfs_distances(spec, (0, 0))) == n_cells


def validate_maze(spec: MazeSpec, actions: Optional[list[str]] = None) -> None:
    """Raise InvalidMaze unless the spec (and optional solution) is well formed."""
    if not (MIN_SIDE <= spec.rows <= MAX_SIDE and MIN_SIDE <= spec.cols <= MAX_SIDE):
        raise InvalidMaze(f"grid {spec.rows}x{spec.cols} outside [{MIN_SIDE}, {MAX_SIDE}]")
    valid_edges = set(internal_edges(spec.rows, spec.cols))
    for w in spec.walls:
        if w not in valid_edges:
            raise InvalidMaze(f"wall {w} is not between grid-adjacent cells")
    if not is_spanning_tree(spec):
        raise InvalidMaze("open passages do not form a spanning tree")
    if spec.start is None or spec.goal is None:
        raise InvalidMaze("missing start or goal")
    if not (spec.in_bounds(spec.start) and spec.in_bounds(spec.goal)):
        raise InvalidMaze("start or goal out of bounds")
    if spec.start == spec.goal:
        raise InvalidMaze("start equals goal")
    if actions is not None:
        cells = replay(spec, actions)
        if cells[-1] != spec.goal:
            raise InvalidMaze("action sequence does not end at the goal")
        if len(actions) != len(solve_shortest_path(spec)):
            raise InvalidMaze("action sequence is not a shortest path")


def max_tree_distance_bound(rows: int, cols: int) -> int:
    return rows * cols - 1


def sample_layout(
    rows: int,
    cols: int,
    path_len_range: tuple[int, int],
    seed: int,
    avoid: Optional[set] = None,
) -> MazeSpec:
    """Rejection-sample a maze with a start/goal pair at a distance in range."""
    lo, hi = path_len_range
    if lo > hi or hi < 1:
        raise InfeasibleRange(f"empty path-length range {path_len_range}")
    rng = random.Random(seed)
    rejections = 0
    feasible_at_all = lo <= max_tree_distance_bound(rows, cols)
    while rejections <= MAX_REJECTIONS:
        maze = generate_maze(rows, cols, rng.getrandbits(32))
        pairs = []
        if feasible_at_all:
            for a in maze.cells():
                for b, d in bfs_distances(maze, a).items():
                    if lo <= d <= hi:
                        pairs.append((a, b))
        if pairs:
            a, b = rng.choice(pairs)
            cand = replace(maze, start=a, goal=b)
            if avoid is None or cand.layout_key() not in avoid:
                return cand
        rejections += 1
        if not feasible_at_all and rejections > 0:
            break
    raise InfeasibleRange(
        f"no {rows}x{cols} maze with path length in [{lo}, {hi}] after {rejections} rejections"
    )


def classify_splits(rows: int, cols: int, n_actions: int, icon_split: str) -> tuple[str, ...]:
    """Evaluation-tier tags implied by grid size and path length."""
    big = max(rows, cols) >= 7
    long = n_actions >= 13
    tags = ["both_ood" if big and long else "spatial_ood" if big else "temporal_ood" if long else "iid"]
    if icon_split == "unseen":
        tags.append("unseen_icon")
    return tuple(tags)


def sample_instance(
    rows: int,
    cols: int,
    path_len_range: tuple[int, int],
    icon_pool: str,
    seed: int,
    *,
    instance_id: str | None = None,
    group: str = "",
    avoid: Optional[set] = None,
    total_frames: int = 81,
    lead_hold: int = 4,
):
    """Sample a complete maze instance manifest (layout, icon, solution, schedule)."""
    if icon_pool not in ("seen", "unseen"):
        raise ValueError(f"icon_pool must be 'seen' or 'unseen', not {icon_pool!r}")
    layout = sample_layout(rows, cols, path_len_range, seed, avoid)
    rng = random.Random(seed ^ 0x5EED)
    pool = icons.SEEN_IDS if icon_pool == "seen" else icons.UNSEEN_IDS
    maze = replace(layout, icon_id=rng.choice(pool), seed=seed)
    actions = tuple(solve_shortest_path(maze))
    schedule = FrameSchedule.fixed_total(len(actions), total_frames, lead_hold)
    return InstanceManifest(
        task="maze",
        instance_id=instance_id or f"maze-{rows}x{cols}-{seed}",
        seed=seed,
        group=group,
        splits=classify_splits(rows, cols, len(actions), icon_pool),
        prompt_text=prompts.MAZE_VIDEO,
        canvas=MAZE_CANVAS,
        maze=maze,
        actions=actions,
        schedule=schedule,
    )
