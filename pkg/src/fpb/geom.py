"""2-D geometry and raster primitives.

Polygons are ``(n, 2)`` float arrays of ``(x, y)`` pixel coordinates with an
implicit closing edge.  Masks are boolean ``(height, width)`` arrays.  The
y axis points down, as in image space.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from .errors import DegenerateGeometry, EmptyComponent, ShapeMismatch

Point2 = Tuple[float, float]
PolygonLike = Union[np.ndarray, Sequence[Sequence[float]]]

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


class ShapeClass(str, Enum):
    TRIANGLE = "triangle"
    SQUARE = "square"
    PARALLELOGRAM = "parallelogram"
    UNKNOWN = "unknown"


class ColorRGB(NamedTuple):
    r: int
    g: int
    b: int

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.g, self.b], dtype=np.int16)


class Component(NamedTuple):
    mask: np.ndarray
    area: int
    centroid: Point2


def as_polygon(poly: PolygonLike) -> np.ndarray:
    pts = np.asarray(poly, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateGeometry(f"expected (n, 2) vertex array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DegenerateGeometry("non-finite vertex coordinate")
    return pts


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_area(poly: PolygonLike) -> float:
    """Absolute shoelace area."""
    pts = as_polygon(poly)
    if len(np.unique(pts, axis=0)) < 3:
        raise DegenerateGeometry("polygon needs at least 3 distinct vertices")
    area = abs(_signed_area(pts))
    if area <= 0.0:
        raise DegenerateGeometry("polygon has zero area")
    return area


def polygon_centroid(poly: PolygonLike) -> np.ndarray:
    pts = as_polygon(poly)
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if a == 0:
        raise DegenerateGeometry("polygon has zero area")
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def perimeter(poly: PolygonLike) -> float:
    pts = as_polygon(poly)
    return float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())


def rasterize(poly: PolygonLike, canvas_w: int, canvas_h: int) -> np.ndarray:
    """Scanline fill with the pixel-center rule.

    Pixel ``(row, col)`` is set when its center ``(col + 0.5, row + 0.5)``
    lies inside the polygon.  Spans are half-open on the right and edges are
    half-open at their lower end, so two polygons sharing an edge never both
    claim a pixel.
    """
    pts = as_polygon(poly)
    mask = np.zeros((canvas_h, canvas_w), dtype=bool)
    if len(pts) < 3:
        return mask
    ymin, ymax = pts[:, 1].min(), pts[:, 1].max()
    r0 = max(0, math.ceil(ymin - 0.5))
    r1 = min(canvas_h, math.ceil(ymax - 0.5))
    if r0 >= r1 or canvas_w <= 0:
        return mask

    a = pts
    b = np.roll(pts, -1, axis=0)
    # Order each edge by (y, x) so a shared edge yields bit-identical crossings
    # regardless of which polygon it belongs to.
    swap = (a[:, 1] > b[:, 1]) | ((a[:, 1] == b[:, 1]) & (a[:, 0] > b[:, 0]))
    p = np.where(swap[:, None], b, a)
    q = np.where(swap[:, None], a, b)
    keep = p[:, 1] != q[:, 1]
    p, q = p[keep], q[keep]
    if len(p) == 0:
        return mask

    yc = np.arange(r0, r1, dtype=float) + 0.5
    active = (yc[:, None] >= p[None, :, 1]) & (yc[:, None] < q[None, :, 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        xs = p[None, :, 0] + (yc[:, None] - p[None, :, 1]) * (
            (q[None, :, 0] - p[None, :, 0]) / (q[None, :, 1] - p[None, :, 1])
        )
    xs = np.where(active, xs, np.inf)
    xs.sort(axis=1)
    n_cols = int(active.sum(axis=1).max())
    n_cols -= n_cols % 2
    if n_cols == 0:
        return mask
    xs = xs[:, :n_cols]
    starts, ends = xs[:, 0::2], xs[:, 1::2]
    valid = np.isfinite(starts) & np.isfinite(ends)
    i0 = np.clip(np.ceil(np.where(valid, starts, 0.0) - 0.5), 0, canvas_w).astype(np.int64)
    i1 = np.clip(np.ceil(np.where(valid, ends, 0.0) - 0.5), 0, canvas_w).astype(np.int64)
    valid &= i1 > i0
    rows = np.broadcast_to(np.arange(r1 - r0)[:, None], i0.shape)
    diff = np.zeros((r1 - r0, canvas_w + 1), dtype=np.int32)
    np.add.at(diff, (rows[valid], i0[valid]), 1)
    np.add.at(diff, (rows[valid], i1[valid]), -1)
    mask[r0:r1] = np.cumsum(diff[:, :canvas_w], axis=1) > 0
    return mask


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union; two empty masks count as a perfect match."""
    if a.shape != b.shape:
        raise ShapeMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def label_components(mask: np.ndarray):
    """4-connected labelling.

    Returns ``(labels, order, areas, centroids)`` where ``order`` lists label
    ids sorted by area (descending, ties by first raster occurrence) and
    ``areas``/``centroids`` are aligned with ``order``.
    """
    labels, n = ndimage.label(mask, structure=FOUR_CONNECTED)
    if n == 0:
        return labels, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, 2))
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs]
    areas = np.bincount(lab, minlength=n + 1)[1:]
    sx = np.bincount(lab, weights=xs + 0.5, minlength=n + 1)[1:]
    sy = np.bincount(lab, weights=ys + 0.5, minlength=n + 1)[1:]
    ids = np.arange(1, n + 1)
    # ndimage numbers labels in raster order, so a stable sort breaks ties by first occurrence
    idx = np.argsort(-areas, kind="stable")
    centroids = np.stack([sx / areas, sy / areas], axis=1)
    return labels, ids[idx], areas[idx], centroids[idx]


def connected_components(mask: np.ndarray) -> list[Component]:
    labels, order, areas, centroids = label_components(mask)
    return [
        Component(labels == lab, int(area), (float(c[0]), float(c[1])))
        for lab, area, c in zip(order, areas, centroids)
    ]


def largest_component(mask: np.ndarray) -> np.ndarray:
    labels, order, _, _ = label_components(mask)
    if len(order) == 0:
        return np.zeros_like(mask, dtype=bool)
    return labels == order[0]


# heading -> (dx, dy) in image coordinates
_RIGHT_TURN = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}


def extract_contour(component: np.ndarray) -> np.ndarray:
    """Outer boundary of a pixel region, traced along pixel edges.

    The returned polygon runs through pixel corners, so its shoelace area
    equals the pixel count of the hole-filled component.  Only corner
    vertices are kept.
    """
    comp = np.asarray(component, dtype=bool)
    if not comp.any():
        raise EmptyComponent("cannot trace the contour of an empty component")
    labels, n = ndimage.label(comp, structure=FOUR_CONNECTED)
    if n > 1:
        # stray diagonal-only pixels form their own components; trace the body
        comp = labels == (np.argmax(np.bincount(labels.ravel())[1:]) + 1)
    rows = np.flatnonzero(comp.any(axis=1))
    cols = np.flatnonzero(comp.any(axis=0))
    r_off, c_off = rows[0], cols[0]
    crop = comp[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    crop = ndimage.binary_fill_holes(crop, structure=FOUR_CONNECTED)
    padded = np.pad(crop, 1)
    core = padded[1:-1, 1:-1]
    r, c = np.nonzero(core)

    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(sel, x0, y0, x1, y1):
        for a, b, cc, d in zip(x0[sel], y0[sel], x1[sel], y1[sel]):
            edges.setdefault((int(a), int(b)), []).append((int(cc), int(d)))

    # Interior on the right-hand side of travel (clockwise on screen).
    top = ~padded[r, c + 1]
    bottom = ~padded[r + 2, c + 1]
    left = ~padded[r + 1, c]
    right = ~padded[r + 1, c + 2]
    add(top, c, r, c + 1, r)
    add(right, c + 1, r, c + 1, r + 1)
    add(bottom, c + 1, r + 1, c, r + 1)
    add(left, c, r + 1, c, r)

    start = min(edges, key=lambda v: (v[1], v[0]))
    path = [start]
    heading = None
    cur = start
    n_edges = sum(len(v) for v in edges.values())
    for _ in range(n_edges):
        outs = edges.get(cur)
        if not outs:
            break
        if len(outs) == 1 or heading is None:
            nxt = outs.pop(0)
        else:
            want = _RIGHT_TURN[heading]
            pick = next(
                (i for i, o in enumerate(outs) if (o[0] - cur[0], o[1] - cur[1]) == want), 0
            )
            nxt = outs.pop(pick)
        heading = (nxt[0] - cur[0], nxt[1] - cur[1])
        cur = nxt
        if cur == start:
            break
        path.append(cur)

    pts = np.array(path, dtype=float)
    prev = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    turn = (pts[:, 0] - prev[:, 0]) * (nxt[:, 1] - pts[:, 1]) - (pts[:, 1] - prev[:, 1]) * (
        nxt[:, 0] - pts[:, 0]
    )
    pts = pts[turn != 0]
    pts[:, 0] += c_off
    pts[:, 1] += r_off
    return pts


def _point_line_dist(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    norm = math.hypot(d[0], d[1])
    if norm == 0:
        return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
    return np.abs(d[0] * (a[1] - pts[:, 1]) - d[1] * (a[0] - pts[:, 0])) / norm


def _rdp_indices(pts: np.ndarray, lo: int, hi: int, tol: float, keep: set[int]) -> None:
    stack = [(lo, hi)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        d = _point_line_dist(pts[i + 1 : j], pts[i], pts[j])
        k = int(np.argmax(d))
        if d[k] > tol:
            m = i + 1 + k
            keep.add(m)
            stack.append((i, m))
            stack.append((m, j))


def _closed_rdp(pts: np.ndarray, tol: float) -> list[int]:
    n = len(pts)
    centroid = pts.mean(axis=0)
    a = int(np.argmax(np.hypot(*(pts - centroid).T)))
    b = int(np.argmax(np.hypot(*(pts - pts[a]).T)))
    rolled = np.roll(pts, -a, axis=0)
    b_r = (b - a) % n
    ring = np.vstack([rolled, rolled[:1]])
    keep = {0, b_r}
    _rdp_indices(ring, 0, b_r, tol, keep)
    _rdp_indices(ring, b_r, n, tol, keep)
    keep.discard(n)
    idx = sorted(keep)
    # anchors were picked heuristically; drop any that sit on a straight run
    changed = True
    while changed and len(idx) > 3:
        changed = False
        for t in range(len(idx)):
            p0 = rolled[idx[t - 1]]
            p1 = rolled[idx[t]]
            p2 = rolled[idx[(t + 1) % len(idx)]]
            if _point_line_dist(p1[None, :], p0, p2)[0] <= tol:
                del idx[t]
                changed = True
                break
    return sorted((i + a) % n for i in idx)


def simplify_polygon(
    poly: PolygonLike,
    eps_fraction: float = 0.02,
    *,
    tolerance: float | None = None,
    max_vertices: int = 8,
    retries: int = 4,
) -> np.ndarray:
    """Closed-curve endpoint-fit (Douglas-Peucker) simplification.

    The tolerance is ``eps_fraction * perimeter`` unless an absolute
    ``tolerance`` is given.  While the result has more than ``max_vertices``
    vertices the tolerance is doubled, at most ``retries`` times.
    """
    pts = as_polygon(poly)
    if len(pts) < 3:
        raise DegenerateGeometry("polygon needs at least 3 vertices")
    dup = np.all(pts == np.roll(pts, 1, axis=0), axis=1)
    pts = pts[~dup] if not dup.all() else pts[:1]
    if len(pts) < 3:
        raise DegenerateGeometry("polygon collapses below 3 distinct vertices")
    if tolerance is None:
        if eps_fraction <= 0:
            raise ValueError("eps_fraction must be positive")
        tolerance = eps_fraction * perimeter(pts)
    idx = _closed_rdp(pts, tolerance)
    for _ in range(retries):
        if len(idx) <= max_vertices:
            break
        tolerance *= 2
        idx = _closed_rdp(pts, tolerance)
    if len(idx) < 3:
        raise DegenerateGeometry("simplification collapsed the polygon")
    return pts[idx]


def internal_angles(poly: PolygonLike) -> np.ndarray:
    """Interior angles in degrees (reflex vertices report > 180)."""
    pts = as_polygon(poly)
    orient = np.sign(_signed_area(pts)) or 1.0
    prev = np.roll(pts, 1, axis=0) - pts
    nxt = np.roll(pts, -1, axis=0) - pts
    cos = (prev * nxt).sum(axis=1) / (np.linalg.norm(prev, axis=1) * np.linalg.norm(nxt, axis=1))
    ang = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    # cross of incoming and outgoing edge tells convex vs reflex
    inc = -prev
    cross = inc[:, 0] * nxt[:, 1] - inc[:, 1] * nxt[:, 0]
    return np.where(np.sign(cross) * orient < 0, 360.0 - ang, ang)


def min_area_rect_aspect(poly: PolygonLike) -> float:
    """Short/long side ratio of the minimum-area bounding rectangle (<= 1)."""
    pts = as_polygon(poly)
    best = None
    for i in range(len(pts)):
        e = pts[(i + 1) % len(pts)] - pts[i]
        n = math.hypot(e[0], e[1])
        if n == 0:
            continue
        u = e / n
        v = np.array([-u[1], u[0]])
        pu, pv = pts @ u, pts @ v
        w, h = pu.max() - pu.min(), pv.max() - pv.min()
        if best is None or w * h < best[0]:
            best = (w * h, w, h)
    if best is None or max(best[1], best[2]) == 0:
        return 0.0
    return min(best[1], best[2]) / max(best[1], best[2])


def classify_shape(
    poly: PolygonLike,
    *,
    square_angle: tuple[float, float] = (85.0, 95.0),
    square_aspect: tuple[float, float] = (0.9, 1.1),
    side_tol: float = 0.15,
    angle_window: float = 15.0,
) -> ShapeClass:
    pts = as_polygon(poly)
    n = len(pts)
    if n == 3:
        return ShapeClass.TRIANGLE
    if n != 4:
        return ShapeClass.UNKNOWN
    ang = internal_angles(pts)
    right_angled = bool(np.all((ang >= square_angle[0]) & (ang <= square_angle[1])))
    if right_angled:
        aspect = min_area_rect_aspect(pts)
        if square_aspect[0] <= aspect <= square_aspect[1]:
            return ShapeClass.SQUARE
        # a non-square rectangle is not treated as a parallelogram
        return ShapeClass.UNKNOWN
    sides = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    for i in (0, 1):
        a, b = sides[i], sides[i + 2]
        if abs(a - b) > side_tol * max(a, b):
            return ShapeClass.UNKNOWN
        if abs(ang[i] - ang[i + 2]) > angle_window:
            return ShapeClass.UNKNOWN
    return ShapeClass.PARALLELOGRAM


def rotation_matrix(deg: float) -> np.ndarray:
    t = math.radians(deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


def transform_polygon(
    poly: PolygonLike,
    rotate_deg: float = 0.0,
    about: Point2 = (0.0, 0.0),
    translate: Point2 = (0.0, 0.0),
) -> np.ndarray:
    """Rotate about ``about`` then translate.  Positive angles turn +x toward +y."""
    pts = as_polygon(poly)
    about_a = np.asarray(about, dtype=float)
    out = (pts - about_a) @ rotation_matrix(rotate_deg).T + about_a
    return out + np.asarray(translate, dtype=float)


def dilate(mask: np.ndarray, px: int) -> np.ndarray:
    if px <= 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=np.ones((3, 3), bool), iterations=px)


def fill_holes(mask: np.ndarray) -> np.ndarray:
    return ndimage.binary_fill_holes(mask, structure=FOUR_CONNECTED)
