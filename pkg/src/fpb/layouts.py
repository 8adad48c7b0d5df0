"""Tangram target layouts: file schema, validation, SVG conversion and synthesis.

Layout coordinates are in tangram units (the side of the square the seven
pieces tile is 1) with y pointing down.  The layout file schema is::

    {
      "schema_version": 1,
      "name": "square",
      "pieces": [
        {"piece_id": 0, "kind": "big_tri", "vertices": [["0", "0"], ["1", "0"], ["0.5", "0.5"]]},
        ...
      ]
    }

``pieces`` holds exactly seven entries, one per ``piece_id`` 0-6 with kinds
``big_tri, big_tri, medium_tri, small_tri, small_tri, square, parallelogram``.
Vertex coordinates may be numbers or decimal strings.
"""

from __future__ import annotations

import json
import math
import random
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidLayout, ParseError
from .geom import _signed_area, internal_angles, polygon_area

LAYOUT_SCHEMA_VERSION = 1

PIECE_KINDS = ("big_tri", "big_tri", "medium_tri", "small_tri", "small_tri", "square", "parallelogram")
KIND_AREA = {"big_tri": 1 / 4, "medium_tri": 1 / 8, "small_tri": 1 / 16, "square": 1 / 8, "parallelogram": 1 / 8}
KIND_VERTICES = {"big_tri": 3, "medium_tri": 3, "small_tri": 3, "square": 4, "parallelogram": 4}

# The classic dissection of the unit square; every vertex lies on the quarter grid.
SQUARE_ASSEMBLY = (
    ((0.0, 0.0), (1.0, 0.0), (0.5, 0.5)),
    ((0.0, 0.0), (0.5, 0.5), (0.0, 1.0)),
    ((1.0, 1.0), (0.5, 1.0), (1.0, 0.5)),
    ((1.0, 0.0), (1.0, 0.5), (0.75, 0.25)),
    ((0.5, 0.5), (0.75, 0.75), (0.25, 0.75)),
    ((0.75, 0.25), (1.0, 0.5), (0.75, 0.75), (0.5, 0.5)),
    ((0.0, 1.0), (0.25, 0.75), (0.75, 0.75), (0.5, 1.0)),
)


@dataclass(frozen=True)
class Layout:
    name: str
    pieces: tuple  # seven (n, 2) float arrays in piece_id order

    def polygon(self, piece_id: int) -> np.ndarray:
        return np.asarray(self.pieces[piece_id], dtype=float)

    def bbox(self) -> tuple[float, float, float, float]:
        pts = np.vstack([np.asarray(p, dtype=float) for p in self.pieces])
        return (pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max())


def canonical_piece(piece_id: int) -> np.ndarray:
    return np.array(SQUARE_ASSEMBLY[piece_id], dtype=float)


def _ccw(pts: np.ndarray) -> np.ndarray:
    return pts if _signed_area(pts) > 0 else pts[::-1]


def parallelogram_chirality(poly: np.ndarray) -> int:
    """+1 or -1; mirror images of a parallelogram have opposite chirality."""
    pts = _ccw(np.asarray(poly, dtype=float))
    sides = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    ang = internal_angles(pts)
    # vertex i sits between side i-1 (incoming) and side i (outgoing)
    i = int(np.argmax(sides))
    acute_after_long = ang[(i + 1) % 4] < 90.0
    return 1 if acute_after_long else -1


CANONICAL_CHIRALITY = parallelogram_chirality(canonical_piece(6))


def _convex_overlap(a: np.ndarray, b: np.ndarray, eps: float = 1e-9) -> bool:
    """Separating-axis test for convex polygons; touching does not count."""
    for poly in (a, b):
        edges = np.roll(poly, -1, axis=0) - poly
        normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
        for n in normals:
            pa, pb = a @ n, b @ n
            if pa.max() <= pb.min() + eps or pb.max() <= pa.min() + eps:
                return False
    return True


def validate_layout(layout: Layout, *, check_overlap: bool = True) -> None:
    if len(layout.pieces) != 7:
        raise InvalidLayout(f"layout {layout.name!r} has {len(layout.pieces)} pieces, expected 7")
    for pid, (kind, poly) in enumerate(zip(PIECE_KINDS, layout.pieces)):
        pts = np.asarray(poly, dtype=float)
        if len(pts) != KIND_VERTICES[kind]:
            raise InvalidLayout(f"piece {pid} ({kind}) has {len(pts)} vertices")
        area = polygon_area(pts)
        if abs(area - KIND_AREA[kind]) > 0.02 * KIND_AREA[kind]:
            raise InvalidLayout(f"piece {pid} ({kind}) has area {area:.4f}, expected {KIND_AREA[kind]:.4f}")
        if kind == "parallelogram" and parallelogram_chirality(pts) != CANONICAL_CHIRALITY:
            raise InvalidLayout(f"layout {layout.name!r} needs a mirrored parallelogram")
    if check_overlap:
        polys = [_ccw(np.asarray(p, dtype=float)) for p in layout.pieces]
        for i in range(7):
            for j in range(i + 1, 7):
                if _convex_overlap(polys[i], polys[j]):
                    raise InvalidLayout(f"pieces {i} and {j} overlap in layout {layout.name!r}")


def _fmt(x: float) -> str:
    s = f"{x:.6g}"
    return "0" if s == "-0" else s


def layout_to_dict(layout: Layout) -> dict:
    return {
        "schema_version": LAYOUT_SCHEMA_VERSION,
        "name": layout.name,
        "pieces": [
            {"piece_id": i, "kind": PIECE_KINDS[i], "vertices": [[_fmt(x), _fmt(y)] for x, y in np.asarray(p)]}
            for i, p in enumerate(layout.pieces)
        ],
    }


def layout_from_dict(data: dict, name: Optional[str] = None) -> Layout:
    try:
        if data.get("schema_version", LAYOUT_SCHEMA_VERSION) != LAYOUT_SCHEMA_VERSION:
            raise ParseError(f"unsupported layout schema_version {data.get('schema_version')}")
        entries = data["pieces"]
        if not isinstance(entries, list) or len(entries) != 7:
            raise ParseError("layout needs a list of exactly 7 pieces")
        by_id = {}
        for e in entries:
            pid = int(e["piece_id"])
            if pid in by_id or not 0 <= pid < 7:
                raise ParseError(f"bad or duplicate piece_id {pid}")
            if e.get("kind", PIECE_KINDS[pid]) != PIECE_KINDS[pid]:
                raise ParseError(f"piece {pid} must be {PIECE_KINDS[pid]}, got {e.get('kind')}")
            verts = np.array([[float(x), float(y)] for x, y in e["vertices"]], dtype=float)
            if not np.all(np.isfinite(verts)):
                raise ParseError(f"piece {pid} has non-finite coordinates")
            by_id[pid] = verts
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed layout: {exc}") from exc
    return Layout(name or str(data.get("name", "layout")), tuple(by_id[i] for i in range(7)))


def layout_from_silhouette_file(path) -> Layout:
    """Parse and validate one layout file (pieces must be pairwise disjoint)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    layout = layout_from_dict(data, name=data.get("name") or path.stem)
    validate_layout(layout)
    return layout


def write_layout(layout: Layout, path) -> None:
    Path(path).write_text(json.dumps(layout_to_dict(layout), indent=1, sort_keys=True) + "\n")


def load_layout_dir(directory) -> list[Layout]:
    paths = sorted(Path(directory).glob("*.json"))
    return [layout_from_silhouette_file(p) for p in paths]


def bundled_layouts() -> list[Layout]:
    root = resources.files("fpb") / "data" / "layouts"
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            data = json.loads(entry.read_text())
            layout = layout_from_dict(data, name=data.get("name") or entry.name[:-5])
            validate_layout(layout)
            out.append(layout)
    return out


def square_layout() -> Layout:
    return Layout("square", tuple(canonical_piece(i) for i in range(7)))


# --- synthetic layouts -------------------------------------------------------


def _rot90(pts: np.ndarray, k: int) -> np.ndarray:
    out = pts.copy()
    for _ in range(k % 4):
        out = np.stack([-out[:, 1], out[:, 0]], axis=1)
    return out


def random_layout(seed: int, name: Optional[str] = None, max_extent: float = 2.5) -> Layout:
    """Edge-glued arrangement of the seven pieces.

    Pieces keep their square-assembly shapes turned by multiples of 90
    degrees, and every placement glues one piece edge onto an anti-parallel
    edge of an already placed piece, so all coordinates stay on the quarter
    grid and shared edges are exact.
    """
    rng = random.Random(seed)
    for _ in range(200):
        order = list(range(7))
        rng.shuffle(order)
        placed: dict[int, np.ndarray] = {}
        first = order[0]
        placed[first] = _ccw(_rot90(canonical_piece(first), rng.randrange(4)))
        ok = True
        for pid in order[1:]:
            cands = []
            for k in range(4):
                poly = _ccw(_rot90(canonical_piece(pid), k))
                for other in placed.values():
                    for i in range(len(poly)):
                        a, b = poly[i], poly[(i + 1) % len(poly)]
                        for j in range(len(other)):
                            c, d = other[j], other[(j + 1) % len(other)]
                            u, v = b - a, d - c
                            if abs(u[0] * v[1] - u[1] * v[0]) > 1e-12 or np.dot(u, v) >= 0:
                                continue
                            cands.append(poly + (d - a))
                            cands.append(poly + (c - b))
            rng.shuffle(cands)
            for cand in cands:
                pts = np.vstack([cand] + list(placed.values()))
                ext = pts.max(axis=0) - pts.min(axis=0)
                if ext.max() > max_extent + 1e-9:
                    continue
                if any(_convex_overlap(cand, o) for o in placed.values()):
                    continue
                placed[pid] = cand
                break
            else:
                ok = False
                break
        if ok:
            pts = np.vstack(list(placed.values()))
            shift = pts.min(axis=0)
            pieces = tuple(placed[i] - shift for i in range(7))
            layout = Layout(name or f"synthetic-{seed}", pieces)
            validate_layout(layout)
            return layout
    raise InvalidLayout(f"could not synthesize a layout for seed {seed}")


def layout_signature(layout: Layout) -> tuple:
    return tuple(tuple(sorted(map(tuple, np.round(np.asarray(p), 6).tolist()))) for p in layout.pieces)


def synthesize_layouts(count: int, seed: int, prefix: str = "synthetic") -> list[Layout]:
    """``count`` distinct synthetic layouts."""
    out, seen = [], set()
    k = 0
    while len(out) < count:
        layout = random_layout(seed * 1_000_003 + k, name=f"{prefix}-{len(out):04d}")
        k += 1
        sig = layout_signature(layout)
        if sig in seen:
            continue
        seen.add(sig)
        out.append(layout)
    return out


# --- SVG conversion ----------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _parse_transform(text: str) -> np.ndarray:
    m = np.eye(3)
    for op, args in re.findall(r"(\w+)\s*\(([^)]*)\)", text or ""):
        v = [float(x) for x in re.findall(_NUM, args)]
        if op == "translate":
            t = np.array([[1, 0, v[0]], [0, 1, v[1] if len(v) > 1 else 0.0], [0, 0, 1]])
        elif op == "scale":
            sx = v[0]
            sy = v[1] if len(v) > 1 else sx
            t = np.diag([sx, sy, 1.0])
        elif op == "rotate":
            a = math.radians(v[0])
            c, s = math.cos(a), math.sin(a)
            t = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
            if len(v) == 3:
                t = (
                    np.array([[1, 0, v[1]], [0, 1, v[2]], [0, 0, 1]])
                    @ t
                    @ np.array([[1, 0, -v[1]], [0, 1, -v[2]], [0, 0, 1]])
                )
        elif op == "matrix":
            a, b, c, d, e, f = v
            t = np.array([[a, c, e], [b, d, f], [0, 0, 1]])
        else:
            raise ParseError(f"unsupported SVG transform {op!r}")
        m = m @ t
    return m


def _classify_kind(pts: np.ndarray, area: float) -> str:
    if len(pts) == 3:
        ratios = {"big_tri": 1 / 4, "medium_tri": 1 / 8, "small_tri": 1 / 16}
        return min(ratios, key=lambda k: abs(area - ratios[k]))
    if len(pts) == 4:
        ang = internal_angles(pts)
        return "square" if np.all(np.abs(ang - 90.0) < 5.0) else "parallelogram"
    raise ParseError(f"polygon with {len(pts)} vertices is not a tangram piece")


def convert_svg_layout(path, name: Optional[str] = None, snap: float = 1e-3) -> Layout:
    """Convert an SVG drawing of seven ``<polygon>`` pieces into a layout.

    Nested ``transform`` attributes are applied, the drawing is rescaled so
    the pieces' total area is 1, and vertices closer than ``snap`` units are
    merged so shared corners coincide exactly.  Layouts whose parallelogram
    is mirrored raise InvalidLayout.
    """
    path = Path(path)
    try:
        root = ET.parse(path).getroot()
    except (OSError, ET.ParseError) as exc:
        raise ParseError(f"{path}: {exc}") from exc

    polys: list[np.ndarray] = []

    def walk(node, m):
        m = m @ _parse_transform(node.attrib.get("transform", ""))
        if node.tag.split("}")[-1] == "polygon":
            nums = [float(x) for x in re.findall(_NUM, node.attrib.get("points", ""))]
            if len(nums) < 6 or len(nums) % 2:
                raise ParseError(f"{path}: malformed polygon points")
            pts = np.array(nums).reshape(-1, 2)
            h = np.hstack([pts, np.ones((len(pts), 1))]) @ m.T
            polys.append(h[:, :2])
        for child in node:
            walk(child, m)

    walk(root, np.eye(3))
    if len(polys) != 7:
        raise ParseError(f"{path}: expected 7 polygons, found {len(polys)}")
    polys = [p[~np.all(np.isclose(p, np.roll(p, 1, axis=0)), axis=1)] for p in polys]
    total = sum(polygon_area(p) for p in polys)
    scale = 1.0 / math.sqrt(total)
    polys = [p * scale for p in polys]
    shift = np.vstack(polys).min(axis=0)
    polys = [p - shift for p in polys]

    # merge near-coincident vertices across pieces
    flat = np.vstack(polys)
    reps = flat.copy()
    for i in range(len(flat)):
        d = np.hypot(*(flat[:i] - flat[i]).T) if i else np.zeros(0)
        close = np.flatnonzero(d < snap)
        if len(close):
            reps[i] = reps[close[0]]
    reps = np.round(reps, 6)
    k = 0
    snapped = []
    for p in polys:
        snapped.append(reps[k : k + len(p)])
        k += len(p)

    kinds = [_classify_kind(p, polygon_area(p)) for p in snapped]
    slots: dict[str, list[int]] = {}
    for i, kind in enumerate(PIECE_KINDS):
        slots.setdefault(kind, []).append(i)
    pieces: list[Optional[np.ndarray]] = [None] * 7
    for kind, poly in zip(kinds, snapped):
        if not slots.get(kind):
            raise ParseError(f"{path}: unexpected extra {kind}")
        pieces[slots[kind].pop(0)] = poly
    layout = Layout(name or path.stem, tuple(pieces))
    validate_layout(layout, check_overlap=False)
    return layout


def write_layouts(layouts: Iterable[Layout], directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for layout in layouts:
        p = directory / f"{layout.name}.json"
        write_layout(layout, p)
        paths.append(p)
    return paths
