"""Tangram video evaluation: palette discovery, color segmentation and goal-completion metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CorrelationUndefined, PaletteError, SilhouetteError, TaskMismatch
from .geom import (
    ShapeClass,
    classify_shape,
    dilate,
    extract_contour,
    fill_holes,
    label_components,
    mask_iou,
    simplify_polygon,
)
from .records import EvalReport, InstanceManifest
from .tangram_gen import BOARD_SIZE, board_origin, canvas_for, synthesize_assembly_video

TAG_CHROMATIC = "chromatic distortion"
TAG_STRUCTURAL = "structural distortion"
TAG_CENTROID = "centroid displacement"
TAG_ANGULAR = "angular deviation"
TAG_OVERLAP = "overlap"


@dataclass(frozen=True)
class TangramEvalParams:
    delta_col: int = 60
    area_window: tuple[float, float] = (0.6, 1.4)
    angle_window: float = 15.0
    k_samples: int = 16
    silhouette_max: int = 40
    containment: float = 0.98
    dilation_px: int = 2
    overlap_fraction: float = 0.01


@dataclass
class PieceProps:
    color: tuple[int, int, int]
    ref_area: float
    ref_shape: ShapeClass
    source_region: str


@dataclass
class PaletteProps:
    variant: str
    pieces: list[PieceProps]

    @property
    def colors(self) -> np.ndarray:
        return np.array([p.color for p in self.pieces], dtype=np.int16)


@dataclass
class PieceVerdict:
    piece_id: int
    found: bool
    area_ratio: float
    shape_ok: bool
    inside_ok: bool
    u: int
    failure_tags: list[str] = field(default_factory=list)
    shape: str = ShapeClass.UNKNOWN.value
    debris: int = 0


def _board_mask(variant: str) -> np.ndarray:
    w, h = canvas_for(variant)
    m = np.zeros((h, w), dtype=bool)
    x0, y0 = board_origin(variant)
    m[y0 : y0 + BOARD_SIZE, x0 : x0 + BOARD_SIZE] = True
    return m


def _check_frame(frame: np.ndarray, variant: str) -> np.ndarray:
    frame = np.asarray(frame)
    w, h = canvas_for(variant)
    if frame.shape != (h, w, 3):
        raise TaskMismatch(f"frame shape {frame.shape} does not match the {variant} canvas {(h, w, 3)}")
    return frame


def assign_colors(frame: np.ndarray, colors: np.ndarray, delta_col: int) -> np.ndarray:
    """Index of the strictly nearest palette color within ``delta_col``; -1 elsewhere."""
    f = np.asarray(frame, dtype=np.uint8)
    h, w = f.shape[:2]
    # rendered frames hold few distinct colors; classify each one once
    keys = (f[..., 0].astype(np.int32) << 16) | (f[..., 1].astype(np.int32) << 8) | f[..., 2]
    uniq, inverse = np.unique(keys.ravel(), return_inverse=True)
    u = np.stack([(uniq >> 16) & 255, (uniq >> 8) & 255, uniq & 255], axis=1).astype(np.int16)
    d = np.abs(u[:, None, :] - np.asarray(colors, dtype=np.int16)[None, :, :]).max(axis=2)
    best = d.argmin(axis=1)
    dmin = d[np.arange(len(u)), best]
    ties = (d == dmin[:, None]).sum(axis=1) > 1
    lut = np.where((dmin <= delta_col) & ~ties, best, -1).astype(np.int8)
    return lut[inverse].reshape(h, w)


def _largest(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Largest 4-connected component and the pixel count left over."""
    total = int(mask.sum())
    if total == 0:
        return mask.copy(), 0
    labels, order, areas, _ = label_components(mask)
    body = labels == order[0]
    return body, total - int(areas[0])


def shape_of(mask: np.ndarray, angle_window: float = 15.0) -> ShapeClass:
    if not mask.any():
        return ShapeClass.UNKNOWN
    try:
        return classify_shape(simplify_polygon(extract_contour(mask)), angle_window=angle_window)
    except Exception:
        return ShapeClass.UNKNOWN


def extract_palette_props(
    first_frame: np.ndarray,
    manifest: Optional[InstanceManifest] = None,
    params: TangramEvalParams = TangramEvalParams(),
    variant: Optional[str] = None,
) -> PaletteProps:
    """Per-piece reference color, area and shape.

    FadeIn pieces are invisible at the start, so their properties come from
    the manifest layout.  Sidebar variants measure the pieces in the left
    half of the first frame.  Without a manifest the sidebar colors are
    discovered from the blobs themselves and areas are raw pixel counts.
    """
    scene = manifest.scene if manifest is not None else None
    variant = scene.variant if scene is not None else variant
    if variant is None:
        raise ValueError("need a manifest or an explicit variant")
    frame = _check_frame(first_frame, variant)
    if variant == "FadeIn":
        if scene is None:
            raise PaletteError("FadeIn palette properties need the manifest layout")
        pieces = [PieceProps(tuple(p.color), float(p.ref_area), p.ref_shape, "golden_layout") for p in scene.pieces]
        return PaletteProps(variant, pieces)

    side = frame[:, :BOARD_SIZE]
    if scene is not None:
        colors = np.array([p.color for p in scene.pieces], dtype=np.int16)
        scale = scene.sidebar_scale
    else:
        colors = _discover_colors(side, params.delta_col)
        scale = 1.0
    assigned = assign_colors(side, colors, params.delta_col)
    pieces = []
    for i, c in enumerate(colors):
        body, _ = _largest(assigned == i)
        area = int(body.sum())
        if area == 0:
            raise PaletteError(f"color {tuple(int(v) for v in c)} not found in the sidebar")
        s0 = shape_of(body, params.angle_window)
        if s0 is ShapeClass.UNKNOWN:
            raise PaletteError(f"sidebar piece with color {tuple(int(v) for v in c)} has no recognizable shape")
        pieces.append(PieceProps(tuple(int(v) for v in c), area / scale**2, s0, "sidebar"))
    return PaletteProps(variant, pieces)


def _discover_colors(side: np.ndarray, delta_col: int) -> np.ndarray:
    f = np.asarray(side, dtype=np.int16)
    ink = (255 - f).max(axis=2) > delta_col
    labels, order, areas, _ = label_components(ink)
    found: list[np.ndarray] = []
    for lab, area in zip(order, areas):
        if area < 16:
            continue
        c = np.median(f[labels == lab], axis=0)
        if all(np.abs(c - g).max() > delta_col for g in found):
            found.append(c)
    if len(found) < 7:
        raise PaletteError(f"only {len(found)} distinct piece colors in the sidebar")
    return np.rint(np.array(found[:7])).astype(np.int16)


def extract_target_silhouette(
    first_frame: np.ndarray,
    manifest: Optional[InstanceManifest] = None,
    params: TangramEvalParams = TangramEvalParams(),
    variant: Optional[str] = None,
) -> np.ndarray:
    variant = manifest.scene.variant if manifest is not None else variant
    if variant is None:
        raise ValueError("need a manifest or an explicit variant")
    frame = _check_frame(first_frame, variant)
    dark = frame.max(axis=2) <= params.silhouette_max
    sil = dark & _board_mask(variant)
    if not sil.any():
        raise SilhouetteError("no dark target region on the board")
    if manifest is not None:
        iou = mask_iou(sil, manifest.scene.silhouette)
        if iou < 0.98:
            raise SilhouetteError(f"first-frame silhouette IoU {iou:.3f} against the manifest (< 0.98)")
    return sil


def segment_pieces(
    frame: np.ndarray, props: PaletteProps, params: TangramEvalParams = TangramEvalParams(), region=None
) -> tuple[list[np.ndarray], list[np.ndarray], list[int]]:
    """(bodies, full color masks, debris pixel counts) per piece.

    The body is the largest connected component of the piece color.
    """
    assigned = assign_colors(np.asarray(frame), props.colors, params.delta_col)
    if region is not None:
        assigned = np.where(region, assigned, -1)
    bodies, fulls, debris = [], [], []
    for i in range(len(props.pieces)):
        full = assigned == i
        body, rest = _largest(full)
        bodies.append(body)
        fulls.append(full)
        debris.append(rest)
    return bodies, fulls, debris


def piece_completion(
    final_masks: Sequence[np.ndarray],
    props: PaletteProps,
    silhouette: np.ndarray,
    params: TangramEvalParams = TangramEvalParams(),
    present_elsewhere: Optional[Sequence[bool]] = None,
) -> list[PieceVerdict]:
    lo, hi = params.area_window
    allowed = dilate(silhouette, params.dilation_px)
    out = []
    for i, (mask, pp) in enumerate(zip(final_masks, props.pieces)):
        area = int(mask.sum())
        found = area > 0
        tags: list[str] = []
        if not found:
            elsewhere = present_elsewhere is not None and present_elsewhere[i]
            tags.append(TAG_CENTROID if elsewhere else TAG_CHROMATIC)
            out.append(PieceVerdict(i, False, 0.0, False, False, 0, tags))
            continue
        ratio = area / pp.ref_area
        shape = shape_of(mask, params.angle_window)
        shape_ok = shape == pp.ref_shape
        inside = float((mask & allowed).sum()) / area
        inside_ok = inside >= params.containment
        if not (lo <= ratio <= hi) or not shape_ok:
            tags.append(TAG_STRUCTURAL)
        if not inside_ok:
            ys, xs = np.nonzero(mask)
            cy, cx = int(round(ys.mean())), int(round(xs.mean()))
            h, w = silhouette.shape
            centroid_in = 0 <= cy < h and 0 <= cx < w and bool(allowed[cy, cx])
            tags.append(TAG_ANGULAR if centroid_in else TAG_CENTROID)
        u = int(lo <= ratio <= hi and shape_ok and inside_ok)
        out.append(PieceVerdict(i, True, ratio, shape_ok, inside_ok, u, tags, shape.value))
    return out


def overlapping_pairs(masks: Sequence[np.ndarray], fraction: float = 0.01) -> list[tuple[int, int]]:
    """Pairs whose hole-filled masks share more than ``fraction`` of the smaller piece."""
    filled = [fill_holes(m) if m.any() else m for m in masks]
    pairs = []
    for i in range(len(filled)):
        for j in range(i + 1, len(filled)):
            a, b = int(filled[i].sum()), int(filled[j].sum())
            if min(a, b) == 0:
                continue
            inter = int((filled[i] & filled[j]).sum())
            if inter > fraction * min(a, b):
                pairs.append((i, j))
    return pairs


def strict_and_progress(
    verdicts: Sequence[PieceVerdict],
    masks: Optional[Sequence[np.ndarray]] = None,
    overlap_fraction: float = 0.01,
) -> tuple[int, float]:
    u = [v.u for v in verdicts]
    if masks is not None:
        for i, j in overlapping_pairs(masks, overlap_fraction):
            for k in (i, j):
                if u[k]:
                    u[k] = 0
                    verdicts[k].u = 0
                if TAG_OVERLAP not in verdicts[k].failure_tags:
                    verdicts[k].failure_tags.append(TAG_OVERLAP)
    strict = int(all(u))
    return strict, sum(u) / len(u)


def boundary_iou(final_masks: Sequence[np.ndarray], silhouette: np.ndarray) -> float:
    union = np.zeros_like(silhouette, dtype=bool)
    for m in final_masks:
        union |= m
    if not silhouette.any() and not union.any():
        return 1.0
    return mask_iou(union, silhouette)


def sample_indices(n_frames: int, k: int) -> list[int]:
    if k < 2:
        raise ValueError("k_samples must be >= 2")
    return [int(round(x)) for x in np.linspace(0, n_frames - 1, k)]


def integrity_flags(
    frames: Sequence[np.ndarray], props: PaletteProps, params: TangramEvalParams = TangramEvalParams()
) -> np.ndarray:
    """(k, 7) flags: visible area of each piece color over the whole canvas / A0 within the window."""
    lo, hi = params.area_window
    ref = np.array([p.ref_area for p in props.pieces], dtype=float)
    rows = []
    for t in sample_indices(len(frames), params.k_samples):
        assigned = assign_colors(np.asarray(frames[t]), props.colors, params.delta_col)
        counts = np.bincount(assigned[assigned >= 0].ravel(), minlength=len(ref))[: len(ref)]
        r = counts / ref
        rows.append((r >= lo) & (r <= hi))
    return np.array(rows, dtype=bool)


def visual_consistency(
    frames: Sequence[np.ndarray],
    props: PaletteProps,
    reference_flags: Optional[np.ndarray] = None,
    k_samples: int = 16,
    params: TangramEvalParams = TangramEvalParams(),
) -> float:
    """Share of sampled (piece, frame) integrity flags that agree with the reference.

    With no reference every piece is expected to stay intact in every frame.
    """
    if k_samples < 2:
        raise ValueError("k_samples must be >= 2")
    if params.k_samples != k_samples:
        params = TangramEvalParams(**{**params.__dict__, "k_samples": k_samples})
    flags = integrity_flags(frames, props, params)
    ref = np.ones_like(flags) if reference_flags is None else np.asarray(reference_flags, dtype=bool)
    if ref.shape != flags.shape:
        raise ValueError(f"reference flags {ref.shape} do not match {flags.shape}")
    return float((flags == ref).mean())


def consistency_success_correlation(reports) -> float:
    """Pearson correlation between visual consistency and strict success."""
    xs, ys = [], []
    for r in reports:
        m = r.metrics if hasattr(r, "metrics") else r
        if "visual_consistency" in m and "strict_gc" in m:
            xs.append(float(m["visual_consistency"]))
            ys.append(float(m["strict_gc"]))
    if len(xs) < 3:
        raise CorrelationUndefined(f"need at least 3 reports, got {len(xs)}")
    x, y = np.array(xs), np.array(ys)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise CorrelationUndefined("correlation undefined for a constant series")
    x, y = x - x.mean(), y - y.mean()
    return float((x @ y) / np.sqrt((x @ x) * (y @ y)))


def evaluate_tangram(
    frames: Sequence[np.ndarray],
    manifest: InstanceManifest,
    params: TangramEvalParams = TangramEvalParams(),
    reference_flags: Optional[np.ndarray] = None,
    use_golden_reference: bool = True,
) -> EvalReport:
    if manifest.task != "tangram" or manifest.scene is None:
        raise TaskMismatch(f"{manifest.instance_id} is not a tangram instance")
    scene = manifest.scene
    report = EvalReport(manifest.instance_id, "tangram", manifest.group, tuple(manifest.splits))
    first = np.asarray(frames[0])
    props = extract_palette_props(first, manifest, params)
    silhouette = extract_target_silhouette(first, manifest, params)
    board = _board_mask(scene.variant)
    final = _check_frame(frames[len(frames) - 1], scene.variant)
    bodies, fulls, debris = segment_pieces(final, props, params, region=board)
    _, everywhere, _ = segment_pieces(final, props, params)
    elsewhere = [bool(m.any()) for m in everywhere]
    verdicts = piece_completion(bodies, props, silhouette, params, elsewhere)
    for v, d in zip(verdicts, debris):
        v.debris = d
    strict, progress = strict_and_progress(verdicts, bodies, params.overlap_fraction)
    biou = boundary_iou(fulls, silhouette)

    mode = "static"
    if reference_flags is None and use_golden_reference:
        golden = synthesize_assembly_video(scene)
        reference_flags = integrity_flags(golden, props, params)
        mode = "golden"
    elif reference_flags is not None:
        mode = "reference"
    vc = visual_consistency(frames, props, reference_flags, params.k_samples, params)

    tags: list[str] = []
    for v in verdicts:
        for t in v.failure_tags:
            if t not in tags:
                tags.append(t)
    report.metrics = {
        "strict_gc": float(strict),
        "progress_gc": float(progress),
        "boundary_iou": float(biou),
        "visual_consistency": float(vc),
    }
    report.failure_tags = tags if not strict else []
    report.diagnostics = {
        "variant": scene.variant,
        "reference_mode": mode,
        "pieces": [
            {
                "piece_id": v.piece_id,
                "found": v.found,
                "area_ratio": v.area_ratio,
                "shape": v.shape,
                "ref_shape": props.pieces[v.piece_id].ref_shape.value,
                "shape_ok": v.shape_ok,
                "inside_ok": v.inside_ok,
                "u": v.u,
                "debris_px": v.debris,
                "tags": v.failure_tags,
            }
            for v in verdicts
        ],
    }
    return report
