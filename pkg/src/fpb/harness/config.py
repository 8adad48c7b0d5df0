"""Flat ``key=value`` configuration with typed defaults."""

from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Optional

from ..errors import UsageError
from ..eval_maze import MazeEvalParams
from ..eval_tangram import TangramEvalParams

DEFAULTS: dict[str, object] = {
    "workers": 1,
    "maze.total_frames": 81,
    "maze.lead_hold": 4,
    "maze.sweep_tail_hold": 4,
    "eval.maze.tau": 30,
    "eval.maze.min_area": 25,
    "eval.maze.continuity_radius": 1.5,
    "eval.maze.resample_per_step": 20,
    "eval.maze.hysteresis": 0.15,
    "eval.maze.max_gap_fraction": 0.5,
    "eval.tangram.delta_col": 60,
    "eval.tangram.area_window": (0.6, 1.4),
    "eval.tangram.angle_window": 15.0,
    "eval.tangram.k_samples": 16,
    "eval.tangram.containment": 0.98,
    "eval.tangram.dilation_px": 2,
}


def _coerce(key: str, raw: str):
    default = DEFAULTS[key]
    try:
        if isinstance(default, tuple):
            parts = [float(p) for p in raw.replace(" ", "").split(",")]
            if len(parts) != len(default):
                raise ValueError(f"expected {len(default)} comma-separated numbers")
            return tuple(parts)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {raw!r} ({exc})") from exc
    return raw


def parse_config(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise UsageError(f"config line {n}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(path: Optional[str] = None, workers: Optional[int] = None) -> dict:
    """Defaults, then the config file, then FPB_WORKERS / --workers."""
    cfg = dict(DEFAULTS)
    if path:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file {path} not found")
        cfg.update(parse_config(p.read_text()))
    env = os.environ.get("FPB_WORKERS")
    if env and not (path and "workers" in parse_config(Path(path).read_text())):
        cfg["workers"] = _coerce("workers", env)
    if workers is not None:
        cfg["workers"] = workers
    if int(cfg["workers"]) < 1:
        raise UsageError("workers must be >= 1")
    return cfg


def maze_params(cfg: dict) -> MazeEvalParams:
    return MazeEvalParams(
        tau=int(cfg["eval.maze.tau"]),
        min_area=int(cfg["eval.maze.min_area"]),
        continuity_radius=float(cfg["eval.maze.continuity_radius"]),
        resample_per_step=int(cfg["eval.maze.resample_per_step"]),
        hysteresis=float(cfg["eval.maze.hysteresis"]),
        max_gap_fraction=float(cfg["eval.maze.max_gap_fraction"]),
    )


def tangram_params(cfg: dict) -> TangramEvalParams:
    return TangramEvalParams(
        delta_col=int(cfg["eval.tangram.delta_col"]),
        area_window=tuple(cfg["eval.tangram.area_window"]),
        angle_window=float(cfg["eval.tangram.angle_window"]),
        k_samples=int(cfg["eval.tangram.k_samples"]),
        containment=float(cfg["eval.tangram.containment"]),
        dilation_px=int(cfg["eval.tangram.dilation_px"]),
    )


def derive_seed(seed: int, *parts) -> int:
    """Stable 31-bit seed from a base seed and labels."""
    text = "/".join([str(seed)] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "big") & 0x7FFFFFFF
