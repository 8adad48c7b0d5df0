"""Plain data records passed between generators, evaluators and the harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional

from .errors import ScheduleError

if TYPE_CHECKING:
    from .maze_gen import MazeSpec
    from .tangram_gen import TangramScene

SCHEMA_VERSION = 1

SPLIT_TAGS = ("iid", "spatial_ood", "temporal_ood", "both_ood", "unseen_icon", "unseen_silhouette")

MAZE_CANVAS = (832, 480)


@dataclass(frozen=True)
class FrameSchedule:
    """Frame budget for a maze solution video.

    ``kappa`` frames are spent per action; ``lead_hold`` frames show the
    start state before motion and ``tail_hold`` frames hold the final state.
    """

    mode: str
    total_frames: int
    kappa: int
    lead_hold: int
    tail_hold: int

    @classmethod
    def fixed_total(cls, n_actions: int, total_frames: int = 81, lead_hold: int = 4) -> "FrameSchedule":
        if n_actions < 1:
            raise ScheduleError("schedule needs at least one action")
        kappa = (total_frames - lead_hold) // n_actions
        if kappa < 1:
            raise ScheduleError(
                f"{total_frames} frames cannot fit {n_actions} steps after {lead_hold} lead frames"
            )
        tail = total_frames - lead_hold - kappa * n_actions
        return cls("fixed_total", total_frames, kappa, lead_hold, tail)

    @classmethod
    def per_step(
        cls, n_actions: int, kappa: int, lead_hold: int = 0, tail_hold: int = 0
    ) -> "FrameSchedule":
        if kappa < 1:
            raise ScheduleError("kappa must be positive")
        return cls("per_step", lead_hold + kappa * n_actions + tail_hold, kappa, lead_hold, tail_hold)

    def motion_frames(self, n_actions: int) -> int:
        return self.kappa * n_actions

    def validate(self, n_actions: int) -> None:
        if self.mode not in ("fixed_total", "per_step"):
            raise ScheduleError(f"unknown schedule mode {self.mode!r}")
        if min(self.lead_hold, self.tail_hold) < 0 or self.kappa < 1:
            raise ScheduleError("holds must be >= 0 and kappa >= 1")
        if self.total_frames < 1:
            raise ScheduleError("total_frames must be >= 1")
        expect = self.lead_hold + self.kappa * n_actions + self.tail_hold
        if self.total_frames != expect:
            raise ScheduleError(
                f"total_frames={self.total_frames} but lead {self.lead_hold} + "
                f"{self.kappa}x{n_actions} + tail {self.tail_hold} = {expect}"
            )
        if self.motion_frames(n_actions) < 2:
            raise ScheduleError("motion needs at least 2 frames")


@dataclass
class InstanceManifest:
    task: str
    instance_id: str
    seed: int
    group: str
    splits: tuple[str, ...]
    prompt_text: str
    canvas: tuple[int, int]
    maze: Optional["MazeSpec"] = None
    actions: Optional[tuple[str, ...]] = None
    schedule: Optional[FrameSchedule] = None
    scene: Optional["TangramScene"] = None


@dataclass
class EvalReport:
    instance_id: str
    task: str
    group: str = ""
    splits: tuple[str, ...] = ()
    metrics: dict[str, float] = field(default_factory=dict)
    failure_tags: list[str] = field(default_factory=list)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        if self.error is not None:
            return False
        if self.task == "maze":
            return self.metrics.get("em", 0.0) == 1.0
        return self.metrics.get("strict_gc", 0.0) == 1.0
