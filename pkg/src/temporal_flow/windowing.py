"""Sliding-window snapshots of a possession.

All arithmetic is done on integer milliseconds so that window boundaries and
pass times compare exactly; seconds are only used at the edges.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterator

from .data import PassEvent, Possession
from .errors import ConfigError, WindowError

__all__ = [
    "WindowConfig",
    "Snapshot",
    "TemporalGraph",
    "ShotClockWarning",
    "build_windows",
    "shot_clock_at",
    "carrier_at",
    "to_ms",
]


class ShotClockWarning(UserWarning):
    """A window starts with less shot clock left than the window lasts."""


def to_ms(seconds: float) -> int:
    return int(round(seconds * 1000.0))


@dataclass(frozen=True)
class WindowConfig:
    duration: float = 6.0
    step: float = 0.5

    def __post_init__(self) -> None:
        if not (self.duration > 0 and self.step > 0):
            raise ConfigError("window duration and step must be positive")
        if to_ms(self.step) == 0 or to_ms(self.duration) % to_ms(self.step):
            raise ConfigError(
                f"window duration {self.duration} is not a multiple of step {self.step}"
            )

    @property
    def duration_ms(self) -> int:
        return to_ms(self.duration)

    @property
    def step_ms(self) -> int:
        return to_ms(self.step)

    def n_windows(self, possession_duration: float) -> int:
        """Number of full windows; 0 if the possession is shorter than one."""
        d = to_ms(possession_duration)
        if d < self.duration_ms:
            return 0
        return (d - self.duration_ms) // self.step_ms + 1


@dataclass(frozen=True)
class Snapshot:
    """The passes of one window ``[t_start, t_end)`` of a possession."""

    possession_id: str
    k: int
    t_start: float
    t_end: float
    passes: tuple[PassEvent, ...]
    carrier_at_start: str
    shot_clock_at_start: float
    clock_flag: bool = False
    possession: Possession | None = field(default=None, repr=False, compare=False)

    @property
    def nodes(self) -> frozenset[str]:
        out = {self.carrier_at_start}
        for p in self.passes:
            out.add(p.passer)
            out.add(p.receiver)
        return frozenset(out)

    @property
    def pass_count(self) -> int:
        return len(self.passes)


@dataclass(frozen=True)
class TemporalGraph:
    possession_id: str
    snapshots: tuple[Snapshot, ...]

    def __len__(self) -> int:
        return len(self.snapshots)

    def __iter__(self) -> Iterator[Snapshot]:
        return iter(self.snapshots)

    def __getitem__(self, k: int) -> Snapshot:
        return self.snapshots[k]


def carrier_at(possession: Possession, t: float) -> str:
    """Who holds the ball at time ``t``: receiver of the last pass strictly before ``t``."""
    t_ms = to_ms(t)
    holder = possession.initial_carrier
    for p in possession.passes:
        if to_ms(p.t) < t_ms:
            holder = p.receiver
        else:
            break
    return holder


def shot_clock_at(snapshot: Snapshot, possession: Possession, config: WindowConfig | None = None) -> float:
    config = config or WindowConfig()
    value = (to_ms(possession.shot_clock_start) - snapshot.k * config.step_ms) / 1000.0
    if to_ms(value) < config.duration_ms:
        warnings.warn(
            f"possession {possession.possession_id} window {snapshot.k}: "
            f"shot clock {value} below the window duration",
            ShotClockWarning,
            stacklevel=2,
        )
    return value


def build_windows(possession: Possession, config: WindowConfig | None = None) -> TemporalGraph:
    config = config or WindowConfig()
    n = config.n_windows(possession.duration)
    if n == 0:
        raise WindowError(
            f"possession {possession.possession_id} lasts {possession.duration}s, "
            f"shorter than one {config.duration}s window"
        )
    w, s = config.duration_ms, config.step_ms
    times = [to_ms(p.t) for p in possession.passes]
    clock0 = to_ms(possession.shot_clock_start)
    snaps = []
    for k in range(n):
        start = k * s
        end = start + w
        inside = tuple(p for p, t in zip(possession.passes, times) if start <= t < end)
        clock = (clock0 - k * s) / 1000.0
        flagged = to_ms(clock) < w
        if flagged:
            warnings.warn(
                f"possession {possession.possession_id} window {k}: shot clock {clock} "
                "below the window duration",
                ShotClockWarning,
                stacklevel=2,
            )
        snaps.append(
            Snapshot(
                possession_id=possession.possession_id,
                k=k,
                t_start=start / 1000.0,
                t_end=end / 1000.0,
                passes=inside,
                carrier_at_start=carrier_at(possession, start / 1000.0),
                shot_clock_at_start=clock,
                clock_flag=flagged,
                possession=possession,
            )
        )
    return TemporalGraph(possession.possession_id, tuple(snaps))
