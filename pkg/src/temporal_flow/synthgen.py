"""Seeded synthetic possessions with planted phase structure.

Passes follow a piecewise-constant-rate Poisson process whose rate depends on
the shot-clock phase; receivers are drawn by position weights that may also
change per phase. Every possession gets its own generator spawned from the
config seed, so output does not depend on generation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .data import (
    POSITIONS,
    Dataset,
    Outcome,
    PassEvent,
    PlayerRef,
    Possession,
    StartBall,
    StartHalf,
    validate_possession,
    write_events_csv,
    write_roster_csv,
)
from .errors import ConfigError

__all__ = ["SynthConfig", "generate", "write_dataset", "phase_of"]

_CATEGORIES = (
    (StartHalf.DEFENSIVE, StartBall.INSIDE),
    (StartHalf.DEFENSIVE, StartBall.OFFSIDE),
    (StartHalf.OFFENSIVE, StartBall.INSIDE),
    (StartHalf.OFFENSIVE, StartBall.OFFSIDE),
)
_CODES = {
    Outcome.POSITIVE: ("made_2pt", "made_3pt", "foul_drawn"),
    Outcome.NEGATIVE: ("missed_2pt", "missed_3pt", "turnover"),
    Outcome.NEUTRAL: ("period_end",),
}

Weights = tuple[float, float, float, float, float]


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_possessions: int = 200
    n_teams: int = 4
    n_games: int = 6
    players_per_position: int = 2
    duration_min: float = 3.0
    duration_max: float = 24.0
    # phase boundaries in shot-clock seconds, strictly decreasing
    phase_bounds: tuple[float, float] = (18.0, 11.0)
    # passes per second in the early, middle and late phase
    pass_rates: tuple[float, float, float] = (0.2, 0.35, 0.2)
    # per phase: relative chance that each position (PG..C) receives the next pass
    receiver_weights: tuple[Weights, Weights, Weights] = (
        (3.0, 2.0, 1.5, 1.0, 1.0),
        (2.0, 1.8, 1.6, 1.2, 1.2),
        (2.5, 2.0, 1.5, 1.0, 1.0),
    )
    carrier_weights: Weights = (6.0, 2.0, 1.0, 0.5, 0.5)
    # probabilities of (DEF-IN, DEF-OUT, OFF-IN, OFF-OUT)
    category_mix: tuple[float, float, float, float] = (0.3, 0.55, 0.1, 0.05)
    offensive_shot_clock: float = 14.0
    inbound_delay: tuple[float, float] = (0.2, 1.5)
    # None: inbound possessions start with a pass unless every rate is zero
    inbound_pass: bool | None = None
    p_positive: float = 0.48
    p_neutral: float = 0.04
    # additive change of p_positive when the position touches the ball
    outcome_effects: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        b1, b2 = self.phase_bounds
        if not 24.0 > b1 > b2 > 6.0:
            raise ConfigError("phase_bounds must be strictly decreasing inside (6, 24)")
        if len(self.pass_rates) != 3 or min(self.pass_rates) < 0:
            raise ConfigError("pass_rates needs three non-negative rates")
        for w in (*self.receiver_weights, self.carrier_weights):
            if len(w) != 5 or min(w) < 0 or sum(w) <= 0:
                raise ConfigError("position weights need five non-negative entries, not all zero")
        if len(self.category_mix) != 4 or min(self.category_mix) < 0 or sum(self.category_mix) <= 0:
            raise ConfigError("category_mix needs four non-negative weights")
        if not 0 < self.duration_min <= self.duration_max:
            raise ConfigError("need 0 < duration_min <= duration_max")
        if not (0 <= self.p_positive <= 1 and 0 <= self.p_neutral < 1):
            raise ConfigError("outcome probabilities must lie in [0, 1]")
        if self.n_possessions < 0 or self.n_teams < 2 or self.n_games < 1 or self.players_per_position < 1:
            raise ConfigError("need n_teams >= 2, n_games >= 1, players_per_position >= 1")
        if 5 * self.players_per_position > 63:
            raise ConfigError("at most 63 players per team")
        unknown = set(self.outcome_effects) - {p.value for p in POSITIONS}
        if unknown:
            raise ConfigError(f"unknown positions in outcome_effects: {sorted(unknown)}")

    def with_(self, **changes) -> "SynthConfig":
        return replace(self, **changes)


def phase_of(shot_clock: float, bounds: tuple[float, float]) -> int:
    if shot_clock > bounds[0]:
        return 0
    if shot_clock > bounds[1]:
        return 1
    return 2


def _rosters(cfg: SynthConfig) -> dict[str, tuple[PlayerRef, ...]]:
    out = {}
    for t in range(cfg.n_teams):
        team = f"T{t:02d}"
        refs = []
        for j in range(cfg.players_per_position):
            for pos in POSITIONS:
                refs.append(PlayerRef(f"{team}-{pos.value}{j + 1}", team, pos))
        out[team] = tuple(refs)
    return out


def _pick(rng: np.random.Generator, weights) -> int:
    w = np.asarray(weights, dtype=float)
    return int(rng.choice(len(w), p=w / w.sum()))


def _possession(cfg: SynthConfig, i: int, rng: np.random.Generator, rosters) -> Possession:
    game = i % cfg.n_games
    teams = (game % cfg.n_teams, (game + 1 + game // cfg.n_teams) % cfg.n_teams)
    if teams[0] == teams[1]:
        teams = (teams[0], (teams[0] + 1) % cfg.n_teams)
    team = f"T{teams[(i // cfg.n_games) % 2]:02d}"
    half, ball = _CATEGORIES[_pick(rng, cfg.category_mix)]
    clock0 = 24.0 if half is StartHalf.DEFENSIVE else cfg.offensive_shot_clock
    hi = min(cfg.duration_max, clock0)
    duration = round(float(rng.uniform(min(cfg.duration_min, hi), hi)), 3)

    by_pos = {pos: [r.player_id for r in rosters[team] if r.position is pos] for pos in POSITIONS}
    lineup = [by_pos[pos][int(rng.integers(len(by_pos[pos])))] for pos in POSITIONS]

    def receiver(holder: int, phase: int) -> int:
        w = np.array(cfg.receiver_weights[phase], dtype=float)
        w[holder] = 0.0
        if w.sum() == 0:
            w = np.ones(5)
            w[holder] = 0.0
        return _pick(rng, w)

    holder = _pick(rng, cfg.carrier_weights)
    carrier = lineup[holder]
    passes: list[PassEvent] = []
    t = 0.0
    inbound = cfg.inbound_pass if cfg.inbound_pass is not None else max(cfg.pass_rates) > 0
    if ball is StartBall.OFFSIDE and inbound:
        t = round(float(rng.uniform(*cfg.inbound_delay)), 3)
        t = min(t, duration)
        nxt = receiver(holder, phase_of(clock0 - t, cfg.phase_bounds))
        passes.append(PassEvent(t, lineup[holder], lineup[nxt]))
        holder = nxt

    # phase ends expressed as possession times
    ends = [clock0 - cfg.phase_bounds[0], clock0 - cfg.phase_bounds[1], np.inf]
    while t < duration:
        phase = phase_of(clock0 - t, cfg.phase_bounds)
        end = min(ends[phase], duration)
        if end <= t:  # already past this phase's end (shorter shot clocks)
            end = min(next((e for e in ends if e > t), np.inf), duration)
        rate = cfg.pass_rates[phase]
        if rate <= 0:
            t = end
            continue
        nxt_t = t + float(rng.exponential(1.0 / rate))
        if nxt_t >= end:
            t = end
            continue
        stamp = round(nxt_t, 3)
        if passes and stamp <= passes[-1].t:
            stamp = round(passes[-1].t + 0.001, 3)
        if stamp > duration:
            break
        nxt = receiver(holder, phase)
        passes.append(PassEvent(stamp, lineup[holder], lineup[nxt]))
        holder = nxt
        t = nxt_t

    touched = {POSITIONS[lineup.index(carrier)]} | {POSITIONS[lineup.index(p.receiver)] for p in passes}
    if rng.random() < cfg.p_neutral:
        outcome = Outcome.NEUTRAL
    else:
        p = cfg.p_positive + sum(cfg.outcome_effects.get(pos.value, 0.0) for pos in touched)
        outcome = Outcome.POSITIVE if rng.random() < min(max(p, 0.0), 1.0) else Outcome.NEGATIVE
    codes = _CODES[outcome]
    code = codes[int(rng.integers(len(codes)))]

    return Possession(
        possession_id=f"P{i:06d}",
        game_id=f"G{game:02d}",
        team_id=team,
        duration=duration,
        shot_clock_start=clock0,
        start_half=half,
        start_ball=ball,
        initial_carrier=carrier,
        outcome_raw=code,
        outcome=outcome,
        passes=tuple(passes),
    )


def generate(config: SynthConfig | None = None) -> Dataset:
    cfg = config or SynthConfig()
    rosters = _rosters(cfg)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_possessions)
    possessions = tuple(
        _possession(cfg, i, np.random.default_rng(s), rosters) for i, s in enumerate(streams)
    )
    positions = {(r.team_id, r.player_id): r.position for refs in rosters.values() for r in refs}
    for p in possessions:
        problems = validate_possession(p, positions)
        if problems:  # generator bug, never user error
            raise AssertionError(f"synthetic possession {p.possession_id} invalid: {problems}")
    return Dataset(possessions, rosters, {"source": "synthgen", "seed": cfg.seed})


def write_dataset(dataset: Dataset, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events, roster = out / "events.csv", out / "roster.csv"
    write_events_csv(dataset.possessions, events)
    write_roster_csv(dataset.rosters, roster)
    return events, roster
