"""Flow centrality (FC) and flow betweenness (FB).

A subject is either a player id or a :class:`~temporal_flow.data.Position`;
a position counts as involved when any of its rostered players is.

*Involved* means appearing in the node sequence, the silent carrier
included. *Between* means receiving a pass and making the next one; at
graphlet level both passes must fall inside the same window.

Functions taking ``Possession``/``Snapshot`` objects are the reference
implementations. The ``*_table`` functions compute the same quantities on the
columnar tables for the whole pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .columnar import POSITION_CODES, TYPE_CODES, PossessionTable, WindowTable, position_hits
from .data import POSITIONS, Outcome, Position, Possession, PossessionType
from .errors import UndefinedMetricError
from .stats import wilson_interval
from .windowing import Snapshot, WindowConfig, build_windows

__all__ = [
    "Metric",
    "Level",
    "InvolvementRecord",
    "SeriesPoint",
    "MetricSeries",
    "GameAggregate",
    "possession_roles",
    "snapshot_roles",
    "flow_centrality_play",
    "flow_betweenness_play",
    "adapted_metric",
    "possession_adapted_score",
    "fb_fc_ratio",
    "ratio",
    "game_aggregate",
    "metric_series",
    "involvement_records",
    "indicator_rows",
    "position_rates",
    "game_aggregates_table",
]


class Metric(str, Enum):
    FC = "FC"
    FB = "FB"


class Level(str, Enum):
    PLAY = "play"
    GRAPHLET = "graphlet"


Subject = str | Position


@dataclass(frozen=True)
class InvolvementRecord:
    unit: Level
    subject: str
    unit_key: tuple
    involved: int
    between: int
    outcome: Outcome
    possession_type: PossessionType
    shot_clock: float | None = None


@dataclass(frozen=True)
class SeriesPoint:
    shot_clock: float
    mean: float
    ci_low: float
    ci_high: float
    n: int


@dataclass(frozen=True)
class MetricSeries:
    subject: str
    metric: Metric
    level: Level
    possession_type: PossessionType
    points: tuple[SeriesPoint, ...]


@dataclass(frozen=True)
class GameAggregate:
    """Play-level FC/FB next to possession-averaged adapted FC/FB for one game."""

    subject: str
    game_id: str
    possession_type: PossessionType | None
    n_possessions: int
    play_fc: float
    play_fb: float
    adapted_fc: float
    adapted_fb: float
    adapted_fc_ci: tuple[float, float]
    adapted_fb_ci: tuple[float, float]


# -- reference implementations ------------------------------------------------


def possession_roles(possession: Possession) -> tuple[set[str], set[str]]:
    """(involved players, in-between players) over a whole possession."""
    involved = set(possession.node_sequence())
    between = {p.receiver for p in possession.passes[:-1]}
    return involved, between


def snapshot_roles(snapshot: Snapshot) -> tuple[set[str], set[str]]:
    involved = set(snapshot.nodes)
    between = {p.receiver for p in snapshot.passes[:-1]}
    return involved, between


def _hit(subject: Subject, players: Iterable[str], team_id: str, positions) -> bool:
    if isinstance(subject, Position):
        if positions is None:
            raise ValueError("a position subject needs the roster positions")
        return any(positions[(team_id, pid)] is subject for pid in players)
    return subject in players


def _play_indicator(subject, possession, metric: Metric, positions) -> int:
    involved, between = possession_roles(possession)
    group = involved if metric is Metric.FC else between
    return int(_hit(subject, group, possession.team_id, positions))


def _window_indicator(subject, snapshot: Snapshot, metric: Metric, positions) -> int:
    involved, between = snapshot_roles(snapshot)
    group = involved if metric is Metric.FC else between
    team = snapshot.possession.team_id if snapshot.possession is not None else None
    return int(_hit(subject, group, team, positions))


def flow_centrality_play(subject: Subject, possessions: Sequence[Possession], positions=None) -> float:
    if not possessions:
        raise UndefinedMetricError("flow centrality over an empty possession set")
    return sum(_play_indicator(subject, p, Metric.FC, positions) for p in possessions) / len(possessions)


def flow_betweenness_play(subject: Subject, possessions: Sequence[Possession], positions=None) -> float:
    if not possessions:
        raise UndefinedMetricError("flow betweenness over an empty possession set")
    return sum(_play_indicator(subject, p, Metric.FB, positions) for p in possessions) / len(possessions)


def adapted_metric(subject: Subject, snapshots: Sequence[Snapshot], metric: Metric | str, positions=None) -> float:
    """Fraction of the given snapshots in which the subject is involved (FC)
    or in between (FB)."""
    metric = Metric(metric)
    if not snapshots:
        raise UndefinedMetricError("adapted metric over an empty snapshot set")
    return sum(_window_indicator(subject, s, metric, positions) for s in snapshots) / len(snapshots)


def possession_adapted_score(
    subject: Subject, possession: Possession, metric: Metric | str, positions=None,
    config: WindowConfig | None = None,
) -> float:
    """Adapted metric over one possession's windows, e.g. 1 window of 10 -> 0.1."""
    return adapted_metric(subject, build_windows(possession, config).snapshots, metric, positions)


def ratio(fb: float, fc: float) -> float | None:
    """FB over FC; ``None`` when FC is zero."""
    if fc == 0:
        return None
    return fb / fc


def fb_fc_ratio(subject: Subject, units: Sequence, level: Level | str = Level.PLAY, positions=None) -> float | None:
    """FB/FC for possessions (play level) or snapshots (graphlet level)."""
    if Level(level) is Level.PLAY:
        fc = flow_centrality_play(subject, units, positions)
        fb = flow_betweenness_play(subject, units, positions)
    else:
        fc = adapted_metric(subject, units, Metric.FC, positions)
        fb = adapted_metric(subject, units, Metric.FB, positions)
    return ratio(fb, fc)


def _t_interval(values: np.ndarray) -> tuple[float, float]:
    m = float(values.mean())
    if len(values) < 2:
        return (m, m)
    half = sps.t.ppf(0.975, len(values) - 1) * values.std(ddof=1) / np.sqrt(len(values))
    return (max(0.0, m - half), min(1.0, m + half))


def game_aggregate(
    subject: Subject, possessions: Sequence[Possession], positions=None,
    config: WindowConfig | None = None,
) -> GameAggregate:
    """Aggregate one game's possessions for the play-vs-graphlet comparison.

    Adapted values are the mean over possessions of each possession's window
    fraction, with a t-interval clipped to [0, 1].
    """
    if not possessions:
        raise UndefinedMetricError("game has no possessions")
    fc_scores = np.array([possession_adapted_score(subject, p, Metric.FC, positions, config) for p in possessions])
    fb_scores = np.array([possession_adapted_score(subject, p, Metric.FB, positions, config) for p in possessions])
    types = {p.possession_type for p in possessions}
    return GameAggregate(
        subject=subject.value if isinstance(subject, Position) else subject,
        game_id=possessions[0].game_id,
        possession_type=types.pop() if len(types) == 1 else None,
        n_possessions=len(possessions),
        play_fc=flow_centrality_play(subject, possessions, positions),
        play_fb=flow_betweenness_play(subject, possessions, positions),
        adapted_fc=float(fc_scores.mean()),
        adapted_fb=float(fb_scores.mean()),
        adapted_fc_ci=_t_interval(fc_scores),
        adapted_fb_ci=_t_interval(fb_scores),
    )


# -- table implementations ----------------------------------------------------


def _masks(table, metric: Metric) -> np.ndarray:
    return table.involved if metric is Metric.FC else table.between


def metric_series(
    ptab: PossessionTable, wtab: WindowTable, position: Position,
    possession_type: PossessionType, metric: Metric | str,
) -> MetricSeries:
    """Adapted metric per shot-clock value, with Wilson 95% intervals.

    The denominator at each shot-clock value is every window of the possession
    type starting at that value. Points are ordered by descending shot clock.
    """
    metric = Metric(metric)
    sel = wtab.ptype == TYPE_CODES[possession_type]
    hits = position_hits(_masks(wtab, metric)[sel], wtab.team[sel], ptab.position_mask, position)
    clocks = wtab.clock_ms[sel]
    points = []
    for c in np.unique(clocks)[::-1]:
        at = clocks == c
        n = int(at.sum())
        k = int(hits[at].sum())
        lo, hi = wilson_interval(k, n)
        points.append(SeriesPoint(float(c) / 1000.0, k / n, lo, hi, n))
    return MetricSeries(position.value, metric, Level.GRAPHLET, possession_type, tuple(points))


def position_rates(
    ptab: PossessionTable, wtab: WindowTable, level: Level, metric: Metric,
    position: Position, possession_type: PossessionType | None = None,
) -> tuple[int, int]:
    """(units with the position involved/between, units) at a level."""
    table = ptab if level is Level.PLAY else wtab
    sel = np.ones(len(table.ptype), dtype=bool)
    if possession_type is not None:
        sel &= table.ptype == TYPE_CODES[possession_type]
    hits = position_hits(_masks(table, metric)[sel], table.team[sel], ptab.position_mask, position)
    return int(hits.sum()), int(sel.sum())


def possession_window_fractions(ptab: PossessionTable, wtab: WindowTable, metric: Metric, position: Position) -> np.ndarray:
    hits = position_hits(_masks(wtab, metric), wtab.team, ptab.position_mask, position)
    n_win = np.bincount(wtab.poss, minlength=len(ptab))
    return np.bincount(wtab.poss, weights=hits, minlength=len(ptab)) / np.maximum(n_win, 1)


def game_aggregates_table(ptab: PossessionTable, wtab: WindowTable) -> list[GameAggregate]:
    """Per (game, possession type, position) aggregates; sorted by those keys."""
    out = []
    frac = {
        (m, pos): possession_window_fractions(ptab, wtab, m, pos)
        for m in Metric for pos in POSITIONS
    }
    for gi, game_id in enumerate(ptab.games):
        for ptype, code in TYPE_CODES.items():
            sel = (ptab.game == gi) & (ptab.ptype == code)
            if not sel.any():
                continue
            for pos in POSITIONS:
                fc_hits = position_hits(ptab.involved[sel], ptab.team[sel], ptab.position_mask, pos)
                fb_hits = position_hits(ptab.between[sel], ptab.team[sel], ptab.position_mask, pos)
                fcs = frac[(Metric.FC, pos)][sel]
                fbs = frac[(Metric.FB, pos)][sel]
                out.append(
                    GameAggregate(
                        subject=pos.value, game_id=game_id, possession_type=ptype,
                        n_possessions=int(sel.sum()),
                        play_fc=float(fc_hits.mean()), play_fb=float(fb_hits.mean()),
                        adapted_fc=float(fcs.mean()), adapted_fb=float(fbs.mean()),
                        adapted_fc_ci=_t_interval(fcs), adapted_fb_ci=_t_interval(fbs),
                    )
                )
    return out


def _participants(ptab: PossessionTable) -> np.ndarray:
    """Per possession: bitmask of the team's players who touch the ball in that game."""
    keys = ptab.game * len(ptab.teams) + ptab.team
    out = np.zeros(len(ptab), dtype=np.int64)
    for key in np.unique(keys):
        sel = keys == key
        out[sel] = np.bitwise_or.reduce(ptab.involved[sel])
    return out


def indicator_rows(
    ptab: PossessionTable, wtab: WindowTable, level: Level, metric: Metric,
    unit: str = "player", possession_type: PossessionType | None = None,
    outcomes: bool = False,
):
    """0/1 observations grouped by position, as used by the KW comparisons.

    ``unit="player"``: one row per (unit, player) for every player of the
    team who touches the ball at least once in that game. ``unit="position"``:
    one row per (unit, position) for every position on the team's roster.
    Returns ``(values, position_codes)`` plus the outcome code per row when
    ``outcomes`` is set.
    """
    level = Level(level)
    metric = Metric(metric)
    table = ptab if level is Level.PLAY else wtab
    sel = np.ones(len(table.ptype), dtype=bool)
    if possession_type is not None:
        sel &= table.ptype == TYPE_CODES[possession_type]
    masks = _masks(table, metric)[sel]
    team = table.team[sel]
    outcome = table.outcome[sel]
    values, groups, outs = [], [], []
    if unit == "player":
        part = _participants(ptab)
        part = part if level is Level.PLAY else part[wtab.poss]
        part = part[sel]
        for b in range(64):
            rows = ((part >> b) & 1).astype(bool)
            if not rows.any():
                continue
            values.append(((masks[rows] >> b) & 1).astype(np.int8))
            groups.append(ptab.position_code[team[rows], b])
            outs.append(outcome[rows])
    elif unit == "position":
        for pos in POSITIONS:
            rows = ptab.position_mask[team, POSITION_CODES[pos]] != 0
            values.append(position_hits(masks[rows], team[rows], ptab.position_mask, pos).astype(np.int8))
            groups.append(np.full(int(rows.sum()), POSITION_CODES[pos], dtype=np.int8))
            outs.append(outcome[rows])
    else:
        raise ValueError(f"unknown unit {unit!r}")
    v = np.concatenate(values) if values else np.zeros(0, np.int8)
    g = np.concatenate(groups) if groups else np.zeros(0, np.int8)
    if outcomes:
        return v, g, (np.concatenate(outs) if outs else np.zeros(0, np.int8))
    return v, g


def involvement_records(
    ptab: PossessionTable, wtab: WindowTable, level: Level | str,
) -> Iterator[InvolvementRecord]:
    """Position-level records, one per (unit, position)."""
    level = Level(level)
    types = {v: k for k, v in TYPE_CODES.items()}
    outcomes = list(Outcome)
    if level is Level.PLAY:
        table, keys = ptab, [(pid,) for pid in ptab.ids]
        clocks = [None] * len(ptab)
    else:
        table = wtab
        keys = [(ptab.ids[p], int(k)) for p, k in zip(wtab.poss, wtab.k)]
        clocks = (wtab.clock_ms / 1000.0).tolist()
    for pos in POSITIONS:
        inv = position_hits(table.involved, table.team, ptab.position_mask, pos)
        btw = position_hits(table.between, table.team, ptab.position_mask, pos)
        for i in range(len(keys)):
            yield InvolvementRecord(
                unit=level, subject=pos.value, unit_key=keys[i],
                involved=int(inv[i]), between=int(btw[i]),
                outcome=outcomes[int(table.outcome[i])],
                possession_type=types[int(table.ptype[i])],
                shot_clock=clocks[i],
            )
