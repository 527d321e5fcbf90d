"""Columnar (numpy) views of an analysis set: one row per possession and one
row per window. The object API in :mod:`windowing` / :mod:`graphlets` is the
readable reference; these tables feed the bulk pipeline.

Players are addressed by their index in their team's roster, and involvement
is stored as int64 bitmasks over those indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .data import POSITIONS, Outcome, PlayerRef, Position, Possession, PossessionType
from .windowing import WindowConfig, to_ms

__all__ = ["PossessionTable", "WindowTable", "build_tables", "TYPE_CODES", "OUTCOME_CODES"]

TYPE_CODES = {PossessionType.BALL_IN: 0, PossessionType.BALL_OUT: 1}
OUTCOME_CODES = {Outcome.POSITIVE: 0, Outcome.NEGATIVE: 1, Outcome.NEUTRAL: 2}
POSITION_CODES = {p: i for i, p in enumerate(POSITIONS)}


@dataclass(frozen=True)
class PossessionTable:
    ids: tuple[str, ...]
    games: tuple[str, ...]
    teams: tuple[str, ...]
    team_players: tuple[tuple[str, ...], ...]
    game: np.ndarray
    team: np.ndarray
    ptype: np.ndarray
    outcome: np.ndarray
    duration_ms: np.ndarray
    clock_ms: np.ndarray
    offsets: np.ndarray
    t_ms: np.ndarray
    receiver: np.ndarray
    carrier0: np.ndarray
    involved: np.ndarray
    between: np.ndarray
    position_code: np.ndarray  # (n_teams, 64), -1 where no player
    position_mask: np.ndarray  # (n_teams, 5) bitmask of each position's players

    def __len__(self) -> int:
        return len(self.ids)

    def player_index(self, team_id: str, player_id: str) -> tuple[int, int]:
        t = self.teams.index(team_id)
        return t, self.team_players[t].index(player_id)


@dataclass(frozen=True)
class WindowTable:
    poss: np.ndarray
    k: np.ndarray
    clock_ms: np.ndarray
    carrier: np.ndarray
    n_passes: np.ndarray
    graphlet: np.ndarray
    involved: np.ndarray
    between: np.ndarray
    team: np.ndarray
    game: np.ndarray
    ptype: np.ndarray
    outcome: np.ndarray
    window_ms: int

    def __len__(self) -> int:
        return len(self.poss)

    @property
    def clock_s(self) -> np.ndarray:
        return self.clock_ms / 1000.0

    @property
    def flagged(self) -> np.ndarray:
        return self.clock_ms < self.window_ms


def position_hits(masks: np.ndarray, team: np.ndarray, position_mask: np.ndarray, position: Position) -> np.ndarray:
    """Boolean per row: does any player of ``position`` appear in the bitmask."""
    return (masks & position_mask[team, POSITION_CODES[position]]) != 0


def _chain_masks(offsets: np.ndarray, receiver: np.ndarray, carrier0: np.ndarray):
    one = np.int64(1)
    involved = one << carrier0
    between = np.zeros_like(involved)
    sizes = np.diff(offsets)
    nonempty = np.flatnonzero(sizes > 0)
    if len(nonempty):
        bits = one << receiver
        involved[nonempty] |= np.bitwise_or.reduceat(bits, offsets[:-1][nonempty])
        inner = bits.copy()
        inner[offsets[1:][nonempty] - 1] = 0  # last reception of each chain
        between[nonempty] = np.bitwise_or.reduceat(inner, offsets[:-1][nonempty])
    return involved, between


def build_tables(
    possessions: Sequence[Possession],
    rosters: Mapping[str, Sequence[PlayerRef]],
    config: WindowConfig | None = None,
    backend: str | None = None,
) -> tuple[PossessionTable, WindowTable]:
    config = config or WindowConfig()
    teams = tuple(sorted(rosters))
    team_players = tuple(tuple(r.player_id for r in rosters[t]) for t in teams)
    if any(len(p) > _kernels.MAX_PLAYERS for p in team_players):
        raise ValueError(f"rosters are limited to {_kernels.MAX_PLAYERS} players per team")
    team_idx = {t: i for i, t in enumerate(teams)}
    player_idx = [{pid: j for j, pid in enumerate(players)} for players in team_players]
    position_code = np.full((len(teams), 64), -1, dtype=np.int8)
    position_mask = np.zeros((len(teams), len(POSITIONS)), dtype=np.int64)
    for ti, t in enumerate(teams):
        for j, ref in enumerate(rosters[t]):
            c = POSITION_CODES[ref.position]
            position_code[ti, j] = c
            position_mask[ti, c] |= np.int64(1) << j

    games = tuple(sorted({p.game_id for p in possessions}))
    game_idx = {g: i for i, g in enumerate(games)}

    n = len(possessions)
    offsets = np.zeros(n + 1, dtype=np.int64)
    t_ms, receiver = [], []
    carrier0 = np.empty(n, dtype=np.int64)
    for i, p in enumerate(possessions):
        lookup = player_idx[team_idx[p.team_id]]
        carrier0[i] = lookup[p.initial_carrier]
        t_ms.extend(to_ms(e.t) for e in p.passes)
        receiver.extend(lookup[e.receiver] for e in p.passes)
        offsets[i + 1] = offsets[i] + len(p.passes)
    t_ms = np.asarray(t_ms, dtype=np.int64)
    receiver = np.asarray(receiver, dtype=np.int64)
    involved, between = _chain_masks(offsets, receiver, carrier0)

    ptab = PossessionTable(
        ids=tuple(p.possession_id for p in possessions),
        games=games,
        teams=teams,
        team_players=team_players,
        game=np.array([game_idx[p.game_id] for p in possessions], dtype=np.int64),
        team=np.array([team_idx[p.team_id] for p in possessions], dtype=np.int64),
        ptype=np.array([TYPE_CODES[p.possession_type] for p in possessions], dtype=np.int8),
        outcome=np.array([OUTCOME_CODES[p.outcome] for p in possessions], dtype=np.int8),
        duration_ms=np.array([to_ms(p.duration) for p in possessions], dtype=np.int64),
        clock_ms=np.array([to_ms(p.shot_clock_start) for p in possessions], dtype=np.int64),
        offsets=offsets,
        t_ms=t_ms,
        receiver=receiver,
        carrier0=carrier0,
        involved=involved,
        between=between,
        position_code=position_code,
        position_mask=position_mask,
    )

    cen = _kernels.census(
        offsets, t_ms, receiver, carrier0, ptab.duration_ms,
        config.duration_ms, config.step_ms, backend=backend,
    )
    pi = cen["poss"]
    wtab = WindowTable(
        poss=pi,
        k=cen["k"],
        clock_ms=ptab.clock_ms[pi] - cen["k"] * config.step_ms,
        carrier=cen["carrier"],
        n_passes=cen["n_passes"],
        graphlet=cen["graphlet"],
        involved=cen["involved"],
        between=cen["between"],
        team=ptab.team[pi],
        game=ptab.game[pi],
        ptype=ptab.ptype[pi],
        outcome=ptab.outcome[pi],
        window_ms=config.duration_ms,
    )
    return ptab, wtab
