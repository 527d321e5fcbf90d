"""Domain types, CSV ingestion, validation, outcome mapping and filtering."""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError, Issue, MappingError, RosterError, SchemaError

logger = logging.getLogger(__name__)

__all__ = [
    "Position",
    "Outcome",
    "StartHalf",
    "StartBall",
    "PossessionType",
    "PlayerRef",
    "PassEvent",
    "Possession",
    "Dataset",
    "AnalysisSet",
    "EVENT_COLUMNS",
    "ROSTER_COLUMNS",
    "load_outcome_map",
    "classify_outcome",
    "snap_shot_clock",
    "validate_possession",
    "parse_dataset",
    "read_roster",
    "filter_and_categorize",
    "write_events_csv",
    "write_roster_csv",
]


class Position(str, Enum):
    PG = "PG"
    SG = "SG"
    SF = "SF"
    PF = "PF"
    C = "C"


POSITIONS: tuple[Position, ...] = tuple(Position)


class Outcome(str, Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"
    NEUTRAL = "Neutral"


class StartHalf(str, Enum):
    DEFENSIVE = "DEF"
    OFFENSIVE = "OFF"


class StartBall(str, Enum):
    INSIDE = "IN"
    OFFSIDE = "OUT"


class PossessionType(str, Enum):
    BALL_IN = "BallIn"
    BALL_OUT = "BallOut"


EVENT_COLUMNS = (
    "row_type",
    "game_id",
    "possession_id",
    "team_id",
    "duration_s",
    "shot_clock_start_s",
    "start_half",
    "start_ball",
    "initial_carrier",
    "outcome_raw",
    "pass_t_s",
    "passer",
    "receiver",
)
ROSTER_COLUMNS = ("team_id", "player_id", "position")

SHOT_CLOCK_MAX = 24.0
SHOT_CLOCK_GRID = 0.5


@dataclass(frozen=True)
class PlayerRef:
    player_id: str
    team_id: str
    position: Position


@dataclass(frozen=True)
class PassEvent:
    t: float
    passer: str
    receiver: str


@dataclass(frozen=True)
class Possession:
    """One annotated possession. Pass times are offsets from its start."""

    possession_id: str
    game_id: str
    team_id: str
    duration: float
    shot_clock_start: float
    start_half: StartHalf
    start_ball: StartBall
    initial_carrier: str
    outcome_raw: str
    outcome: Outcome
    passes: tuple[PassEvent, ...] = ()

    @property
    def possession_type(self) -> PossessionType:
        if self.start_ball is StartBall.INSIDE:
            return PossessionType.BALL_IN
        return PossessionType.BALL_OUT

    @property
    def category(self) -> tuple[StartHalf, StartBall]:
        return (self.start_half, self.start_ball)

    def node_sequence(self) -> list[str]:
        return [self.initial_carrier] + [p.receiver for p in self.passes]


@dataclass(frozen=True)
class Dataset:
    possessions: tuple[Possession, ...]
    rosters: Mapping[str, tuple[PlayerRef, ...]]
    provenance: Mapping = field(default_factory=dict)

    @cached_property
    def positions(self) -> dict[tuple[str, str], Position]:
        """(team_id, player_id) -> position lookup."""
        return {
            (ref.team_id, ref.player_id): ref.position
            for refs in self.rosters.values()
            for ref in refs
        }

    def position_of(self, team_id: str, player_id: str) -> Position:
        return self.positions[(team_id, player_id)]

    @property
    def n_passes(self) -> int:
        return sum(len(p.passes) for p in self.possessions)


# -- outcome mapping ---------------------------------------------------------


def load_outcome_map(path: str | Path | None = None) -> dict[str, Outcome]:
    """Read a ``code,outcome`` CSV. ``None`` loads the shipped default."""
    if path is None:
        text = resources.files(__package__).joinpath("outcome_map.csv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or not {"code", "outcome"} <= set(reader.fieldnames):
        raise MappingError("outcome map needs columns 'code' and 'outcome'")
    mapping: dict[str, Outcome] = {}
    for row in reader:
        code = row["code"].strip()
        try:
            mapping[code] = Outcome(row["outcome"].strip())
        except ValueError:
            raise MappingError(f"unknown outcome class {row['outcome']!r} for code {code!r}") from None
    return mapping


_DEFAULT_MAP: dict[str, Outcome] | None = None


def classify_outcome(outcome_raw: str, mapping: Mapping[str, Outcome] | None = None) -> Outcome:
    global _DEFAULT_MAP
    if mapping is None:
        if _DEFAULT_MAP is None:
            _DEFAULT_MAP = load_outcome_map()
        mapping = _DEFAULT_MAP
    try:
        return mapping[outcome_raw]
    except KeyError:
        raise MappingError(f"unknown outcome code {outcome_raw!r}") from None


# -- validation --------------------------------------------------------------


def snap_shot_clock(value: float) -> tuple[float, float]:
    """Snap to the 0.5 s grid (halves round up). Returns (snapped, adjustment)."""
    snapped = math.floor(value / SHOT_CLOCK_GRID + 0.5) * SHOT_CLOCK_GRID
    return snapped, snapped - value


def validate_possession(
    poss: Possession, positions: Mapping[tuple[str, str], Position] | None = None
) -> list[Issue]:
    """Check every possession-level invariant; returns the violations found."""
    issues: list[Issue] = []
    pid = poss.possession_id

    def bad(msg: str, kind: str = "data") -> None:
        issues.append(Issue(kind, msg, possession_id=pid))

    if not poss.duration >= 0:
        bad(f"negative duration {poss.duration}")
    m = poss.shot_clock_start / SHOT_CLOCK_GRID
    if not (abs(m - round(m)) < 1e-9 and 1 <= round(m) <= 48):
        bad(f"shot_clock_start {poss.shot_clock_start} not on the 0.5 s grid in [0.5, 24]")
    holder = poss.initial_carrier
    last_t = -math.inf
    for i, p in enumerate(poss.passes):
        if p.passer == p.receiver:
            bad(f"pass {i}: passer equals receiver ({p.passer})")
        if p.passer != holder:
            bad(f"pass {i}: chain broken, passer {p.passer} but ball was with {holder}")
        if not 0 <= p.t <= poss.duration:
            bad(f"pass {i}: time {p.t} outside [0, {poss.duration}]")
        if p.t <= last_t:
            bad(f"pass {i}: time {p.t} not strictly after {last_t}")
        last_t = p.t
        holder = p.receiver
    if positions is not None:
        players = {poss.initial_carrier}
        for p in poss.passes:
            players.update((p.passer, p.receiver))
        for player in sorted(players):
            if (poss.team_id, player) not in positions:
                bad(f"player {player} not in roster of team {poss.team_id}", kind="roster")
    return issues


# -- ingestion ---------------------------------------------------------------


def _open_csv(path: str | Path, required: Sequence[str]) -> tuple[list[dict], Path]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: missing header row")
        header = [h.strip() for h in reader.fieldnames]
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        reader.fieldnames = header
        rows = [{k: (v or "").strip() for k, v in row.items() if k is not None} for row in reader]
    return rows, path


def read_roster(roster_file: str | Path) -> dict[str, tuple[PlayerRef, ...]]:
    rows, path = _open_csv(roster_file, ROSTER_COLUMNS)
    teams: dict[str, list[PlayerRef]] = {}
    seen: set[tuple[str, str]] = set()
    issues = []
    for rownum, row in enumerate(rows, start=2):
        key = (row["team_id"], row["player_id"])
        if not all(key):
            issues.append(Issue("roster", "empty team_id or player_id", row=rownum))
            continue
        if key in seen:
            issues.append(Issue("roster", f"duplicate player {key[1]} in team {key[0]}", row=rownum))
            continue
        try:
            position = Position(row["position"])
        except ValueError:
            issues.append(Issue("roster", f"unknown position {row['position']!r}", row=rownum))
            continue
        seen.add(key)
        teams.setdefault(key[0], []).append(PlayerRef(key[1], key[0], position))
    if issues:
        raise RosterError(f"{path}: {len(issues)} invalid roster row(s)", issues)
    return {team: tuple(refs) for team, refs in teams.items()}


def _float(value: str, name: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ValueError(f"{name} is not a number: {value!r}") from None
    if not math.isfinite(x):
        raise ValueError(f"{name} is not finite: {value!r}")
    return round(x, 3)


def parse_dataset(
    events_file: str | Path,
    roster_file: str | Path,
    outcome_map: Mapping[str, Outcome] | None = None,
    strict: bool = True,
) -> Dataset:
    """Read ``events.csv`` + ``roster.csv`` into a validated :class:`Dataset`.

    Invalid possessions are rejected as a whole and every violation is kept
    with its row number in ``provenance["issues"]``. With ``strict=True`` any
    violation raises :class:`DataError` (or :class:`RosterError` when all of
    them concern unknown players) instead.
    """
    rosters = read_roster(roster_file)
    positions = {(r.team_id, r.player_id): r.position for refs in rosters.values() for r in refs}
    mapping = load_outcome_map() if outcome_map is None else outcome_map
    rows, path = _open_csv(events_file, EVENT_COLUMNS)

    issues: list[Issue] = []
    warnings: list[Issue] = []
    headers: dict[str, tuple[int, dict]] = {}
    pass_rows: dict[str, list[tuple[int, dict]]] = {}
    order: list[str] = []
    bad_ids: set[str] = set()

    for rownum, row in enumerate(rows, start=2):
        pid = row["possession_id"]
        kind = row["row_type"].upper()
        if not pid:
            issues.append(Issue("data", "empty possession_id", row=rownum))
            continue
        if kind == "POSS":
            if pid in headers:
                issues.append(Issue("data", "duplicate possession header", rownum, pid))
                bad_ids.add(pid)
                continue
            headers[pid] = (rownum, row)
            order.append(pid)
        elif kind == "PASS":
            pass_rows.setdefault(pid, []).append((rownum, row))
        else:
            issues.append(Issue("data", f"unknown row_type {row['row_type']!r}", rownum, pid))

    for pid in pass_rows:
        if pid not in headers:
            rownum = pass_rows[pid][0][0]
            issues.append(Issue("data", "pass rows without a POSS header", rownum, pid))

    possessions: list[Possession] = []
    for pid in order:
        if pid in bad_ids:
            continue
        rownum, h = headers[pid]
        local: list[Issue] = []
        try:
            duration = _float(h["duration_s"], "duration_s")
            raw_clock = _float(h["shot_clock_start_s"], "shot_clock_start_s")
            half = StartHalf(h["start_half"].upper())
            ball = StartBall(h["start_ball"].upper())
        except ValueError as exc:
            issues.append(Issue("data", str(exc), rownum, pid))
            continue
        clock, adjust = snap_shot_clock(raw_clock)
        if abs(adjust) >= 0.25 - 1e-9:
            warnings.append(
                Issue("data", f"shot clock {raw_clock} snapped to {clock}", rownum, pid)
            )
        if h["outcome_raw"] in mapping:
            outcome = mapping[h["outcome_raw"]]
        else:
            local.append(Issue("mapping", f"unknown outcome code {h['outcome_raw']!r}", rownum, pid))
            outcome = Outcome.NEUTRAL
        passes = []
        for prow, p in pass_rows.get(pid, []):
            if p["game_id"] and p["game_id"] != h["game_id"]:
                local.append(Issue("data", "pass game_id differs from its possession", prow, pid))
            try:
                passes.append(PassEvent(_float(p["pass_t_s"], "pass_t_s"), p["passer"], p["receiver"]))
            except ValueError as exc:
                local.append(Issue("data", str(exc), prow, pid))
        poss = Possession(
            possession_id=pid,
            game_id=h["game_id"],
            team_id=h["team_id"],
            duration=duration,
            shot_clock_start=clock,
            start_half=half,
            start_ball=ball,
            initial_carrier=h["initial_carrier"],
            outcome_raw=h["outcome_raw"],
            outcome=outcome,
            passes=tuple(passes),
        )
        prow_of = [r for r, _ in pass_rows.get(pid, [])]
        for issue in validate_possession(poss, positions):
            # attach the offending pass row where the message names one
            row = rownum
            if issue.message.startswith("pass ") and prow_of:
                idx = int(issue.message.split()[1].rstrip(":"))
                if idx < len(prow_of):
                    row = prow_of[idx]
            local.append(Issue(issue.kind, issue.message, row, pid))
        if local:
            issues.extend(local)
            continue
        possessions.append(poss)

    rejected = {pid for pid in order if pid in bad_ids} | {
        i.possession_id for i in issues if i.possession_id in headers
    }
    provenance = {
        "events_file": str(path),
        "roster_file": str(roster_file),
        "possessions_in": len(order),
        "possessions_parsed": len(possessions),
        "possessions_rejected": len(rejected),
        "orphan_pass_rows": sum(len(v) for k, v in pass_rows.items() if k not in headers),
        "issues": [i.to_dict() for i in issues],
        "warnings": [w.to_dict() for w in warnings],
    }
    for w in warnings:
        logger.warning("row %s (%s): %s", w.row, w.possession_id, w.message)
    if strict and issues:
        cls = RosterError if all(i.kind == "roster" for i in issues) else DataError
        raise cls(f"{path}: {len(issues)} validation issue(s)", issues)
    return Dataset(tuple(possessions), rosters, provenance)


# -- filtering ---------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisSet:
    """Possessions retained for analysis, tagged by possession type.

    ``retained`` holds every possession at least ``min_duration`` long;
    ``possessions`` is the analysis subset (defensive-half starts unless
    offensive ones were explicitly requested).
    """

    possessions: tuple[Possession, ...]
    retained: tuple[Possession, ...]
    rosters: Mapping[str, tuple[PlayerRef, ...]]
    category_counts: Mapping[tuple[StartHalf, StartBall], int]
    log: Mapping
    min_duration: float = 6.0

    def of_type(self, ptype: PossessionType) -> tuple[Possession, ...]:
        return tuple(p for p in self.possessions if p.possession_type is ptype)

    def to_dataset(self) -> Dataset:
        return Dataset(self.possessions, self.rosters, {"derived_from": "analysis_set"})

    @cached_property
    def positions(self) -> dict[tuple[str, str], Position]:
        return {(r.team_id, r.player_id): r.position for refs in self.rosters.values() for r in refs}


def filter_and_categorize(
    dataset: Dataset, min_duration: float = 6.0, include_offensive: bool = False
) -> AnalysisSet:
    possessions = dataset.possessions
    retained = tuple(p for p in possessions if p.duration >= min_duration - 1e-9)
    counts = Counter(p.category for p in retained)
    category_counts = {
        (h, b): counts.get((h, b), 0) for h in StartHalf for b in StartBall
    }
    if include_offensive:
        analysis = retained
    else:
        analysis = tuple(p for p in retained if p.start_half is StartHalf.DEFENSIVE)
    n_in = len(possessions)
    passes_in = sum(len(p.passes) for p in possessions)
    passes_kept = sum(len(p.passes) for p in retained)
    log = {
        "possessions_in": n_in,
        "passes_in": passes_in,
        "excluded_short": n_in - len(retained),
        "excluded_short_pct": 100.0 * (n_in - len(retained)) / n_in if n_in else 0.0,
        "retained": len(retained),
        "passes_retained": passes_kept,
        "excluded_passes_pct": 100.0 * (passes_in - passes_kept) / passes_in if passes_in else 0.0,
        "categories": {f"{h.value}-{b.value}": c for (h, b), c in category_counts.items()},
        "excluded_category": len(retained) - len(analysis),
        "excluded_category_pct": (
            100.0 * (len(retained) - len(analysis)) / len(retained) if retained else 0.0
        ),
        "analysis_set": len(analysis),
        "analysis_by_type": {
            t.value: sum(1 for p in analysis if p.possession_type is t) for t in PossessionType
        },
    }
    return AnalysisSet(analysis, retained, dataset.rosters, category_counts, log, min_duration)


# -- writers (shared with the synthetic generator) ----------------------------


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".") if x != int(x) else f"{int(x)}"


def write_events_csv(possessions: Iterable[Possession], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for p in possessions:
            w.writerow(
                [
                    "POSS", p.game_id, p.possession_id, p.team_id, _fmt(p.duration),
                    _fmt(p.shot_clock_start), p.start_half.value, p.start_ball.value,
                    p.initial_carrier, p.outcome_raw, "", "", "",
                ]
            )
            for e in p.passes:
                w.writerow(
                    ["PASS", p.game_id, p.possession_id, p.team_id, "", "", "", "", "", "",
                     _fmt(e.t), e.passer, e.receiver]
                )


def write_roster_csv(rosters: Mapping[str, Sequence[PlayerRef]], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROSTER_COLUMNS)
        for team in sorted(rosters):
            for ref in rosters[team]:
                w.writerow([ref.team_id, ref.player_id, ref.position.value])
