from __future__ import annotations

import pytest

from temporal_flow.data import (
    Outcome,
    PassEvent,
    PlayerRef,
    Position,
    Possession,
    StartBall,
    StartHalf,
)
from temporal_flow.synthgen import SynthConfig, generate, write_dataset

TEAM = "A"
# one player per position plus a second guard
ROSTER = {
    TEAM: (
        PlayerRef("pg", TEAM, Position.PG),
        PlayerRef("sg", TEAM, Position.SG),
        PlayerRef("sf", TEAM, Position.SF),
        PlayerRef("pf", TEAM, Position.PF),
        PlayerRef("c", TEAM, Position.C),
        PlayerRef("pg2", TEAM, Position.PG),
    )
}
POSITIONS_OF = {(r.team_id, r.player_id): r.position for r in ROSTER[TEAM]}


def make_possession(
    chain=("pg",), times=(), duration=10.0, pid="P1", game="G1", clock=24.0,
    ball=StartBall.INSIDE, half=StartHalf.DEFENSIVE, outcome=Outcome.POSITIVE, team=TEAM,
) -> Possession:
    """Possession from a node chain: chain[0] carries, chain[i] receives pass i."""
    assert len(times) == len(chain) - 1
    passes = tuple(PassEvent(t, a, b) for t, a, b in zip(times, chain[:-1], chain[1:]))
    code = {Outcome.POSITIVE: "made_2pt", Outcome.NEGATIVE: "turnover", Outcome.NEUTRAL: "period_end"}[outcome]
    return Possession(pid, game, team, duration, clock, half, ball, chain[0], code, outcome, passes)


@pytest.fixture
def roster():
    return ROSTER


@pytest.fixture(scope="session")
def synth_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    ds = generate(SynthConfig(seed=11, n_possessions=600))
    events, roster = write_dataset(ds, out)
    return ds, events, roster


# -- acceptance reporting -------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


class Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title

    def check(self, ok: bool, detail: str = "") -> None:
        line = f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}: {self.title}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    def skip(self, reason: str) -> None:
        line = f"criterion {self.number:>2} SKIP: {self.title} ({reason})"
        ACCEPTANCE_LINES.append(line)
        pytest.skip(reason)


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
