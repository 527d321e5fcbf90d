"""Dataset-level analyses built on the columnar tables: shot-clock profiles,
entropy curves, the profile scan, outcome association tests and the
between-position Kruskal-Wallis comparisons."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .columnar import OUTCOME_CODES, TYPE_CODES, PossessionTable, WindowTable, position_hits
from .errors import ChiSquareError
from .data import POSITIONS, Outcome, Position, PossessionType
from .graphlets import GRAPHLET_ORDER, GraphletProfile, entropy_bits
from .metrics import Level, Metric, indicator_rows
from .stats import (
    ScanStep,
    TestResult,
    chi2_independence,
    eta_squared_h,
    kruskal_wallis,
    odds_ratio,
    sequential_profile_scan,
)

__all__ = [
    "shot_clock_profiles",
    "individual_shot_clock_profiles",
    "entropy_curve",
    "scan_possession_type",
    "phase_boundaries",
    "outcome_by_type_test",
    "outcome_association_suite",
    "position_difference_test",
]

N_CLASSES = len(GRAPHLET_ORDER)
POS, NEG = OUTCOME_CODES[Outcome.POSITIVE], OUTCOME_CODES[Outcome.NEGATIVE]


def _clock_counts(clock_ms: np.ndarray, graphlet: np.ndarray) -> dict[float, np.ndarray]:
    out = {}
    for c in np.unique(clock_ms)[::-1]:
        out[c / 1000.0] = np.bincount(graphlet[clock_ms == c], minlength=N_CLASSES)
    return out


def shot_clock_profiles(wtab: WindowTable, possession_type: PossessionType) -> list[GraphletProfile]:
    """One profile per window-start shot-clock value, descending."""
    sel = wtab.ptype == TYPE_CODES[possession_type]
    counts = _clock_counts(wtab.clock_ms[sel], wtab.graphlet[sel])
    return [
        GraphletProfile((possession_type.value, clock), tuple(int(x) for x in c))
        for clock, c in counts.items()
    ]


def individual_shot_clock_profiles(
    ptab: PossessionTable, wtab: WindowTable, position: Position, possession_type: PossessionType
) -> list[GraphletProfile]:
    """Profiles over the windows a position takes part in, for every shot-clock
    value of the possession type (empty where it never does)."""
    sel = wtab.ptype == TYPE_CODES[possession_type]
    hit = position_hits(wtab.involved[sel], wtab.team[sel], ptab.position_mask, position)
    clocks = wtab.clock_ms[sel]
    graphlet = wtab.graphlet[sel]
    out = []
    for c in np.unique(clocks)[::-1]:
        at = (clocks == c) & hit
        counts = np.bincount(graphlet[at], minlength=N_CLASSES)
        out.append(
            GraphletProfile((possession_type.value, c / 1000.0, position.value), tuple(int(x) for x in counts))
        )
    return out


def entropy_curve(profiles: Iterable[GraphletProfile]) -> list[tuple[tuple, float | None, int]]:
    """(key, entropy in bits or None when empty, n_windows) per profile."""
    return [(p.key, entropy_bits(p.counts) if p.total else None, p.total) for p in profiles]


def scan_possession_type(
    wtab: WindowTable, possession_type: PossessionType, alpha: float = 0.05, holm: bool = False
) -> list[ScanStep]:
    profiles = {p.key[1]: p.counts for p in shot_clock_profiles(wtab, possession_type) if p.total}
    return sequential_profile_scan(profiles, alpha=alpha, holm=holm)


def phase_boundaries(steps: Sequence[ScanStep], max_gap: float = 2.0) -> tuple[float | None, float | None]:
    """Read the scan as (last value of the evolving phase, first value of the final phase).

    The evolving phase is the run of highest shot-clock values whose first
    different profile lies at most ``max_gap`` seconds later. The final phase
    starts at the highest value from which no later profile differs.
    """
    ordered = sorted(steps, key=lambda s: -s.shot_clock)
    evolving_end = None
    for s in ordered:
        if s.first_different is None or s.shot_clock - s.first_different > max_gap + 1e-9:
            break
        evolving_end = float(s.shot_clock)
    final_start = None
    for s in reversed(ordered):
        if s.first_different is not None:
            break
        final_start = float(s.shot_clock)
    return evolving_end, final_start


def outcome_by_type_test(ptab: PossessionTable, correction: bool = True) -> TestResult:
    """Possession type x outcome (positive/negative) independence."""
    rows = []
    for code in (TYPE_CODES[PossessionType.BALL_IN], TYPE_CODES[PossessionType.BALL_OUT]):
        sel = ptab.ptype == code
        rows.append([int((ptab.outcome[sel] == POS).sum()), int((ptab.outcome[sel] == NEG).sum())])
    return chi2_independence(rows, correction=correction).with_scope(
        test="outcome_by_type", rows="BallIn,BallOut", cols="Positive,Negative"
    )


def _two_by_two(hits: np.ndarray, outcome: np.ndarray) -> list[list[int]]:
    # rows: involved / not involved; columns: negative / positive
    neg, pos = outcome == NEG, outcome == POS
    return [
        [int((hits & neg).sum()), int((hits & pos).sum())],
        [int((~hits & neg).sum()), int((~hits & pos).sum())],
    ]


def outcome_association_suite(
    ptab: PossessionTable, wtab: WindowTable, level: Level | str, correction: bool = True,
    possession_types: Iterable[PossessionType] = tuple(PossessionType),
) -> list[TestResult]:
    """Chi-square and odds ratio per position x possession type x metric.

    Units are possessions (play level) or windows (graphlet level); neutral
    outcomes are left out. The odds ratio compares the odds of the position
    being involved in negative versus positive units, so OR > 1 means less
    involvement in successful possessions.
    """
    level = Level(level)
    table = ptab if level is Level.PLAY else wtab
    out = []
    for ptype in possession_types:
        sel = (table.ptype == TYPE_CODES[ptype]) & (table.outcome != OUTCOME_CODES[Outcome.NEUTRAL])
        for metric in Metric:
            masks = (table.involved if metric is Metric.FC else table.between)[sel]
            for pos in POSITIONS:
                hits = position_hits(masks, table.team[sel], ptab.position_mask, pos)
                t = _two_by_two(hits, table.outcome[sel])
                scope = dict(position=pos.value, possession_type=ptype.value, metric=metric.value, level=level.value)
                try:
                    chi = chi2_independence(t, correction=correction)
                except ChiSquareError as exc:  # degenerate table, e.g. position never involved
                    chi = TestResult("chi2", float("nan"), float("nan"), int(np.sum(t)), df=1, flags=(f"undefined: {exc}",))
                out.append(chi.with_scope(**scope))
                out.append(odds_ratio(t).with_scope(**scope))
    return out


def position_difference_test(
    ptab: PossessionTable, wtab: WindowTable, level: Level | str, metric: Metric | str,
    possession_type: PossessionType, unit: str = "player", resamples: int = 2000, seed: int = 0,
) -> TestResult:
    """Kruskal-Wallis across positions on 0/1 indicators, with eta^2(H) and
    its bootstrap interval as the effect."""
    level, metric = Level(level), Metric(metric)
    values, groups = indicator_rows(ptab, wtab, level, metric, unit=unit, possession_type=possession_type)
    present = [c for c in range(len(POSITIONS)) if np.any(groups == c)]
    samples = [values[groups == c] for c in present]
    kw = kruskal_wallis(samples)
    eta, ci = eta_squared_h(kw.statistic, len(samples), kw.n, samples, resamples=resamples, seed=seed)
    return TestResult(
        "kw", kw.statistic, kw.p_value, kw.n, df=kw.df, effect=eta, ci95=ci,
        flags=kw.flags + (f"unit={unit}", f"seed={seed}", f"resamples={resamples}"),
        scope=dict(level=level.value, metric=metric.value, possession_type=possession_type.value,
                   groups=",".join(POSITIONS[c].value for c in present)),
    )
