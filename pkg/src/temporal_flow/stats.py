"""Statistical procedures: chi-square independence, the sequential shot-clock
profile scan, Kruskal-Wallis with tie correction, eta-squared(H) with a
stratified bootstrap interval, odds ratios and proportion intervals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import special

from . import _kernels
from .errors import ChiSquareError, UndefinedMetricError

__all__ = [
    "TestResult",
    "ScanStep",
    "chi2_sf",
    "chi2_independence",
    "sequential_profile_scan",
    "kruskal_wallis",
    "eta_squared_h",
    "odds_ratio",
    "wilson_interval",
    "holm_adjust",
]

Z95 = 1.959963984540054


@dataclass(frozen=True)
class TestResult:
    kind: str  # chi2 | kw | or
    statistic: float
    p_value: float
    n: int
    df: int | None = None
    effect: float | None = None
    ci95: tuple[float, float] | None = None
    flags: tuple[str, ...] = ()
    scope: Mapping = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this class

    def with_scope(self, **scope) -> "TestResult":
        return TestResult(
            self.kind, self.statistic, self.p_value, self.n, self.df,
            self.effect, self.ci95, self.flags, {**self.scope, **scope},
        )


def chi2_sf(statistic: float, df: int) -> float:
    """Upper tail of the chi-square distribution: Q(df/2, x/2)."""
    if statistic <= 0:
        return 1.0
    return float(special.gammaincc(df / 2.0, statistic / 2.0))


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise UndefinedMetricError("proportion interval with n = 0")
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # the bounds are exactly 0 and 1 at the extremes; avoid rounding residue
    lo = 0.0 if successes == 0 else max(0.0, float(centre - half))
    hi = 1.0 if successes == n else min(1.0, float(centre + half))
    return (lo, hi)


def chi2_independence(table, correction: bool = False) -> TestResult:
    """Pearson chi-square test of independence on an r x c count table.

    Columns that are empty in every row are dropped first. ``correction``
    applies Yates' continuity correction to 2 x 2 tables.
    """
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2 or np.any(obs < 0) or not np.all(np.isfinite(obs)):
        raise ChiSquareError("table must be a 2-D array of non-negative counts")
    obs = obs[:, obs.sum(axis=0) > 0]
    if obs.shape[0] < 2 or obs.shape[1] < 2:
        raise ChiSquareError(f"need at least 2 x 2 non-empty cells, got {obs.shape}")
    total = obs.sum()
    expected = np.outer(obs.sum(axis=1), obs.sum(axis=0)) / total
    if np.any(expected == 0):
        raise ChiSquareError("a row of the table is empty (zero expected count)")
    flags = []
    if np.any(expected < 5):
        flags.append("expected<5")
    dev = np.abs(obs - expected)
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    if correction and df == 1:
        dev = dev - np.minimum(0.5, dev)
        flags.append("yates")
    stat = float((dev**2 / expected).sum())
    return TestResult("chi2", stat, chi2_sf(stat, df), int(total), df=df, flags=tuple(flags))


def holm_adjust(p_values: Sequence[float]) -> np.ndarray:
    p = np.asarray(p_values, dtype=float)
    m = len(p)
    if m == 0:
        return p
    order = np.argsort(p, kind="stable")
    adj = np.minimum(1.0, np.maximum.accumulate(p[order] * (m - np.arange(m))))
    out = np.empty(m)
    out[order] = adj
    return out


@dataclass(frozen=True)
class ScanStep:
    shot_clock: float
    first_different: float | None
    statistic: float | None
    p_value: float | None
    n_tests: int


def sequential_profile_scan(
    profiles: Mapping[float, Sequence[int]], alpha: float = 0.05, holm: bool = False
) -> list[ScanStep]:
    """For each shot-clock value, the first later profile that differs.

    ``profiles`` maps shot-clock value -> class counts. Values are scanned in
    descending order; profile ``s`` is compared with ``s - step``,
    ``s - 2 step``, ... by a chi-square test on the 2 x classes table, and the
    first with p < alpha is reported. With ``holm=True`` each value's
    comparisons are treated as one family and Holm-adjusted first.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    clocks = sorted(profiles, reverse=True)
    out = []
    for i, s in enumerate(clocks):
        later = clocks[i + 1:]
        if holm:
            tests = [_pair_test(profiles, s, t) for t in later]
            adj = holm_adjust([r.p_value for r in tests])
            hit = next((j for j, p in enumerate(adj) if p < alpha), None)
            if hit is None:
                out.append(ScanStep(s, None, None, None, len(tests)))
            else:
                r = tests[hit]
                out.append(ScanStep(s, later[hit], r.statistic, float(adj[hit]), len(tests)))
            continue
        step = ScanStep(s, None, None, None, 0)
        for j, t in enumerate(later):
            r = _pair_test(profiles, s, t)
            if r.p_value < alpha:
                step = ScanStep(s, t, r.statistic, r.p_value, j + 1)
                break
        else:
            step = ScanStep(s, None, None, None, len(later))
        out.append(step)
    return out


def _pair_test(profiles, s, t) -> TestResult:
    try:
        return chi2_independence([profiles[s], profiles[t]])
    except ChiSquareError as exc:
        raise ChiSquareError(f"profiles {s} vs {t}: {exc}") from exc


def _count_table(groups: Sequence[Sequence[float]]):
    values = [np.asarray(g, dtype=float).ravel() for g in groups]
    allv = np.concatenate(values)
    uniq = np.unique(allv)
    counts = np.zeros((len(values), len(uniq)))
    for i, v in enumerate(values):
        idx = np.searchsorted(uniq, v)
        counts[i] = np.bincount(idx, minlength=len(uniq))
    return counts


def kruskal_wallis(groups: Sequence[Sequence[float]], backend: str | None = None) -> TestResult:
    """Kruskal-Wallis H with the tie correction; p from chi-square(k - 1)."""
    if len(groups) < 2:
        raise ValueError("Kruskal-Wallis needs at least two groups")
    if any(len(g) == 0 for g in groups):
        raise ValueError("every group must be non-empty")
    counts = _count_table(groups)
    h = float(_kernels.kw_from_counts(counts, backend=backend)[0])
    k = len(groups)
    n = int(counts.sum())
    flags = ("tie-corrected",)
    return TestResult("kw", h, chi2_sf(h, k - 1), n, df=k - 1, flags=flags)


def eta_squared_h(
    h: float, k: int, n: int, groups: Sequence[Sequence[float]] | None = None,
    resamples: int = 2000, seed: int = 0, backend: str | None = None,
) -> tuple[float, tuple[float, float] | None]:
    """eta^2(H) = (H - k + 1) / (n - k), clamped to [0, 1].

    With ``groups`` a percentile bootstrap interval is added. Each group is
    resampled with replacement at its own size, which for the statistic is
    the same as drawing the group's value counts from a multinomial.
    """
    if n <= k:
        raise UndefinedMetricError(f"eta squared needs n > k (n={n}, k={k})")
    point = float(np.clip((h - k + 1) / (n - k), 0.0, 1.0))
    if groups is None:
        return point, None
    counts = _count_table(groups)
    sizes = counts.sum(axis=1).astype(np.int64)
    probs = counts / sizes[:, None]
    rng = np.random.default_rng(seed)
    boot = np.empty(resamples)
    chunk = 500
    for start in range(0, resamples, chunk):
        b = min(chunk, resamples - start)
        draws = np.stack([rng.multinomial(sizes[g], probs[g], size=b) for g in range(len(sizes))], axis=1)
        hb = _kernels.kw_from_counts(draws, backend=backend)
        boot[start:start + b] = np.clip((hb - k + 1) / (n - k), 0.0, 1.0)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return point, (float(lo), float(hi))


def odds_ratio(table) -> TestResult:
    """Odds ratio ad/bc of a 2 x 2 table with a 95% Wald interval on log OR.

    A zero cell triggers the Haldane-Anscombe correction (0.5 added to all
    cells), recorded in ``flags``.
    """
    t = np.asarray(table, dtype=float)
    if t.shape != (2, 2) or np.any(t < 0):
        raise ValueError("odds ratio needs a 2 x 2 table of non-negative counts")
    n = int(t.sum())
    flags = ()
    if np.any(t == 0):
        t = t + 0.5
        flags = ("haldane",)
    (a, b), (c, d) = t
    log_or = np.log(a) + np.log(d) - np.log(b) - np.log(c)
    se = np.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
    z = abs(log_or) / se
    p = float(special.erfc(z / np.sqrt(2.0)))
    ci = (float(np.exp(log_or - 1.96 * se)), float(np.exp(log_or + 1.96 * se)))
    or_ = float(np.exp(log_or))
    return TestResult("or", or_, p, n, effect=or_, ci95=ci, flags=flags)
