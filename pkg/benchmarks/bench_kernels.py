"""Time the numba and numpy kernel backends on synthetic data.

    python3 benchmarks/bench_kernels.py [--possessions 20000] [--resamples 2000]

Compilation is excluded: each backend gets one warm-up call first.
"""

import argparse
import time

import numpy as np

from temporal_flow import _kernels
from temporal_flow.columnar import build_tables
from temporal_flow.data import PossessionType, filter_and_categorize
from temporal_flow.metrics import Level, Metric, indicator_rows
from temporal_flow.stats import _count_table
from temporal_flow.synthgen import SynthConfig, generate


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--possessions", type=int, default=20000)
    ap.add_argument("--resamples", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    an = filter_and_categorize(generate(SynthConfig(seed=0, n_possessions=args.possessions)))
    ptab, wtab = build_tables(an.possessions, an.rosters)
    values, groups = indicator_rows(ptab, wtab, Level.GRAPHLET, Metric.FC, possession_type=PossessionType.BALL_OUT)
    samples = [values[groups == g] for g in np.unique(groups)]
    counts = _count_table(samples)
    sizes = counts.sum(axis=1).astype(np.int64)
    rng = np.random.default_rng(0)
    draws = np.stack([rng.multinomial(sizes[g], counts[g] / sizes[g], size=args.resamples)
                      for g in range(len(sizes))], axis=1)
    print(f"{len(an.possessions)} possessions, {len(wtab)} windows, KW bootstrap {draws.shape}")

    results = {}
    for backend in backends:
        census = lambda: _kernels.census(  # noqa: E731
            ptab.offsets, ptab.t_ms, ptab.receiver, ptab.carrier0, ptab.duration_ms,
            wtab.window_ms, 500, backend=backend,
        )
        kw = lambda: _kernels.kw_from_counts(draws, backend=backend)  # noqa: E731
        census()
        kw()
        results[backend] = (best_of(census, args.repeats), best_of(kw, args.repeats))
        print(f"{backend:>6}: census {results[backend][0] * 1e3:8.2f} ms   kw bootstrap {results[backend][1] * 1e3:8.2f} ms")
    if len(results) == 2:
        (c0, k0), (c1, k1) = results["numpy"], results["numba"]
        print(f"speed-up: census x{c0 / c1:.1f}, kw bootstrap x{k0 / k1:.1f}")


if __name__ == "__main__":
    main()
