import numpy as np
import pytest

from temporal_flow import _kernels
from temporal_flow.columnar import build_tables
from temporal_flow.data import filter_and_categorize
from temporal_flow.graphlets import classify
from temporal_flow.stats import _count_table
from temporal_flow.synthgen import SynthConfig, generate
from temporal_flow.windowing import build_windows

BACKENDS = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])


@pytest.fixture(scope="module")
def analysis():
    return filter_and_categorize(generate(SynthConfig(seed=21, n_possessions=400, pass_rates=(0.4, 0.7, 0.4))))


@pytest.mark.parametrize("backend", BACKENDS)
def test_census_matches_object_path(analysis, backend):
    ptab, wtab = build_tables(analysis.possessions, analysis.rosters, backend=backend)
    expected = [
        (i, s.k, classify(s).code, s.pass_count)
        for i, p in enumerate(analysis.possessions)
        for s in build_windows(p).snapshots
    ]
    got = list(zip(wtab.poss.tolist(), wtab.k.tolist(), wtab.graphlet.tolist(), wtab.n_passes.tolist()))
    assert got == expected


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_backends_agree(analysis):
    a = build_tables(analysis.possessions, analysis.rosters, backend="numpy")[1]
    b = build_tables(analysis.possessions, analysis.rosters, backend="numba")[1]
    for f in ("poss", "k", "carrier", "n_passes", "graphlet", "involved", "between", "clock_ms"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
    rng = np.random.default_rng(1)
    counts = rng.integers(0, 9, size=(50, 4, 3)).astype(float)
    counts[:, :, 0] += 1
    np.testing.assert_allclose(
        _kernels.kw_from_counts(counts, backend="numpy"), _kernels.kw_from_counts(counts, backend="numba"),
        rtol=1e-12, atol=1e-12,
    )


def test_window_counts_do_not_grow_as_clock_falls(analysis):
    _, wtab = build_tables(analysis.possessions, analysis.rosters)
    for code in (0, 1):
        clocks = wtab.clock_ms[wtab.ptype == code]
        per = [int((clocks == c).sum()) for c in np.unique(clocks)[::-1]]
        # only possessions starting from the full shot clock are in this set
        assert all(a >= b for a, b in zip(per, per[1:]))


def test_kw_kernel_on_count_table():
    from scipy import stats as sps

    groups = [[0, 1, 1, 2], [2, 2, 3], [0, 0, 1, 3, 3]]
    counts = _count_table(groups)[None]
    for backend in BACKENDS:
        assert _kernels.kw_from_counts(counts, backend=backend)[0] == pytest.approx(sps.kruskal(*groups).statistic)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.census(np.zeros(1, np.int64), np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0),
                        6000, 500, backend="gpu")


def test_env_flag_selects_numpy():
    import os
    import subprocess
    import sys

    env = dict(os.environ, TEMPORAL_FLOW_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", "from temporal_flow import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
