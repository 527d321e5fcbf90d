"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Two loops dominate a full run: the window census (every sliding window of
every possession, classified and reduced to player bitmasks) and the
Kruskal-Wallis statistic evaluated on thousands of bootstrap count tables.

The backend is chosen once at import. Set ``TEMPORAL_FLOW_NUMBA=0`` to force
the numpy path; it is also used automatically when numba is not installed.
Both paths return identical integers for the census and agree to floating
point round-off for the KW statistic.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

ENV_FLAG = "TEMPORAL_FLOW_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(ENV_FLAG, "1").strip().lower() not in {"0", "false", "no", "off"}


BACKEND = "numba" if HAVE_NUMBA and _numba_requested() else "numpy"

if HAVE_NUMBA:
    njit = numba.njit(cache=True)
else:  # pragma: no cover

    def njit(fn):
        return fn

# graphlet codes, in the order of data.graphlets.GRAPHLET_ORDER
G1, G12, G121, G123, G1212, G1213, G1231, G1232, G1234, OTHER = range(10)
MAX_PLAYERS = 63


def _resolve(backend: str | None) -> str:
    backend = BACKEND if backend is None else backend
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


# -- window census ------------------------------------------------------------


@njit
def _graphlet_code(n, s0, s1, s2, s3):
    if n == 0:
        return G1
    if n == 1:
        return G12
    if n == 2:
        return G121 if s2 == s0 else G123
    if n == 3:
        if s2 == s0:
            return G1212 if s3 == s1 else G1213
        if s3 == s0:
            return G1231
        if s3 == s1:
            return G1232
        return G1234
    return OTHER


@njit
def _census_loop(offsets, t_ms, receiver, carrier0, n_windows, step_ms, window_ms,
                 out_carrier, out_n, out_code, out_inv, out_btw):
    w = 0
    one = np.int64(1)
    for p in range(carrier0.shape[0]):
        first = offsets[p]
        last = offsets[p + 1]
        lo = first
        hi = first
        for k in range(n_windows[p]):
            ts = k * step_ms
            te = ts + window_ms
            while lo < last and t_ms[lo] < ts:
                lo += 1
            if hi < lo:
                hi = lo
            while hi < last and t_ms[hi] < te:
                hi += 1
            c = receiver[lo - 1] if lo > first else carrier0[p]
            n = hi - lo
            inv = one << c
            btw = np.int64(0)
            for j in range(lo, hi):
                inv |= one << receiver[j]
                if j < hi - 1:
                    btw |= one << receiver[j]
            s1 = receiver[lo] if n > 0 else -1
            s2 = receiver[lo + 1] if n > 1 else -1
            s3 = receiver[lo + 2] if n > 2 else -1
            out_carrier[w] = c
            out_n[w] = n
            out_code[w] = _graphlet_code(n, c, s1, s2, s3)
            out_inv[w] = inv
            out_btw[w] = btw
            w += 1


def _census_numpy(offsets, t_ms, receiver, carrier0, n_windows, step_ms, window_ms):
    n_poss = carrier0.shape[0]
    total = int(n_windows.sum())
    poss = np.repeat(np.arange(n_poss), n_windows)
    starts = np.concatenate(([0], np.cumsum(n_windows)[:-1]))
    k = np.arange(total) - np.repeat(starts, n_windows)
    ts = k * step_ms
    te = ts + window_ms

    # passes of all possessions on one monotone axis
    span = int(t_ms.max(initial=0)) + int(te.max(initial=0)) + 1
    pass_poss = np.repeat(np.arange(n_poss), np.diff(offsets))
    keys = pass_poss.astype(np.int64) * span + t_ms
    base = poss.astype(np.int64) * span
    lo = np.searchsorted(keys, base + ts, side="left")
    hi = np.searchsorted(keys, base + te, side="left")
    n = hi - lo

    prev = lo - 1
    has_prev = prev >= offsets[poss]
    safe_recv = np.concatenate((receiver, [0])).astype(np.int64)
    carrier = np.where(has_prev, safe_recv[np.maximum(prev, 0)], carrier0[poss])

    one = np.int64(1)
    inv = one << carrier
    btw = np.zeros(total, dtype=np.int64)
    seq = [carrier]
    max_n = int(n.max(initial=0))
    last = len(receiver)
    for j in range(max_n):
        live = j < n
        r = safe_recv[np.where(live, np.minimum(lo + j, last), last)]
        bit = np.where(live, one << r, 0)
        inv |= bit
        btw |= np.where(j < n - 1, bit, 0)
        if j < 3:
            seq.append(np.where(live, r, -1))
    while len(seq) < 4:
        seq.append(np.full(total, -1, dtype=np.int64))
    s0, s1, s2, s3 = seq
    code = np.full(total, OTHER, dtype=np.int8)
    code[n == 0] = G1
    code[n == 1] = G12
    two = n == 2
    code[two & (s2 == s0)] = G121
    code[two & (s2 != s0)] = G123
    three = n == 3
    back = s2 == s0
    code[three & back & (s3 == s1)] = G1212
    code[three & back & (s3 != s1)] = G1213
    code[three & ~back & (s3 == s0)] = G1231
    code[three & ~back & (s3 == s1)] = G1232
    code[three & ~back & (s3 != s0) & (s3 != s1)] = G1234
    return poss, k, carrier, n, code, inv, btw


def census(offsets, t_ms, receiver, carrier0, duration_ms, window_ms, step_ms, backend=None):
    """Enumerate and classify every sliding window of every possession.

    Pass arrays are concatenated per possession (``offsets`` has length
    ``n_possessions + 1``); ``receiver`` and ``carrier0`` hold per-team player
    indices below 63. Returns a dict of per-window arrays: ``poss``, ``k``,
    ``carrier``, ``n_passes``, ``graphlet`` (codes 0-9), ``involved`` and
    ``between`` (player bitmasks).
    """
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    t_ms = np.ascontiguousarray(t_ms, dtype=np.int64)
    receiver = np.ascontiguousarray(receiver, dtype=np.int64)
    carrier0 = np.ascontiguousarray(carrier0, dtype=np.int64)
    duration_ms = np.asarray(duration_ms, dtype=np.int64)
    if np.any(duration_ms < window_ms):
        raise ValueError("every possession must be at least one window long")
    n_windows = (duration_ms - window_ms) // step_ms + 1

    if _resolve(backend) == "numba":
        total = int(n_windows.sum())
        poss = np.repeat(np.arange(carrier0.shape[0]), n_windows)
        starts = np.concatenate(([0], np.cumsum(n_windows)[:-1]))
        k = np.arange(total) - np.repeat(starts, n_windows)
        carrier = np.empty(total, dtype=np.int64)
        n = np.empty(total, dtype=np.int64)
        code = np.empty(total, dtype=np.int8)
        inv = np.empty(total, dtype=np.int64)
        btw = np.empty(total, dtype=np.int64)
        _census_loop(offsets, t_ms, receiver, carrier0, n_windows, np.int64(step_ms),
                     np.int64(window_ms), carrier, n, code, inv, btw)
    else:
        poss, k, carrier, n, code, inv, btw = _census_numpy(
            offsets, t_ms, receiver, carrier0, n_windows, step_ms, window_ms
        )
    return {
        "poss": poss.astype(np.int64),
        "k": k.astype(np.int64),
        "carrier": carrier.astype(np.int64),
        "n_passes": n.astype(np.int64),
        "graphlet": code.astype(np.int8),
        "involved": inv.astype(np.int64),
        "between": btw.astype(np.int64),
    }


# -- Kruskal-Wallis from count tables ----------------------------------------


@njit
def _kw_loop(counts, out):
    n_rep, n_groups, n_vals = counts.shape
    for b in range(n_rep):
        total = 0.0
        for v in range(n_vals):
            for g in range(n_groups):
                total += counts[b, g, v]
        if total < 2:
            out[b] = 0.0
            continue
        mid = (total + 1.0) / 2.0
        ties = 0.0
        below = 0.0
        ssum = 0.0
        rank = np.empty(n_vals)
        for v in range(n_vals):
            t = 0.0
            for g in range(n_groups):
                t += counts[b, g, v]
            rank[v] = below + (t + 1.0) / 2.0
            ties += t * t * t - t
            below += t
        for g in range(n_groups):
            ng = 0.0
            rsum = 0.0
            for v in range(n_vals):
                ng += counts[b, g, v]
                rsum += counts[b, g, v] * rank[v]
            if ng > 0:
                d = rsum / ng - mid
                ssum += ng * d * d
        corr = 1.0 - ties / (total * total * total - total)
        if corr <= 1e-12:
            out[b] = 0.0
        else:
            out[b] = 12.0 / (total * (total + 1.0)) * ssum / corr


def _kw_numpy(counts):
    counts = counts.astype(np.float64)
    ties_per_val = counts.sum(axis=1)  # (B, u)
    total = ties_per_val.sum(axis=1)  # (B,)
    below = np.cumsum(ties_per_val, axis=1) - ties_per_val
    rank = below + (ties_per_val + 1.0) / 2.0
    n_g = counts.sum(axis=2)  # (B, g)
    rsum = (counts * rank[:, None, :]).sum(axis=2)
    mid = (total + 1.0) / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        dev = np.where(n_g > 0, rsum / n_g - mid[:, None], 0.0)
        ssum = (n_g * dev * dev).sum(axis=1)
        corr = 1.0 - (ties_per_val**3 - ties_per_val).sum(axis=1) / (total**3 - total)
        h = 12.0 / (total * (total + 1.0)) * ssum / corr
    return np.where((total >= 2) & (corr > 1e-12), h, 0.0)


def kw_from_counts(counts, backend=None):
    """Tie-corrected Kruskal-Wallis H for a stack of group x value count tables.

    ``counts[b, g, v]`` is the number of observations of the ``v``-th smallest
    distinct value in group ``g`` of replicate ``b``. Columns must be ordered
    by ascending value; the values themselves do not enter the statistic.
    """
    counts = np.ascontiguousarray(counts, dtype=np.float64)
    if counts.ndim == 2:
        counts = counts[None]
    if _resolve(backend) == "numba":
        out = np.empty(counts.shape[0])
        _kw_loop(counts, out)
        return out
    return _kw_numpy(counts)
