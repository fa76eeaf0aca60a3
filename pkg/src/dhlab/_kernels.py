"""Hot inner loops: numba-jitted with a pure-numpy fallback.

Set ``DHLAB_NO_NUMBA=1`` to force the numpy path (the two paths produce
bitwise-identical results; accumulation order is fixed).  Both
implementations are importable directly for benchmarking.
"""
from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("DHLAB_NO_NUMBA", "").strip() not in ("", "0", "false")

try:
    if _FORCE_NUMPY:
        raise ImportError("numba disabled by DHLAB_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def hist_accumulate_numpy(flat_idx, weights, nflat):
    """Per-bin weight sums, squared-weight sums and counts."""
    mass = np.zeros(nflat, dtype=np.float64)
    sq = np.zeros(nflat, dtype=np.float64)
    count = np.zeros(nflat, dtype=np.int64)
    np.add.at(mass, flat_idx, weights)
    np.add.at(sq, flat_idx, weights * weights)
    np.add.at(count, flat_idx, 1)
    return mass, sq, count


@njit(cache=True)
def _hist_accumulate_jit(flat_idx, weights, nflat):  # pragma: no cover - jitted
    mass = np.zeros(nflat, dtype=np.float64)
    sq = np.zeros(nflat, dtype=np.float64)
    count = np.zeros(nflat, dtype=np.int64)
    for i in range(flat_idx.shape[0]):
        j = flat_idx[i]
        w = weights[i]
        mass[j] += w
        sq[j] += w * w
        count[j] += 1
    return mass, sq, count


def hist_accumulate_numba(flat_idx, weights, nflat):
    return _hist_accumulate_jit(
        np.ascontiguousarray(flat_idx, dtype=np.int64),
        np.ascontiguousarray(weights, dtype=np.float64),
        nflat,
    )


def piecewise_horner_numpy(x, bp, coef, ncoef):
    """Evaluate a 1-d piecewise polynomial (zero outside [bp[0], bp[-1]])."""
    idx = np.searchsorted(bp, x, side="right") - 1
    inside = (idx >= 0) & (idx < len(bp) - 1)
    piece = np.clip(idx, 0, len(bp) - 2)
    out = np.zeros_like(x)
    for k in range(coef.shape[1] - 1, -1, -1):
        out = out * x + coef[piece, k]
    out[~inside] = 0.0
    return out


@njit(cache=True)
def _piecewise_horner_jit(x, bp, coef):  # pragma: no cover - jitted
    n = x.shape[0]
    npieces = bp.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        xi = x[i]
        if xi < bp[0] or xi >= bp[npieces]:
            continue
        lo, hi = 0, npieces
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if xi >= bp[mid]:
                lo = mid
            else:
                hi = mid
        acc = 0.0
        for k in range(coef.shape[1] - 1, -1, -1):
            acc = acc * xi + coef[lo, k]
        out[i] = acc
    return out


def piecewise_horner_numba(x, bp, coef, ncoef):
    return _piecewise_horner_jit(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(bp, dtype=np.float64),
        np.ascontiguousarray(coef, dtype=np.float64),
    )


if HAVE_NUMBA:
    hist_accumulate = hist_accumulate_numba
    piecewise_horner = piecewise_horner_numba
else:
    hist_accumulate = hist_accumulate_numpy
    piecewise_horner = piecewise_horner_numpy
