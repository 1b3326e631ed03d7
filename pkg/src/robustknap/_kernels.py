"""Hot oracle kernels.

Marginal gains of coverage-type and facility-location objectives are
evaluated against many bucket states per stream element, which is where
nearly all of the runtime goes. Each kernel exists twice: a numba ``@njit``
version and a pure-numpy version. The numba path is used when numba imports
and ``ROBUSTKNAP_DISABLE_NUMBA`` is unset (or "0"); both paths are always
importable as ``numba_impl`` / ``numpy_impl`` so they can be benchmarked
and cross-checked in one process.
"""

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("ROBUSTKNAP_DISABLE_NUMBA", "0") in ("", "0")


# -- pure numpy -------------------------------------------------------------

def _np_coverage_gains(indptr, indices, weights, covered, k, e):
    nbrs = indices[indptr[e]:indptr[e + 1]]
    if k == 0 or nbrs.size == 0:
        return np.zeros(k)
    w = weights[nbrs]
    # summed in neighbour order so results match the compiled kernel bit for bit
    out = np.zeros(k)
    unc = covered[:k, nbrs] == 0
    for t in range(nbrs.size):
        out += np.where(unc[:, t], w[t], 0.0)
    return out


def _np_coverage_add(indptr, indices, weights, covered, row, e):
    nbrs = indices[indptr[e]:indptr[e + 1]]
    gain = 0.0
    for u in nbrs:
        if covered[row, u] == 0:
            gain += weights[u]
    covered[row, nbrs] = 1
    return gain


def _np_facility_gains(column, best, k):
    if k == 0:
        return np.zeros(k)
    diff = np.maximum(column[None, :] - best[:k], 0.0)
    out = np.zeros(k)
    for t in range(column.shape[0]):
        out += diff[:, t]
    return out


def _np_facility_add(column, best, row):
    diff = np.maximum(column - best[row], 0.0)
    gain = 0.0
    for t in range(column.shape[0]):
        gain += diff[t]
    np.maximum(best[row], column, out=best[row])
    return gain


numpy_impl = SimpleNamespace(
    coverage_gains=_np_coverage_gains,
    coverage_add=_np_coverage_add,
    facility_gains=_np_facility_gains,
    facility_add=_np_facility_add,
    name="numpy",
)


# -- numba ------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _nb_coverage_gains(indptr, indices, weights, covered, k, e):
        out = np.zeros(k)
        lo = indptr[e]
        hi = indptr[e + 1]
        for r in range(k):
            acc = 0.0
            for p in range(lo, hi):
                u = indices[p]
                if covered[r, u] == 0:
                    acc += weights[u]
            out[r] = acc
        return out

    @numba.njit(cache=True)
    def _nb_coverage_add(indptr, indices, weights, covered, row, e):
        gain = 0.0
        for p in range(indptr[e], indptr[e + 1]):
            u = indices[p]
            if covered[row, u] == 0:
                gain += weights[u]
                covered[row, u] = 1
        return gain

    @numba.njit(cache=True)
    def _nb_facility_gains(column, best, k):
        out = np.zeros(k)
        for r in range(k):
            acc = 0.0
            for t in range(column.shape[0]):
                d = column[t] - best[r, t]
                if d > 0.0:
                    acc += d
                else:
                    acc += 0.0
            out[r] = acc
        return out

    @numba.njit(cache=True)
    def _nb_facility_add(column, best, row):
        gain = 0.0
        for t in range(column.shape[0]):
            d = column[t] - best[row, t]
            if d > 0.0:
                gain += d
                best[row, t] = column[t]
            else:
                gain += 0.0
        return gain

    numba_impl = SimpleNamespace(
        coverage_gains=_nb_coverage_gains,
        coverage_add=_nb_coverage_add,
        facility_gains=_nb_facility_gains,
        facility_add=_nb_facility_add,
        name="numba",
    )
else:  # pragma: no cover
    numba_impl = None


active = numba_impl if USE_NUMBA else numpy_impl


def use(name):
    """Switch the active kernel set ("numba" or "numpy"); returns the previous name."""
    global active
    prev = active.name
    if name == "numba":
        if numba_impl is None:
            raise RuntimeError("numba is not available")
        active = numba_impl
    elif name == "numpy":
        active = numpy_impl
    else:
        raise ValueError(f"unknown kernel set {name!r}")
    return prev
