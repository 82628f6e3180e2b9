"""Coordinate-wise trimmed mean and its deviation bound.

For each coordinate the ``f`` smallest and ``f`` largest values are dropped
and the remaining ``n - 2f`` are averaged.

Ties. The *value* of the trimmed sum does not depend on which of several
equal elements is discarded: the kept multiset is always the middle
``n - 2f`` order statistics. Floating-point summation, however, depends on
the order in which kept values are added. To make the result bit-exact we
fix a canonical rule: elements are ranked by ``(value, index)``, ranks
``f .. n-f-1`` are kept, and kept values are summed in dataset order. The
result is therefore also invariant (bit-exactly) under any permutation that
preserves the relative order of tied values, and equal up to rounding under
arbitrary permutations.

Selection of the two boundary order statistics per coordinate uses
``numpy.partition`` (introselect: quickselect with a median-of-medians
fallback, worst-case linear). A pure-Python median-of-medians backend on a
single reused scratch buffer and a sort-based debug backend are kept for
differential testing.
"""

from __future__ import annotations

from typing import Literal, Sequence

import numpy as np

from .numkit import seqsum

Backend = Literal["partition", "select", "sort"]


def _stack(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        G = np.asarray(vectors, dtype=np.float64)
        if G.ndim != 2:
            raise ValueError("expected an (n, d) array of vectors")
    else:
        vectors = list(vectors)
        if not vectors:
            raise ValueError("need at least one vector")
        dims = {np.shape(v) for v in vectors}
        if len(dims) != 1 or len(next(iter(dims))) != 1:
            raise ValueError("vectors must be 1-d with equal dimensions")
        G = np.array(vectors, dtype=np.float64)
    if G.shape[0] == 0 or G.shape[1] == 0:
        raise ValueError("need at least one non-empty vector")
    return np.ascontiguousarray(G)


def mean(vectors) -> np.ndarray:
    """Coordinate-wise mean, summed left to right."""
    G = _stack(vectors)
    return _column_sum(G) / G.shape[0]


def _column_sum(G: np.ndarray) -> np.ndarray:
    s = seqsum(G)
    return np.atleast_1d(np.asarray(s, dtype=np.float64))


def _check_f(n: int, f: int) -> None:
    if not isinstance(f, (int, np.integer)) or f < 0:
        raise ValueError(f"f must be a non-negative integer, got {f!r}")
    if not 2 * f < n:
        raise ValueError(f"trimming requires f < n/2 (n={n}, f={f})")


def _keep_from_bounds(G: np.ndarray, f: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Mask of elements whose ``(value, index)`` rank lies in ``[f, n-f)``."""
    n = G.shape[0]
    keep = (G > lo) & (G < hi)
    for bound in (lo, hi):
        eq = G == bound
        rank = (G < bound).sum(axis=0) + np.cumsum(eq, axis=0) - 1
        keep |= eq & (rank >= f) & (rank < n - f)
    return keep


def _bounds_partition(G: np.ndarray, f: int):
    n = G.shape[0]
    part = np.partition(G, (f, n - f - 1), axis=0)
    return part[f], part[n - f - 1]


def _select(buf: list, k: int) -> float:
    """k-th smallest (0-based) of ``buf`` by median-of-medians; reorders ``buf``."""
    lo, hi = 0, len(buf)
    while True:
        if hi - lo <= 5:
            buf[lo:hi] = sorted(buf[lo:hi])
            return buf[k]
        # median of medians of groups of five
        medians = []
        for s in range(lo, hi, 5):
            grp = sorted(buf[s:min(s + 5, hi)])
            medians.append(grp[(len(grp) - 1) // 2])
        pivot = _select(medians, (len(medians) - 1) // 2)
        # three-way partition of buf[lo:hi] around pivot
        less = [v for v in buf[lo:hi] if v < pivot]
        equal = [v for v in buf[lo:hi] if v == pivot]
        greater = [v for v in buf[lo:hi] if v > pivot]
        buf[lo:hi] = less + equal + greater
        a, b = lo + len(less), lo + len(less) + len(equal)
        if k < a:
            hi = a
        elif k < b:
            return pivot
        else:
            lo = b


def _bounds_select(G: np.ndarray, f: int):
    n, d = G.shape
    lo = np.empty(d)
    hi = np.empty(d)
    scratch = [0.0] * n
    for k in range(d):
        scratch[:] = G[:, k].tolist()
        lo[k] = _select(scratch, f)
        hi[k] = _select(scratch, n - f - 1)
    return lo, hi


def _keep_sort(G: np.ndarray, f: int) -> np.ndarray:
    n = G.shape[0]
    order = np.argsort(G, axis=0, kind="stable")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(n)[:, None].repeat(G.shape[1], axis=1), axis=0)
    return (rank >= f) & (rank < n - f)


def trimmed_mean(vectors, f: int, backend: Backend = "partition") -> np.ndarray:
    """Coordinate-wise trimmed mean discarding ``f`` values at each end."""
    G = _stack(vectors)
    n = G.shape[0]
    _check_f(n, f)
    f = int(f)
    if f == 0:
        return _column_sum(G) / n
    if backend == "partition":
        keep = _keep_from_bounds(G, f, *_bounds_partition(G, f))
    elif backend == "select":
        keep = _keep_from_bounds(G, f, *_bounds_select(G, f))
    elif backend == "sort":
        keep = _keep_sort(G, f)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return _column_sum(np.where(keep, G, 0.0)) / (n - 2 * f)


def kappa(n: int, f: int) -> float:
    """Deviation constant ``(6f/(n-2f)) * (1 + f/(n-2f))``."""
    _check_f(n, f)
    r = f / (n - 2 * f)
    return 6.0 * r * (1.0 + r)


def deviation_bound(n: int, f: int, empirical_variance: float) -> float:
    """Upper bound on ``||TM_f(g) - mean_I(g)||^2`` for any ``|I| >= n - f``.

    ``empirical_variance`` is ``(1/|I|) sum_{i in I} ||g_i - mean_I||^2``.
    """
    if empirical_variance < 0:
        raise ValueError("empirical_variance must be non-negative")
    return kappa(n, f) * empirical_variance
