"""Dense numerical substrate.

Seeded Gaussian streams, SPD solves, power iteration and the fixed-order
reduction every other module sums with. Parameter vectors are plain 1-d
float64 ``numpy`` arrays.

Reductions over data points are strictly left-to-right in stored order
(``seqsum``), so a run is bit-identical given its inputs and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import NumericalFailure


def as_vector(values, d: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.array(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d sequence")
    if d is not None and v.size != d:
        raise ValueError(f"{name} has dimension {v.size}, expected {d}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def seqsum(a: np.ndarray) -> np.ndarray | float:
    """Sum along axis 0, accumulating rows left to right.

    ``np.add.reduce`` over the outer axis of a C-contiguous matrix with at
    least two columns walks the rows in order; a single column (or 1-d
    input) would be collapsed into numpy's pairwise kernel, so ``cumsum``
    is used there instead.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] == 0:
        raise ValueError("cannot sum an empty collection")
    if a.ndim == 2 and a.shape[1] >= 2:
        return np.add.reduce(np.ascontiguousarray(a), axis=0)
    out = np.cumsum(a, axis=0)[-1]
    return float(out) if a.ndim == 1 else out


def seqmean(a: np.ndarray) -> np.ndarray | float:
    return seqsum(a) / a.shape[0]


@dataclass
class RngHandle:
    """Owned, stateful random stream identified by ``(seed, stream_id)``.

    Distinct stream ids are spawned through ``SeedSequence`` and are
    statistically independent.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, key: int) -> "RngHandle":
        """Derived stream for sub-task ``key`` (e.g. trial or arm index)."""
        mixed = np.random.SeedSequence([self.seed, self.stream_id, key]).generate_state(1, np.uint64)[0]
        return RngHandle(self.seed, int(mixed))


def gaussian_sample(rng: RngHandle, d: int, variance: float) -> np.ndarray:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    if not (variance > 0 and math.isfinite(variance)):
        raise ValueError(f"variance must be positive and finite, got {variance!r}")
    return rng.generator.standard_normal(int(d)) * math.sqrt(variance)


def solve_spd(matrix, rhs) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` for symmetric positive-definite ``matrix``."""
    a = np.asarray(matrix, dtype=np.float64)
    b = np.asarray(rhs, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise ValueError("matrix must be square and match rhs")
    try:
        factor = sla.cho_factor(a, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise NumericalFailure(f"matrix is not positive definite: {exc}") from exc
    x = sla.cho_solve(factor, b)
    # one round of iterative refinement
    x = x + sla.cho_solve(factor, b - a @ x)
    return x


def top_eigenvalue(matrix, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest-magnitude eigenvalue of a symmetric matrix by power iteration.

    Stops when the eigen-residual ``||A v - rho v||`` drops below
    ``tol * |rho|``. Raises ``NumericalFailure`` (carrying the last iterate)
    when the cap is hit, e.g. for a ``+lambda/-lambda`` pair.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-12 * (1 + np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    if not np.any(a):
        return 0.0
    v = np.random.default_rng(seed).standard_normal(a.shape[0])
    v /= np.linalg.norm(v)
    rho = 0.0
    for _ in range(max_iter):
        w = a @ v
        rho = float(v @ w)
        if np.linalg.norm(w - rho * v) <= tol * abs(rho):
            return rho
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    raise NumericalFailure("power iteration did not converge", last_iterate=rho)
