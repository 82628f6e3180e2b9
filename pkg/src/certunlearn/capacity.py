"""Deletion-capacity order estimates.

The published capacities are big-Omega/big-O statements. Every hidden
constant is set to 1 here, so outputs are *order estimates*, not calibrated
counts. The time budget ``T`` is counted in per-sample gradient
evaluations; one full-batch step over ``n`` points in dimension ``d`` costs
``n * d`` units in the exponents below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ORDER_LABEL = "order estimate (constant = 1)"


@dataclass(frozen=True)
class CapacityInputs:
    n: int
    d: int
    alpha: float
    epsilon: float
    time_budget_t: float = 0.0
    lipschitz_r: float | None = None
    init_dist: float = 1.0
    interp_error: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if not (self.alpha > 0 and self.epsilon > 0):
            raise ValueError("alpha and epsilon must be positive")
        if self.time_budget_t < 0 or self.init_dist < 0 or self.interp_error < 0:
            raise ValueError("time budget, init_dist and interp_error must be non-negative")
        if self.lipschitz_r is not None and not self.lipschitz_r > 0:
            raise ValueError("lipschitz_r must be positive")


@dataclass(frozen=True)
class CapacityResult:
    value: float
    perfect_interpolation: bool = False
    label: str = ORDER_LABEL


def _clamp(value: float, n: int) -> float:
    if math.isnan(value):
        raise ValueError("capacity evaluated to NaN")
    return min(max(value, 0.0), float(n - 1))


def id_utility_capacity(n: int, alpha: float) -> float:
    """``n * sqrt(alpha)``; returned unclamped so that ``alpha = 1`` gives ``n``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return n * math.sqrt(alpha)


def _exp_ratio(log_num: float, denom: float) -> float:
    # evaluate num/denom in log space; exp(T/...) overflows long before the clamp matters
    if denom == 0.0:
        return math.inf
    log_v = log_num - math.log(denom)
    return math.inf if log_v > 700 else math.exp(log_v)


def id_computational_capacity(inputs: CapacityInputs) -> float:
    """``n * alpha * eps * exp(T/(2nd)) / (R * d * init_dist)``, clamped to ``[0, n-1]``."""
    c = inputs
    if c.lipschitz_r is None:
        raise ValueError("the in-distribution computational capacity needs lipschitz_r")
    if not c.init_dist > 0:
        raise ValueError("init_dist must be positive")
    log_num = math.log(c.n * c.alpha * c.epsilon) + c.time_budget_t / (2.0 * c.n * c.d)
    return _clamp(_exp_ratio(log_num, c.lipschitz_r * c.d * c.init_dist), c.n)


def ood_computational_capacity(inputs: CapacityInputs) -> CapacityResult:
    """``n * alpha^2 eps^2 exp(T/(nd)) / (E * d^2 * init_dist^2)``, clamped.

    A perfectly interpolating retain set (``interp_error == 0``) makes the
    unlearning time vanish; the capacity is then ``n - 1`` and flagged.
    """
    c = inputs
    if c.interp_error == 0:
        return CapacityResult(float(c.n - 1), perfect_interpolation=True)
    return CapacityResult(_clamp(ood_computational_capacity_raw(c), c.n))


def ood_computational_capacity_raw(inputs: CapacityInputs) -> float:
    """Pre-clamp value of :func:`ood_computational_capacity` (diagnostics and tests)."""
    c = inputs
    if not (c.interp_error > 0 and c.init_dist > 0):
        raise ValueError("interp_error and init_dist must be positive")
    log_num = math.log(c.n * (c.alpha * c.epsilon) ** 2) + c.time_budget_t / (c.n * c.d)
    return _exp_ratio(log_num, c.interp_error * c.d**2 * c.init_dist**2)


def minimizer_shift_bound(lipschitz_r: float, mu: float, n: int, f: int) -> float:
    """``2 R f / (mu n)``: bound on how far removing ``f`` points moves the minimizer."""
    if not (lipschitz_r > 0 and mu > 0):
        raise ValueError("lipschitz_r and mu must be positive")
    if n < 1 or f < 0:
        raise ValueError("need n >= 1 and f >= 0")
    return 2.0 * lipschitz_r * f / (mu * n)
