"""Full-batch gradient descent and TrimGrad with theory-driven budgets.

Stopping is always by a precomputed iteration count: the true minimizer is
unknown in production, so observed-distance stopping lives only in tests.
Plain GD uses step ``2/(mu+L)``; TrimGrad uses ``1/L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import aggregate
from .losses import (
    Dataset,
    ForgetSpec,
    LossModel,
    batch_grad,
    batch_risk,
    per_sample_grads,
)
from .numkit import as_vector, top_eigenvalue

StopReason = Literal["budget-exhausted", "target-reached"]


@dataclass
class TrainReport:
    final_theta: np.ndarray
    iterations: int
    grad_evals: int
    risk_trajectory: list[tuple[int, float]]
    stop_reason: StopReason
    points_per_step: int
    warnings: list[str] = field(default_factory=list)

    @property
    def final_risk(self) -> float:
        return self.risk_trajectory[-1][1]


def init_error_bound(model: LossModel, dataset: Dataset, theta0, exclude: ForgetSpec | None = None) -> float:
    """``(2/mu) * risk(theta0)``, valid because every loss here is non-negative."""
    theta0 = as_vector(theta0, dataset.d, "theta0")
    return 2.0 / model.mu * batch_risk(model, theta0, dataset, exclude)


def _check_constants(mu: float, smooth_l: float) -> None:
    if not (0 < mu <= smooth_l):
        raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={smooth_l}")


def gd_iterations(mu: float, smooth_l: float, init_bound: float, target: float) -> int:
    """Smallest ``K`` with ``((L-mu)/(L+mu))**(2K) * init_bound <= target``."""
    _check_constants(mu, smooth_l)
    if not target > 0:
        raise ValueError("target must be positive")
    if init_bound < 0:
        raise ValueError("init_bound must be non-negative")
    if init_bound <= target:
        return 0
    if smooth_l == mu:
        return 1
    rho = ((smooth_l - mu) / (smooth_l + mu)) ** 2
    k = max(1, math.ceil(math.log(target / init_bound) / math.log(rho)))
    # repair rounding in the log quotient against the defining inequality
    while rho**k * init_bound > target:
        k += 1
    while k > 1 and rho ** (k - 1) * init_bound <= target:
        k -= 1
    return k


def _validate_iters(iters: int) -> int:
    if not isinstance(iters, (int, np.integer)) or iters < 0:
        raise ValueError(f"iters must be a non-negative integer, got {iters!r}")
    return int(iters)


def _record(traj, t, iters, stride, risk_fn, theta):
    if t == 0 or t == iters or (stride > 0 and t % stride == 0):
        traj.append((t, risk_fn(theta)))


def gd_train(
    model: LossModel,
    dataset: Dataset,
    exclude: ForgetSpec | None,
    theta0,
    iters: int,
    *,
    stride: int = 1,
    certified: bool = False,
    step: float | None = None,
) -> TrainReport:
    """Run exactly ``iters`` steps of ``theta <- theta - 2/(mu+L) * grad``.

    ``stride`` controls how often the batch risk is logged (0 logs only the
    endpoints). ``certified`` marks the count as coming from
    :func:`gd_iterations`, so the report says the target was reached.
    ``step`` overrides the default step size (used for differential tests
    against TrimGrad, which steps with ``1/L``).
    """
    iters = _validate_iters(iters)
    theta = as_vector(theta0, dataset.d, "theta0")
    m = dataset.n - (exclude.f if exclude is not None else 0)
    if exclude is not None:
        exclude.validate(dataset.n)
    if step is None:
        step = 2.0 / (model.mu + model.smooth_l)
    risk = lambda th: batch_risk(model, th, dataset, exclude)  # noqa: E731
    traj: list[tuple[int, float]] = []
    _record(traj, 0, iters, stride, risk, theta)
    for t in range(1, iters + 1):
        theta = theta - step * batch_grad(model, theta, dataset, exclude)
        _record(traj, t, iters, stride, risk, theta)
    return TrainReport(
        final_theta=theta,
        iterations=iters,
        grad_evals=iters * m,
        risk_trajectory=traj,
        stop_reason="target-reached" if certified else "budget-exhausted",
        points_per_step=m,
    )


def gd_to_target(
    model: LossModel,
    dataset: Dataset,
    exclude: ForgetSpec | None,
    theta0,
    target: float,
    *,
    stride: int = 1,
) -> TrainReport:
    """GD budgeted by the non-negative-loss initial bound to reach ``target``."""
    bound = init_error_bound(model, dataset, theta0, exclude)
    k = gd_iterations(model.mu, model.smooth_l, bound, target)
    return gd_train(model, dataset, exclude, theta0, k, stride=stride, certified=True)


def trimgrad_iterations(mu, smooth_l, d, init_bound, alpha_emp, epsilon) -> int:
    """``ceil((2L/mu) * ln(L d Delta / (alpha_emp * eps)))``, or 0 if the log is <= 0."""
    _check_constants(mu, smooth_l)
    for name, v in (("d", d), ("init_bound", init_bound), ("alpha_emp", alpha_emp), ("epsilon", epsilon)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v!r}")
    arg = smooth_l * d * init_bound / (alpha_emp * epsilon)
    if arg <= 1.0:
        return 0
    return max(0, math.ceil(2.0 * smooth_l / mu * math.log(arg)))


def trimgrad_regime_limit(n: int, mu: float, smooth_l: float) -> float:
    """Largest ``f`` covered by the robust-training convergence guarantee."""
    frac = 1.0 / 3.0
    if smooth_l > mu:
        frac = min(frac, 12.0 * mu / (5.0 * (smooth_l - mu)))
    return n * frac


def trimgrad_train(
    model: LossModel,
    dataset: Dataset,
    f: int,
    theta0,
    iters: int,
    *,
    stride: int = 1,
    monitor_exclude: ForgetSpec | None = None,
    backend: aggregate.Backend = "partition",
) -> TrainReport:
    """Run ``iters`` steps of ``theta <- theta - (1/L) * TM_f(per-sample grads)``.

    All ``n`` points are visited every step. The logged risk is over the
    dataset minus ``monitor_exclude`` (the harness passes the forget set to
    track retain risk; training itself never sees it).
    """
    iters = _validate_iters(iters)
    n = dataset.n
    if not isinstance(f, (int, np.integer)) or f < 0 or not 2 * f < n:
        raise ValueError(f"TrimGrad requires 0 <= f < n/2 (n={n}, f={f})")
    theta = as_vector(theta0, dataset.d, "theta0")
    warnings = []
    limit = trimgrad_regime_limit(n, model.mu, model.smooth_l)
    if f > limit:
        warnings.append(f"f={f} exceeds the guaranteed regime f <= {limit:.6g}")
    step = 1.0 / model.smooth_l
    X, y, kind = dataset.features, dataset.labels, dataset.kind
    risk = lambda th: batch_risk(model, th, dataset, monitor_exclude)  # noqa: E731
    traj: list[tuple[int, float]] = []
    _record(traj, 0, iters, stride, risk, theta)
    for t in range(1, iters + 1):
        G = per_sample_grads(model, theta, X, y, kind)
        theta = theta - step * aggregate.trimmed_mean(G, f, backend=backend)
        _record(traj, t, iters, stride, risk, theta)
    return TrainReport(
        final_theta=theta,
        iterations=iters,
        grad_evals=iters * n,
        risk_trajectory=traj,
        stop_reason="budget-exhausted",
        points_per_step=n,
        warnings=warnings,
    )


def batch_smoothness(model: LossModel, dataset: Dataset, exclude: ForgetSpec | None = None) -> float:
    """Top Hessian eigenvalue of the batch risk (diagnostics only).

    Certified budgets always use the per-sample constants.
    """
    if model.kind == "quadratic_anchor":
        return 1.0
    if model.kind != "ridge":
        raise ValueError("batch smoothness is only tabulated for quadratic losses")
    X = dataset.features if exclude is None else dataset.features[exclude.mask(dataset.n)]
    H = X.T @ X / X.shape[0] + model.lam * np.eye(X.shape[1])
    return top_eigenvalue(H)
