"""Experiment runners behind the CLI subcommands and ``scripts/``.

Each runner takes a frozen config dataclass and returns plain rows in a
deterministic sweep order. Randomness is derived from ``config.seed``
through :meth:`RngHandle.child`, one stream per sweep point and role.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import losses, scenarios
from .losses import ForgetSpec
from .numkit import RngHandle
from .unlearn import CertBudget, pipeline_noisy_minimizer, pipeline_trimgrad

NOISY_MINIMIZER = "noisy_minimizer"
TRIMGRAD = "trimgrad"
LAZY_DP = "lazy_dp"

# stream roles under each sweep point
_DATA, _CORRUPT, _TEST, _NOISE = 0, 1, 2, 3


# --- dimension separation -------------------------------------------------------


@dataclass(frozen=True)
class IdSeparationConfig:
    seed: int
    n: int = 10_000
    f: int = 20
    epsilon: float = 1.0
    q: float = 2.0
    alpha_emp: float = 0.1
    lam: float = 0.5
    dims: tuple[int, ...] = (25, 50, 100, 200)
    trials: int = 5
    n_test: int = 100_000
    response_noise: float = 1.0
    clip_r: float = 1.0


@dataclass(frozen=True)
class ExcessRow:
    d: int
    method: str
    trial: int
    excess_risk: float


def run_id_separation(cfg: IdSeparationConfig) -> list[ExcessRow]:
    """Test excess risk of the certified release versus the lazy DP release.

    Excess risk is the test-set ridge risk of the released model minus that
    of the exact retain-set minimizer, averaged analytically over the
    release noise (the test risk is quadratic, so the expectation is the
    risk of the pre-noise model plus ``variance * tr(H_test) / 2``).
    """
    rows = []
    base = RngHandle(cfg.seed)
    budget = CertBudget(cfg.q, cfg.epsilon, cfg.alpha_emp)
    for d in cfg.dims:
        for trial in range(cfg.trials):
            rng = base.child(d).child(trial)
            ds, theta_true = scenarios.synthetic_regression(cfg.n, d, rng.child(_DATA), cfg.response_noise)
            forget = ForgetSpec.of(rng.child(_CORRUPT).generator.choice(cfg.n, cfg.f, replace=False))
            model = losses.ridge(ds, cfg.lam)
            stats = scenarios.regression_test_stats(theta_true, cfg.n_test, rng.child(_TEST), cfg.response_noise)
            ref = stats.ridge_risk(losses.exact_minimizer(model, ds, forget), cfg.lam)

            rep = pipeline_noisy_minimizer(
                model, ds, forget, budget, np.zeros(d), rng.child(_NOISE), verify=False, stride=0
            )
            risk = stats.ridge_risk(rep.pre_noise_theta, cfg.lam) + stats.noise_risk(rep.noise.variance, cfg.lam)
            rows.append(ExcessRow(d, NOISY_MINIMIZER, trial, risk - ref))

            theta, var = scenarios.lazy_dp_release(model, ds, cfg.f, budget, np.zeros(d), lipschitz_r=cfg.clip_r)
            risk = stats.ridge_risk(theta, cfg.lam) + stats.noise_risk(var, cfg.lam)
            rows.append(ExcessRow(d, LAZY_DP, trial, risk - ref))
    return rows


def mean_excess(rows: list[ExcessRow], method: str, d: int) -> float:
    vals = [r.excess_risk for r in rows if r.method == method and r.d == d]
    return float(np.mean(vals))


# --- out-of-distribution unlearning time ---------------------------------------------


@dataclass(frozen=True)
class OodConfig:
    seed: int
    n: int = 1000
    d: int = 100
    fs: tuple[int, ...] = (1, 100, 450)
    offset: float = 1e3
    epsilon: float = 10.0
    q: float = 2.0
    alpha_emp: float = 0.1
    lam: float = 1.0
    response_noise: float = 1.0
    threshold: float | None = None  # defaults to alpha_emp


@dataclass(frozen=True)
class TrajectoryRow:
    f: int
    method: str
    iteration: int
    excess_retain_risk: float


@dataclass(frozen=True)
class OodSummaryRow:
    f: int
    method: str
    train_iterations: int
    unlearn_iterations: int
    grad_evals_per_iteration: int
    iterations_to_threshold: int
    threshold: float


def iterations_to_threshold(trajectory, threshold: float) -> int:
    """First logged iteration whose value is at most ``threshold`` (-1 if none).

    ``trajectory`` is a sequence of ``(iteration, value)`` pairs.
    """
    for it, v in trajectory:
        if v <= threshold:
            return int(it)
    return -1


def run_ood_iterations(cfg: OodConfig) -> tuple[list[TrajectoryRow], list[OodSummaryRow]]:
    """Per-iteration retain excess risk during unlearning, for both pipelines."""
    threshold = cfg.alpha_emp if cfg.threshold is None else cfg.threshold
    budget = CertBudget(cfg.q, cfg.epsilon, cfg.alpha_emp)
    base = RngHandle(cfg.seed)
    rows, summary = [], []
    for f in cfg.fs:
        rng = base.child(f)
        clean, _ = scenarios.synthetic_regression(cfg.n, cfg.d, rng.child(_DATA), cfg.response_noise)
        ds, forget = scenarios.label_offset_ood(clean, f, cfg.offset, rng.child(_CORRUPT))
        model = losses.ridge(ds, cfg.lam)
        best = losses.batch_risk(model, losses.exact_minimizer(model, ds, forget), ds, forget)
        for method, pipeline in ((NOISY_MINIMIZER, pipeline_noisy_minimizer), (TRIMGRAD, pipeline_trimgrad)):
            rep = pipeline(model, ds, forget, budget, np.zeros(cfg.d), rng.child(_NOISE), verify=False)
            excess = [(it, risk - best) for it, risk in rep.unlearn_report.risk_trajectory]
            rows.extend(TrajectoryRow(f, method, it, ex) for it, ex in excess)
            summary.append(
                OodSummaryRow(
                    f,
                    method,
                    rep.train_report.iterations,
                    rep.unlearn_report.iterations,
                    rep.unlearn_report.points_per_step,
                    iterations_to_threshold(excess, threshold),
                    threshold,
                )
            )
    return rows, summary


# --- corrupted-label study ----------------------------------------------------------


@dataclass(frozen=True)
class ForgetStudyConfig:
    seed: int
    n: int = 2000
    corruption: float = 0.1
    dim: int = 1000
    separation: float = 2.0
    minority: float = 0.5
    lam: float = 1e-3
    microbatch: int = 8
    cohort: int = 15
    trim: int = 3
    iters: int = 2000
    finetune_iters: int = 500
    stride: int = 50
    n_test: int = 2000


def run_forget_study(cfg: ForgetStudyConfig) -> scenarios.StudyRecord:
    rng = RngHandle(cfg.seed)
    kw = dict(separation=cfg.separation, minority=cfg.minority, dim=cfg.dim)
    clean = scenarios.gaussian_blobs(cfg.n, rng.child(_DATA), **kw)
    test = scenarios.gaussian_blobs(cfg.n_test, rng.child(_TEST), **kw)
    ds, forget = scenarios.corrupt_labels(clean, cfg.corruption, rng.child(_CORRUPT))
    model = losses.reg_logistic(ds, cfg.lam)
    return scenarios.microbatch_trimgrad_study(
        model,
        ds,
        forget,
        test,
        microbatch=cfg.microbatch,
        cohort=cfg.cohort,
        trim=cfg.trim,
        iters=cfg.iters,
        finetune_iters=cfg.finetune_iters,
        stride=cfg.stride,
        rng=rng.child(_NOISE),
    )
