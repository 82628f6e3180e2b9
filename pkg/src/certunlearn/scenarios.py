"""Experimental settings: data generators, corruptions and baselines.

Everything here is a pure function of its inputs and the supplied
:class:`~certunlearn.numkit.RngHandle`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import aggregate
from .capacity import minimizer_shift_bound
from .errors import ParseError, SchemaError
from .losses import (
    Anchor,
    Dataset,
    ForgetSpec,
    LossModel,
    exact_minimizer,
    per_sample_grads,
)
from .numkit import RngHandle, as_vector, gaussian_sample, seqmean
from .optimize import gd_to_target
from .unlearn import CertBudget

# --- regression ---------------------------------------------------------------


def synthetic_regression(
    n: int,
    d: int,
    rng: RngHandle,
    response_noise_std: float = 1.0,
    true_theta=None,
) -> tuple[Dataset, np.ndarray]:
    """Gaussian design ``x ~ N(0, I)``, ``y = x . theta_true + N(0, std^2)``.

    ``theta_true`` is drawn from ``N(0, I)`` unless supplied.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if response_noise_std < 0:
        raise ValueError("response_noise_std must be non-negative")
    g = rng.generator
    theta = g.standard_normal(d) if true_theta is None else as_vector(true_theta, d, "true_theta")
    X = g.standard_normal((n, d))
    y = (X * theta).sum(axis=1)
    if response_noise_std > 0:
        y = y + response_noise_std * g.standard_normal(n)
    return Dataset("regression", X, y), theta


@dataclass(frozen=True)
class QuadraticStats:
    """Second-moment summary of a regression sample.

    The mean ridge loss of any ``theta`` over the sample is
    ``0.5 * (theta' A theta - 2 b' theta + c) + lam/2 ||theta||^2``.
    """

    gram: np.ndarray
    cross: np.ndarray
    label_sq: float
    n: int

    def ridge_risk(self, theta, lam: float) -> float:
        theta = np.asarray(theta, dtype=float)
        quad = theta @ self.gram @ theta - 2.0 * self.cross @ theta + self.label_sq
        return 0.5 * float(quad) + 0.5 * lam * float(theta @ theta)

    def noise_risk(self, variance: float, lam: float) -> float:
        """Expected risk added by ``N(0, variance I)`` perturbation of any model."""
        return 0.5 * variance * (float(np.trace(self.gram)) + lam * self.gram.shape[0])


def regression_test_stats(
    true_theta,
    n_test: int,
    rng: RngHandle,
    response_noise_std: float = 1.0,
    chunk: int = 10_000,
) -> QuadraticStats:
    """Draw a fresh test sample in chunks and keep only its moments."""
    theta = as_vector(true_theta, name="true_theta")
    d = theta.size
    gram = np.zeros((d, d))
    cross = np.zeros(d)
    label_sq = 0.0
    g = rng.generator
    done = 0
    while done < n_test:
        m = min(chunk, n_test - done)
        X = g.standard_normal((m, d))
        y = X @ theta
        if response_noise_std > 0:
            y = y + response_noise_std * g.standard_normal(m)
        gram += X.T @ X
        cross += X.T @ y
        label_sq += float(y @ y)
        done += m
    return QuadraticStats(gram / n_test, cross / n_test, label_sq / n_test, n_test)


def _choose(rng: RngHandle, n: int, k: int) -> ForgetSpec:
    idx = rng.generator.choice(n, size=k, replace=False) if k else np.empty(0, dtype=int)
    return ForgetSpec.of(idx)


def label_offset_ood(dataset: Dataset, f: int, offset: float, rng: RngHandle) -> tuple[Dataset, ForgetSpec]:
    """Shift ``f`` uniformly chosen labels by ``offset``; they become the forget set."""
    if dataset.kind != "regression":
        raise ValueError("label offsets apply to regression data")
    if not (0 <= f < dataset.n):
        raise ValueError(f"need 0 <= f < n (f={f}, n={dataset.n})")
    forget = _choose(rng, dataset.n, f)
    y = dataset.labels.copy()
    idx = list(forget.indices)
    y[idx] = y[idx] + offset
    return dataset.with_labels(y), forget


# --- anchors ----------------------------------------------------------------------


def adversarial_forget_point(retain: Dataset, delta: float, direction) -> Anchor:
    """Anchor that moves the minimizer of ``retain + {z}`` by squared distance ``delta``.

    With ``n = |retain| + 1`` the point is ``mean(retain) + n * sqrt(delta) * u``;
    the new mean is ``mean(retain) + sqrt(delta) * u``.
    """
    if retain.kind != "anchor":
        raise ValueError("the construction is defined for anchor data")
    if not delta > 0:
        raise ValueError("delta must be positive")
    u = as_vector(direction, retain.d, "direction")
    if abs(math.sqrt(float(u @ u)) - 1.0) > 1e-12:
        raise ValueError("direction must have unit norm")
    center = np.asarray(seqmean(retain.features), dtype=float).reshape(retain.d)
    n = retain.n + 1
    return Anchor(center + n * math.sqrt(delta) * u)


# --- classification -----------------------------------------------------------


def gaussian_blobs(
    n: int,
    rng: RngHandle,
    *,
    separation: float = 2.0,
    minority: float = 0.2,
    dim: int = 2,
    intercept: bool = True,
) -> Dataset:
    """Two isotropic unit-variance blobs at ``+-separation/2`` along the first axis.

    A ``minority`` share of points is in class 1. With ``intercept`` a
    constant feature 1 is appended so the linear classifier has a bias.
    """
    if n < 2 or not (0 < minority < 1):
        raise ValueError("need n >= 2 and 0 < minority < 1")
    g = rng.generator
    labels = (g.random(n) < minority).astype(np.int64)
    centers = np.zeros((n, dim))
    centers[:, 0] = np.where(labels == 1, 0.5 * separation, -0.5 * separation)
    X = centers + g.standard_normal((n, dim))
    if intercept:
        X = np.hstack([X, np.ones((n, 1))])
    return Dataset("classification", X, labels)


def corrupt_labels(dataset: Dataset, fraction: float, rng: RngHandle) -> tuple[Dataset, ForgetSpec]:
    """Flip ``floor(fraction * n)`` uniformly chosen binary labels."""
    if dataset.kind != "classification" or dataset.n_classes != 2:
        raise ValueError("label flipping needs binary classification data")
    if not (0 < fraction < 0.5):
        raise ValueError(f"fraction must lie in (0, 0.5), got {fraction}")
    forget = _choose(rng, dataset.n, math.floor(fraction * dataset.n))
    y = dataset.labels.copy()
    idx = list(forget.indices)
    y[idx] = 1 - y[idx]
    return dataset.with_labels(y), forget


# --- CSV ingestion -------------------------------------------------------------

HOUSING_COLUMNS = 9


def load_housing_csv(path, standardize: bool = True) -> Dataset:
    """Read 8 feature columns and a trailing target column.

    One header row; comma separated; no quoting. With ``standardize`` every
    column (target included) is centred and scaled to unit population
    variance using the loaded rows.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError("empty file: expected a header row")
        if len(header) != HOUSING_COLUMNS:
            raise SchemaError(f"header has {len(header)} columns, expected {HOUSING_COLUMNS}")
        for fields in reader:
            line = reader.line_num
            if not fields:
                continue
            if len(fields) != HOUSING_COLUMNS:
                raise SchemaError(f"line {line}: {len(fields)} columns, expected {HOUSING_COLUMNS}")
            try:
                values = [float(v) for v in fields]
            except ValueError as exc:
                raise ParseError(str(exc), line) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite value", line)
            rows.append(values)
    if not rows:
        raise SchemaError("no data rows")
    data = np.array(rows, dtype=np.float64)
    if standardize:
        data = _standardize_columns(data)
    return Dataset("regression", data[:, :-1], data[:, -1])


def _standardize_columns(data: np.ndarray) -> np.ndarray:
    centred = data - data.mean(axis=0)
    # second pass removes the rounding residue of the first mean
    centred -= centred.mean(axis=0)
    scale = np.sqrt((centred * centred).mean(axis=0))
    if np.any(scale == 0):
        raise SchemaError("a column is constant and cannot be standardized")
    return centred / scale


def write_regression_csv(dataset: Dataset, path, header=None) -> None:
    """Write features and labels with round-trip float formatting."""
    if dataset.kind != "regression":
        raise ValueError("only regression datasets can be written")
    header = header or [f"x{i}" for i in range(dataset.d)] + ["y"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for x, y in zip(dataset.features, dataset.labels):
            fh.write(",".join(repr(float(v)) for v in x) + f",{float(y)!r}\n")


# --- lazy differential-privacy baseline --------------------------------------


def lazy_dp_noise_variance(lipschitz_r: float, mu: float, n: int, f: int, epsilon: float) -> float:
    """Gaussian variance hiding any group of ``f`` points at Renyi level ``q * eps``."""
    shift = minimizer_shift_bound(lipschitz_r, mu, n, f)
    return shift * shift / (2.0 * epsilon)


def lazy_dp_release(
    model: LossModel,
    dataset: Dataset,
    f: int,
    budget: CertBudget,
    theta0,
    *,
    lipschitz_r: float | None = None,
    train_target: float | None = None,
) -> tuple[np.ndarray, float]:
    """Pre-noise model and output-noise variance of the lazy DP baseline.

    The model is the exact minimizer when a closed form exists, otherwise
    certified GD to ``train_target`` (default: 1% of the per-phase target of
    the certified pipelines).
    """
    R = lipschitz_r if lipschitz_r is not None else model.constants.lipschitz_r
    if R is None:
        raise ValueError("the lazy DP baseline needs a Lipschitz (clipping) radius")
    if not 0 <= f < dataset.n:
        raise ValueError("need 0 <= f < n")
    if model.has_exact_minimizer:
        theta = exact_minimizer(model, dataset)
    else:
        target = train_target or budget.target(model.smooth_l, dataset.d) / 100.0
        theta = gd_to_target(model, dataset, None, theta0, target, stride=0).final_theta
    return theta, lazy_dp_noise_variance(R, model.mu, dataset.n, f, budget.epsilon)


def lazy_dp_baseline(
    model: LossModel,
    dataset: Dataset,
    f: int,
    budget: CertBudget,
    theta0,
    rng: RngHandle,
    *,
    lipschitz_r: float | None = None,
    train_target: float | None = None,
) -> np.ndarray:
    """Train on everything, add group-private output noise, ignore removals."""
    theta, variance = lazy_dp_release(
        model, dataset, f, budget, theta0, lipschitz_r=lipschitz_r, train_target=train_target
    )
    if variance == 0.0:
        return theta
    return theta + gaussian_sample(rng, dataset.d, variance)


# --- micro-batch trimmed-mean SGD study -----------------------------------------


@dataclass(frozen=True)
class StudyRow:
    iteration: int
    method: str
    retain_acc: float
    forget_acc: float
    test_acc: float


@dataclass
class StudyRecord:
    rows: list[StudyRow]
    grad_evals: dict[str, int]
    forget_visits: dict[str, int]
    final: dict[str, StudyRow] = field(default_factory=dict)


def accuracy(theta: np.ndarray, data: Dataset) -> float:
    if data.n == 0:
        return float("nan")
    pred = ((data.features * theta).sum(axis=1) > 0).astype(np.int64)
    return float(np.mean(pred == data.labels))


def _microbatch_direction(model, theta, pool: Dataset, idx, cohort, microbatch, trim):
    G = per_sample_grads(model, theta, pool.features[idx], pool.labels[idx], pool.kind)
    means = G.reshape(cohort, microbatch, -1).mean(axis=1)
    return aggregate.trimmed_mean(means, trim)


def microbatch_trimgrad_study(
    model: LossModel,
    dataset: Dataset,
    forget: ForgetSpec,
    test: Dataset,
    *,
    microbatch: int = 8,
    cohort: int = 15,
    trim: int = 3,
    iters: int = 2000,
    finetune_iters: int = 500,
    stride: int = 50,
    rng: RngHandle,
) -> StudyRecord:
    """Compare naive SGD, micro-batch TrimGrad and retraining on corrupted labels.

    Each step draws ``cohort`` disjoint micro-batches of ``microbatch`` points,
    averages gradients within each micro-batch, aggregates the micro-batch
    means (plain mean for the naive arm, trimmed mean for TrimGrad) and steps
    with ``1/L``. The naive and TrimGrad arms share one sampling stream so
    they differ only in aggregation; retraining samples from the retain set on
    its own stream. After training, each corrupted-data arm is fine-tuned on
    the retain set (plain SGD), logged as ``<arm>+finetune``.

    Forget accuracy is measured against the (corrupted) training labels.
    """
    if model.kind != "reg_logistic":
        raise ValueError("the study uses the binary logistic model")
    if cohort < 1 or microbatch < 1 or trim < 0:
        raise ValueError("cohort and microbatch must be positive, trim non-negative")
    if not 2 * trim < cohort:
        raise ValueError(f"trim must be < cohort/2 (trim={trim}, cohort={cohort})")
    per_step = cohort * microbatch
    if microbatch * (2 * trim + 1) > per_step:
        raise ValueError("cohort too small for the requested trimming")
    forget.validate(dataset.n)
    retain = dataset.retain(forget)
    forget_set = dataset.take(list(forget.indices)) if forget.f else None
    if retain.n < per_step:
        raise ValueError(f"retain set ({retain.n}) smaller than one step's sample ({per_step})")
    step = 1.0 / model.smooth_l
    forget_mask = ~forget.mask(dataset.n)

    def evaluate(t, method, theta):
        fa = accuracy(theta, forget_set) if forget_set is not None else float("nan")
        return StudyRow(t, method, accuracy(theta, retain), fa, accuracy(theta, test))

    rows: list[StudyRow] = []
    evals: dict[str, int] = {}
    visits: dict[str, int] = {}
    arms = {"naive": (dataset, 0, 0), "trimgrad": (dataset, trim, 0), "retrain": (retain, 0, 1)}
    finals: dict[str, np.ndarray] = {}
    for name, (pool, k, stream) in arms.items():
        sampler = rng.child(stream).generator
        theta = np.zeros(dataset.d)
        evals[name] = 0
        visits[name] = 0
        rows.append(evaluate(0, name, theta))
        for t in range(1, iters + 1):
            idx = sampler.choice(pool.n, size=per_step, replace=False)
            theta = theta - step * _microbatch_direction(model, theta, pool, idx, cohort, microbatch, k)
            evals[name] += per_step
            if pool is dataset:
                visits[name] += int(forget_mask[idx].sum())
            if t % stride == 0 or t == iters:
                rows.append(evaluate(t, name, theta))
        finals[name] = theta
    for name in ("naive", "trimgrad"):
        label = f"{name}+finetune"
        sampler = rng.child(2).generator
        theta = finals[name]
        evals[label] = 0
        visits[label] = 0
        for t in range(iters + 1, iters + finetune_iters + 1):
            idx = sampler.choice(retain.n, size=per_step, replace=False)
            theta = theta - step * _microbatch_direction(model, theta, retain, idx, cohort, microbatch, 0)
            evals[label] += per_step
            if (t - iters) % stride == 0 or t == iters + finetune_iters:
                rows.append(evaluate(t, label, theta))
    final = {}
    for r in rows:
        final[r.method] = r
    return StudyRecord(rows, evals, visits, final)
