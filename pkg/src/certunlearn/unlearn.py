"""Certified unlearning pipelines, output perturbation and certificates.

Two pipelines are provided:

* :func:`pipeline_noisy_minimizer` trains with GD on the full data to a
  squared-distance target ``t = alpha_emp * eps / (4 L d)``, unlearns with GD
  on the retain set from the trained model to the same target, and releases
  the result plus ``N(0, alpha_emp / (2 L d) I)``.
* :func:`pipeline_trimgrad` replaces the training phase by TrimGrad
  (trimmed-mean gradient descent), which keeps the trained model close to
  the retain minimizer even when the forget points are adversarial, so the
  unlearning phase starts nearer its goal.

Certificates are produced by an explicit counterfactual rerun on the retain
set (:func:`verify_certificate`). Reports keep the pre-noise model for
testing; only ``perturbed_theta`` is the certified release.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import (
    Dataset,
    ForgetSpec,
    LossModel,
    batch_risk,
    exact_minimizer,
    interpolation_error,
)
from .numkit import RngHandle, as_vector, gaussian_sample
from .optimize import (
    TrainReport,
    gd_to_target,
    gd_train,
    init_error_bound,
    trimgrad_iterations,
    trimgrad_train,
)


@dataclass(frozen=True)
class CertBudget:
    q: float
    epsilon: float
    alpha_emp: float

    def __post_init__(self):
        if not self.q > 1:
            raise ValueError(f"Renyi order q must exceed 1, got {self.q}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.alpha_emp > 0:
            raise ValueError("alpha_emp must be positive")

    def validate(self, d: int) -> None:
        # the precision/noise calibration is only claimed for eps <= d
        if self.epsilon > d:
            raise ValueError(f"epsilon={self.epsilon} exceeds the dimension d={d}")

    def target(self, smooth_l: float, d: int) -> float:
        """Squared-distance precision required of each optimization phase."""
        return self.alpha_emp * self.epsilon / (4.0 * smooth_l * d)

    @property
    def divergence_budget(self) -> float:
        return self.q * self.epsilon


@dataclass(frozen=True)
class NoiseSpec:
    variance: float

    def __post_init__(self):
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValueError("noise variance must be positive and finite")

    @classmethod
    def certified(cls, budget: CertBudget, smooth_l: float, d: int) -> "NoiseSpec":
        return cls(budget.alpha_emp / (2.0 * smooth_l * d))


@dataclass(frozen=True)
class Certificate:
    q: float
    budget: float
    divergence: float
    distance_sq: float
    noise_variance: float
    satisfied: bool
    verified: bool = True

    @classmethod
    def unverified(cls, q: float, budget: float, noise_variance: float) -> "Certificate":
        nan = float("nan")
        return cls(q, budget, nan, nan, noise_variance, False, False)

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "budget": self.budget,
            "divergence": self.divergence,
            "distance_sq": self.distance_sq,
            "noise_variance": self.noise_variance,
            "satisfied": self.satisfied,
            "verified": self.verified,
        }


@dataclass
class UnlearnReport:
    perturbed_theta: np.ndarray
    pre_noise_theta: np.ndarray
    train_report: TrainReport
    unlearn_report: TrainReport
    certificate: Certificate
    retain_excess_risk: float
    interp_error: float | None
    noise: NoiseSpec
    target: float


def gaussian_renyi(q: float, delta_sq: float, variance: float) -> float:
    """Order-``q`` Renyi divergence between ``N(a, v I)`` and ``N(b, v I)``.

    ``delta_sq`` is ``||a - b||^2``.
    """
    if not q > 1:
        raise ValueError("q must exceed 1")
    if not variance > 0:
        raise ValueError("variance must be positive")
    if delta_sq < 0:
        raise ValueError("delta_sq must be non-negative")
    return q * delta_sq / (2.0 * variance)


def perturb(theta, noise: NoiseSpec, rng: RngHandle) -> np.ndarray:
    theta = as_vector(theta, name="theta")
    return theta + gaussian_sample(rng, theta.size, noise.variance)


def _prepare(model: LossModel, dataset: Dataset, forget: ForgetSpec, budget: CertBudget, theta0, robust: bool):
    if model.data_kind() != dataset.kind:
        raise ValueError(f"{model.kind} loss cannot be trained on {dataset.kind} data")
    budget.validate(dataset.d)
    forget.validate(dataset.n, robust=robust)
    theta0 = as_vector(theta0, dataset.d, "theta0")
    return theta0, budget.target(model.smooth_l, dataset.d), NoiseSpec.certified(budget, model.smooth_l, dataset.d)


def counterfactual(model: LossModel, dataset: Dataset, forget: ForgetSpec, budget: CertBudget, theta0) -> np.ndarray:
    """The model the data holder would release had the forget points never been seen.

    Certified GD on the retain set from ``theta0`` to the per-phase target,
    followed by an empty unlearning request (zero steps).
    """
    target = budget.target(model.smooth_l, dataset.d)
    return gd_to_target(model, dataset, forget, theta0, target, stride=0).final_theta


def verify_certificate(
    model: LossModel,
    dataset: Dataset,
    forget: ForgetSpec,
    budget: CertBudget,
    unlearn_output,
    theta0,
) -> Certificate:
    """Measure the Renyi divergence between the release and its counterfactual.

    ``unlearn_output`` is the pre-noise unlearned model. Both Gaussians share
    the certified noise covariance, so the divergence is a function of the
    squared distance between their means.
    """
    noise = NoiseSpec.certified(budget, model.smooth_l, dataset.d)
    ref = counterfactual(model, dataset, forget, budget, theta0)
    out = as_vector(unlearn_output, dataset.d, "unlearn_output")
    diff = out - ref
    dist = float(diff @ diff)
    div = gaussian_renyi(budget.q, dist, noise.variance)
    return Certificate(
        q=budget.q,
        budget=budget.divergence_budget,
        divergence=div,
        distance_sq=dist,
        noise_variance=noise.variance,
        satisfied=div <= budget.divergence_budget,
    )


def _finish(model, dataset, forget, budget, theta0, rng, train, unlearn, noise, target, verify, with_interp):
    pre = unlearn.final_theta
    released = perturb(pre, noise, rng)
    if verify is None:
        verify = model.has_exact_minimizer
    if verify:
        cert = verify_certificate(model, dataset, forget, budget, pre, theta0)
    else:
        cert = Certificate.unverified(budget.q, budget.divergence_budget, noise.variance)
    excess = float("nan")
    interp = None
    if model.has_exact_minimizer:
        star = exact_minimizer(model, dataset, forget)
        excess = batch_risk(model, released, dataset, forget) - batch_risk(model, star, dataset, forget)
        if with_interp:
            interp = interpolation_error(model, star, dataset.retain(forget))
    return UnlearnReport(released, pre, train, unlearn, cert, excess, interp, noise, target)


def pipeline_noisy_minimizer(
    model: LossModel,
    dataset: Dataset,
    forget: ForgetSpec,
    budget: CertBudget,
    theta0,
    rng: RngHandle,
    *,
    verify: bool | None = None,
    stride: int = 1,
) -> UnlearnReport:
    """Approximate the minimizer on S, then on the retain set, then add noise.

    ``verify=None`` runs the counterfactual check only when a closed-form
    minimizer exists, matching the certificate's documented scope.
    """
    theta0, target, noise = _prepare(model, dataset, forget, budget, theta0, robust=False)
    train = gd_to_target(model, dataset, None, theta0, target, stride=stride)
    if forget.f == 0:
        # nothing removed: the trained model already meets the target
        unlearn = gd_train(model, dataset, None, train.final_theta, 0, certified=True)
    else:
        unlearn = gd_to_target(model, dataset, forget, train.final_theta, target, stride=stride)
    return _finish(model, dataset, forget, budget, theta0, rng, train, unlearn, noise, target, verify, False)


def pipeline_trimgrad(
    model: LossModel,
    dataset: Dataset,
    forget: ForgetSpec,
    budget: CertBudget,
    theta0,
    rng: RngHandle,
    *,
    delta: float | None = None,
    verify: bool | None = None,
    stride: int = 1,
) -> UnlearnReport:
    """Robust TrimGrad training, GD unlearning on the retain set, then noise.

    ``delta`` is the initialization error fed to the TrimGrad iteration
    count; it defaults to the non-negative-loss bound on the full dataset.
    Training never reads the forget indices beyond their count ``f``; they
    are passed to the trainer only to log retain risk.
    """
    theta0, target, noise = _prepare(model, dataset, forget, budget, theta0, robust=True)
    if delta is None:
        delta = init_error_bound(model, dataset, theta0)
    iters = 0
    if delta > 0:
        iters = trimgrad_iterations(model.mu, model.smooth_l, dataset.d, delta, budget.alpha_emp, budget.epsilon)
    train = trimgrad_train(model, dataset, forget.f, theta0, iters, stride=stride, monitor_exclude=forget)
    unlearn = gd_to_target(model, dataset, forget, train.final_theta, target, stride=stride)
    return _finish(model, dataset, forget, budget, theta0, rng, train, unlearn, noise, target, verify, True)

