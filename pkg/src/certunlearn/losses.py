"""Per-sample loss models with certified constants.

Three losses are supported, each strongly convex and smooth *per sample*:

* ``quadratic_anchor``: ``0.5 * ||theta - z||^2`` (mu = L = 1),
* ``ridge``: ``0.5 * (x.theta - y)^2 + lam/2 ||theta||^2``,
* ``reg_logistic``: binary logistic loss plus ``lam/2 ||theta||^2``.

All per-point quantities are evaluated row-wise by the same vectorized
kernels, so ``loss_at``/``grad_at`` on a single point are bit-identical to
the corresponding row of a batch evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import numpy as np
from scipy.special import expit

from .errors import UnsupportedOracle
from .numkit import as_vector, seqmean, solve_spd

Kind = Literal["anchor", "regression", "classification"]


@dataclass(frozen=True, eq=False)
class Anchor:
    z: np.ndarray


@dataclass(frozen=True, eq=False)
class Regression:
    x: np.ndarray
    y: float


@dataclass(frozen=True, eq=False)
class Classification:
    x: np.ndarray
    y: int


DataPoint = Union[Anchor, Regression, Classification]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered, homogeneous collection of points stored as a feature matrix.

    For anchors ``features`` holds the anchors themselves and ``labels`` is
    ``None``. Classification labels are class indices in ``{0, 1}``.
    """

    kind: Kind
    features: np.ndarray
    labels: np.ndarray | None = None
    n_classes: int = 2

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("features must be an (n, d) array with n, d >= 1")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", X)
        if self.kind == "anchor":
            if self.labels is not None:
                raise ValueError("anchor datasets carry no labels")
            return
        if self.labels is None:
            raise ValueError(f"{self.kind} dataset needs labels")
        if self.kind == "regression":
            y = np.ascontiguousarray(self.labels, dtype=np.float64)
            if not np.all(np.isfinite(y)):
                raise ValueError("labels must be finite")
        elif self.kind == "classification":
            y = np.asarray(self.labels)
            if not np.issubdtype(y.dtype, np.integer):
                if not np.all(np.asarray(y, dtype=float) == np.round(y)):
                    raise ValueError("class labels must be integers")
                y = y.astype(np.int64)
            if y.size and (y.min() < 0 or y.max() >= self.n_classes):
                raise ValueError(f"class index out of range [0, {self.n_classes})")
        else:
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must have one entry per row")
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def __len__(self):
        return self.n

    def point(self, i: int) -> DataPoint:
        x = self.features[i].copy()
        if self.kind == "anchor":
            return Anchor(x)
        if self.kind == "regression":
            return Regression(x, float(self.labels[i]))
        return Classification(x, int(self.labels[i]))

    def points(self) -> list[DataPoint]:
        return [self.point(i) for i in range(self.n)]

    @classmethod
    def from_points(cls, points: Sequence[DataPoint], n_classes: int = 2) -> "Dataset":
        if not points:
            raise ValueError("need at least one point")
        kinds = {type(p) for p in points}
        if len(kinds) != 1:
            raise ValueError("points must all be the same variant")
        (t,) = kinds
        if t is Anchor:
            return cls("anchor", np.array([p.z for p in points], dtype=float))
        X = np.array([p.x for p in points], dtype=float)
        y = np.array([p.y for p in points])
        return cls("regression" if t is Regression else "classification", X, y, n_classes)

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            raise ValueError("empty selection")
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(self.kind, self.features[idx], labels, self.n_classes)

    def retain(self, forget: "ForgetSpec | None") -> "Dataset":
        """The dataset with the forget indices removed (order preserved)."""
        if forget is None or forget.f == 0:
            return self
        return self.take(forget.retain_indices(self.n))

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.kind, self.features, labels, self.n_classes)


@dataclass(frozen=True)
class ForgetSpec:
    """Strictly increasing dataset indices to be removed."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("forget indices must be strictly increasing")
        if idx and idx[0] < 0:
            raise ValueError("forget indices must be non-negative")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices) -> "ForgetSpec":
        return cls(tuple(sorted(int(i) for i in indices)))

    @property
    def f(self) -> int:
        return len(self.indices)

    def validate(self, n: int, *, robust: bool = False) -> None:
        if self.indices and self.indices[-1] >= n:
            raise ValueError(f"forget index {self.indices[-1]} out of range for n={n}")
        if self.f >= n:
            raise ValueError(f"cannot forget {self.f} of {n} points")
        if robust and not 2 * self.f < n:
            raise ValueError(f"trimming requires f < n/2 (f={self.f}, n={n})")

    def mask(self, n: int) -> np.ndarray:
        self.validate(n)
        keep = np.ones(n, dtype=bool)
        keep[list(self.indices)] = False
        return keep

    def retain_indices(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.mask(n))


@dataclass(frozen=True)
class LossConstants:
    mu: float
    smooth_l: float
    lipschitz_r: float | None = None

    def __post_init__(self):
        if not (0 < self.mu <= self.smooth_l):
            raise ValueError(f"need 0 < mu <= L, got mu={self.mu}, L={self.smooth_l}")
        if self.lipschitz_r is not None and not self.lipschitz_r > 0:
            raise ValueError("lipschitz_r must be positive")


@dataclass(frozen=True)
class LossModel:
    kind: Literal["quadratic_anchor", "ridge", "reg_logistic"]
    constants: LossConstants
    lam: float = 0.0

    @property
    def mu(self) -> float:
        return self.constants.mu

    @property
    def smooth_l(self) -> float:
        return self.constants.smooth_l

    @property
    def has_exact_minimizer(self) -> bool:
        return self.kind in ("quadratic_anchor", "ridge")

    def data_kind(self) -> Kind:
        return {"quadratic_anchor": "anchor", "ridge": "regression",
                "reg_logistic": "classification"}[self.kind]


DEFAULT_LAMBDA = 1e-2


def quadratic_anchor() -> LossModel:
    return LossModel("quadratic_anchor", LossConstants(1.0, 1.0))


def ridge(dataset: Dataset, lam: float = DEFAULT_LAMBDA, lipschitz_r: float | None = None) -> LossModel:
    """Ridge loss bound to ``dataset``: ``L = lam + max_i ||x_i||^2``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    sq = float(np.max((dataset.features * dataset.features).sum(axis=1)))
    return LossModel("ridge", LossConstants(lam, lam + sq, lipschitz_r), lam)


def reg_logistic(dataset: Dataset, lam: float = DEFAULT_LAMBDA, lipschitz_r: float | None = None) -> LossModel:
    """Binary regularized logistic loss: ``L = lam + max_i ||x_i||^2 / 4``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if dataset.n_classes != 2:
        raise ValueError("reg_logistic supports binary classification only")
    sq = float(np.max((dataset.features * dataset.features).sum(axis=1)))
    return LossModel("reg_logistic", LossConstants(lam, lam + sq / 4.0, lipschitz_r), lam)


# --- vectorized kernels -----------------------------------------------------

def _check(model: LossModel, theta: np.ndarray, X: np.ndarray, kind: str):
    if kind != model.data_kind():
        raise ValueError(f"{model.kind} loss cannot evaluate {kind} data")
    if theta.ndim != 1 or theta.shape[0] != X.shape[1]:
        raise ValueError(f"dimension mismatch: theta has {theta.shape}, data has d={X.shape[1]}")


def _margins(theta, X, y):
    inner = (X * theta).sum(axis=1)
    return np.where(y == 1, inner, -inner)


def per_sample_losses(model: LossModel, theta, X, y=None, kind: str | None = None) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    _check(model, theta, X, kind or model.data_kind())
    if model.kind == "quadratic_anchor":
        diff = theta - X
        return 0.5 * (diff * diff).sum(axis=1)
    reg = 0.5 * model.lam * float((theta * theta).sum())
    if model.kind == "ridge":
        r = (X * theta).sum(axis=1) - y
        return 0.5 * r * r + reg
    m = _margins(theta, X, y)
    return np.log1p(np.exp(-np.abs(m))) + np.maximum(0.0, -m) + reg


def per_sample_grads(model: LossModel, theta, X, y=None, kind: str | None = None) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    _check(model, theta, X, kind or model.data_kind())
    if model.kind == "quadratic_anchor":
        return theta - X
    if model.kind == "ridge":
        r = (X * theta).sum(axis=1) - y
        return X * r[:, None] + model.lam * theta
    m = _margins(theta, X, y)
    # d/dm log(1 + e^{-m}) = -sigmoid(-m); dm/dtheta = +-x
    coef = -expit(-m) * np.where(y == 1, 1.0, -1.0)
    return X * coef[:, None] + model.lam * theta


def _point_arrays(z: DataPoint):
    if isinstance(z, Anchor):
        return np.asarray(z.z, dtype=float)[None, :], None, "anchor"
    if isinstance(z, Regression):
        return np.asarray(z.x, dtype=float)[None, :], np.array([float(z.y)]), "regression"
    if isinstance(z, Classification):
        return np.asarray(z.x, dtype=float)[None, :], np.array([int(z.y)]), "classification"
    raise TypeError(f"not a data point: {z!r}")


def loss_at(model: LossModel, theta, z: DataPoint) -> float:
    X, y, kind = _point_arrays(z)
    return float(per_sample_losses(model, theta, X, y, kind)[0])


def grad_at(model: LossModel, theta, z: DataPoint) -> np.ndarray:
    X, y, kind = _point_arrays(z)
    return per_sample_grads(model, theta, X, y, kind)[0]


def _included(dataset: Dataset, exclude: ForgetSpec | None):
    if exclude is None or exclude.f == 0:
        return dataset.features, dataset.labels
    keep = exclude.mask(dataset.n)
    if not keep.any():
        raise ValueError("no points left after exclusion")
    return dataset.features[keep], None if dataset.labels is None else dataset.labels[keep]


def batch_risk(model: LossModel, theta, dataset: Dataset, exclude: ForgetSpec | None = None) -> float:
    X, y = _included(dataset, exclude)
    return float(seqmean(per_sample_losses(model, theta, X, y, dataset.kind)))


def batch_grad(model: LossModel, theta, dataset: Dataset, exclude: ForgetSpec | None = None) -> np.ndarray:
    X, y = _included(dataset, exclude)
    return seqmean(per_sample_grads(model, theta, X, y, dataset.kind))


def exact_minimizer(model: LossModel, dataset: Dataset, exclude: ForgetSpec | None = None) -> np.ndarray:
    """Closed-form minimizer of the (retained) empirical risk.

    Anchors: the mean of the included anchors. Ridge: the normal equations
    ``(X^T X / m + lam I) theta = X^T y / m``.
    """
    X, y = _included(dataset, exclude)
    if model.kind == "quadratic_anchor":
        _check(model, np.zeros(X.shape[1]), X, dataset.kind)
        return seqmean(X) if X.shape[1] > 1 else np.array([seqmean(X[:, 0])])
    if model.kind == "ridge":
        _check(model, np.zeros(X.shape[1]), X, dataset.kind)
        m = X.shape[0]
        gram = X.T @ X / m + model.lam * np.eye(X.shape[1])
        return solve_spd(gram, X.T @ y / m)
    raise UnsupportedOracle(f"{model.kind} has no closed-form minimizer")


def interpolation_error(model: LossModel, theta_star, retain: Dataset) -> float:
    """Mean squared per-point gradient norm at ``theta_star``.

    ``theta_star`` is expected to be the retain-set minimizer; that is the
    caller's responsibility.
    """
    G = per_sample_grads(model, theta_star, retain.features, retain.labels, retain.kind)
    return float(seqmean((G * G).sum(axis=1)))
