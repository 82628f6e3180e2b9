"""Random problem instances shared by the test modules."""

import numpy as np

from certunlearn import losses
from certunlearn.losses import Dataset, ForgetSpec


def anchor_instance(rng: np.random.Generator, n_max=100, d_max=20):
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    z = rng.standard_normal((n, d)) * 10.0 ** rng.uniform(-1, 2)
    return losses.quadratic_anchor(), Dataset("anchor", z)


def ridge_instance(rng: np.random.Generator, n_max=100, d_max=20, lam_range=(0.1, 1.0)):
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    # unit-scale rows keep the condition number (and the GD budget) moderate
    X = rng.standard_normal((n, d)) / np.sqrt(d)
    y = X @ rng.standard_normal(d) + rng.standard_normal(n) * rng.uniform(0, 2)
    ds = Dataset("regression", X, y)
    return losses.ridge(ds, float(rng.uniform(*lam_range))), ds


def random_instance(rng: np.random.Generator, **kw):
    if rng.random() < 0.5:
        return anchor_instance(rng, **{k: v for k, v in kw.items() if k != "lam_range"})
    return ridge_instance(rng, **kw)


def random_forget(rng: np.random.Generator, n: int, f_max: int | None = None) -> ForgetSpec:
    hi = n - 1 if f_max is None else min(f_max, n - 1)
    f = int(rng.integers(0, hi + 1))
    return ForgetSpec.of(np.sort(rng.choice(n, f, replace=False)))


def sq(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ v)
