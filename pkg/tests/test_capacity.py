import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certunlearn import losses
from certunlearn.capacity import (
    ORDER_LABEL,
    CapacityInputs,
    id_computational_capacity,
    id_utility_capacity,
    minimizer_shift_bound,
    ood_computational_capacity,
    ood_computational_capacity_raw,
)
from certunlearn.losses import Dataset, ForgetSpec

from test_optimize import oracle_minimizer


def test_id_utility_examples():
    assert id_utility_capacity(1000, 1.0) == 1000
    assert id_utility_capacity(100, 0.04) == pytest.approx(20)
    assert id_utility_capacity(200, 0.3) == 2 * id_utility_capacity(100, 0.3)
    with pytest.raises(ValueError):
        id_utility_capacity(10, 0.0)


def test_id_computational_examples():
    base = CapacityInputs(1000, 10, 0.1, 1.0, lipschitz_r=1.0, init_dist=1.0)
    assert id_computational_capacity(base) == pytest.approx(1000 * 0.1 / 10)
    boosted = CapacityInputs(1000, 10, 0.1, 1.0, time_budget_t=2 * 1000 * 10 * math.log(10), lipschitz_r=1.0)
    assert id_computational_capacity(boosted) == pytest.approx(10 * id_computational_capacity(base), rel=1e-12)
    with pytest.raises(ValueError):
        id_computational_capacity(CapacityInputs(1000, 10, 0.1, 1.0))
    huge = CapacityInputs(1000, 10, 0.1, 1.0, time_budget_t=1e12, lipschitz_r=1.0)
    assert id_computational_capacity(huge) == 999


def test_ood_computational_examples():
    r = ood_computational_capacity(CapacityInputs(100, 1, 1.0, 1.0))
    assert r.value == 99 and not r.perfect_interpolation and r.label == ORDER_LABEL
    assert ood_computational_capacity_raw(CapacityInputs(100, 1, 1.0, 1.0)) == pytest.approx(100)
    a = ood_computational_capacity_raw(CapacityInputs(100, 3, 0.4, 1.0, interp_error=2.0))
    b = ood_computational_capacity_raw(CapacityInputs(100, 3, 0.2, 1.0, interp_error=2.0))
    assert b == pytest.approx(a / 4, rel=1e-12)
    big = ood_computational_capacity(CapacityInputs(100, 3, 0.4, 1.0, interp_error=1e12))
    assert 0 < big.value < 1e-6
    flat = ood_computational_capacity(CapacityInputs(100, 3, 0.4, 1.0, interp_error=0.0))
    assert flat.value == 99 and flat.perfect_interpolation


def test_inputs_validation():
    for kw in (dict(n=0), dict(alpha=0.0), dict(epsilon=-1.0), dict(time_budget_t=-1.0), dict(lipschitz_r=0.0)):
        args = dict(n=10, d=2, alpha=0.1, epsilon=1.0) | kw
        with pytest.raises(ValueError):
            CapacityInputs(**args)


inputs_strategy = st.builds(
    CapacityInputs,
    n=st.integers(2, 10**6),
    d=st.integers(1, 1000),
    alpha=st.floats(1e-4, 1),
    epsilon=st.floats(1e-3, 10),
    time_budget_t=st.floats(0, 1e7),
    lipschitz_r=st.floats(1e-2, 1e2),
    init_dist=st.floats(1e-3, 1e3),
    interp_error=st.floats(1e-6, 1e3),
)


def _bump(c: CapacityInputs, **kw) -> CapacityInputs:
    return CapacityInputs(**(vars(c) | kw))


@settings(max_examples=300, deadline=None)
@given(c=inputs_strategy, factor=st.floats(1.01, 10))
def test_capacities_monotone_and_clamped(c, factor):
    idc, ood = id_computational_capacity, lambda x: ood_computational_capacity(x).value
    for fn in (idc, ood):
        v = fn(c)
        assert 0 <= v <= c.n - 1
        assert fn(_bump(c, alpha=min(1.0, c.alpha * factor))) >= v
        assert fn(_bump(c, epsilon=c.epsilon * factor)) >= v
        assert fn(_bump(c, time_budget_t=c.time_budget_t * factor + 1)) >= v
        assert fn(_bump(c, init_dist=c.init_dist * factor)) <= v
    assert idc(_bump(c, lipschitz_r=c.lipschitz_r * factor)) <= idc(c)
    assert ood(_bump(c, interp_error=c.interp_error * factor)) <= ood(c)
    # growing d shrinks the exponent and grows the denominator
    assert idc(_bump(c, d=c.d + 1)) <= idc(c)
    assert ood(_bump(c, d=c.d + 1)) <= ood(c)


def test_minimizer_shift_examples():
    assert minimizer_shift_bound(1.0, 1.0, 100, 0) == 0.0
    assert minimizer_shift_bound(1.0, 1.0, 100, 5) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        minimizer_shift_bound(0.0, 1.0, 10, 1)


def test_minimizer_shift_bounds_measured_shift():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n, d = int(rng.integers(3, 60)), int(rng.integers(1, 6))
        X = rng.uniform(-1, 1, (n, d))
        y = rng.uniform(-2, 2, n)
        lam = float(rng.uniform(0.05, 2))
        ds = Dataset("regression", X, y)
        model = losses.ridge(ds, lam)
        f = int(rng.integers(1, n))
        forget = ForgetSpec.of(np.sort(rng.choice(n, f, replace=False)))
        keep = forget.mask(n)
        # both minimizers lie in the ball where (lam/2)|t|^2 <= risk(0)
        radius = math.sqrt(max(np.mean(y**2), np.mean(y[keep] ** 2)) / lam)
        norms = np.linalg.norm(X, axis=1)
        R = float(np.max(norms * (norms * radius + np.abs(y)))) + lam * radius
        shift = np.linalg.norm(oracle_minimizer(model, ds) - oracle_minimizer(model, ds, forget))
        assert shift <= minimizer_shift_bound(R, lam, n, f) * (1 + 1e-12)
