import math

import numpy as np
import pytest

from certunlearn import losses, scenarios
from certunlearn.losses import Dataset, ForgetSpec
from certunlearn.numkit import RngHandle
from certunlearn.unlearn import (
    CertBudget,
    Certificate,
    NoiseSpec,
    counterfactual,
    gaussian_renyi,
    perturb,
    pipeline_noisy_minimizer,
    pipeline_trimgrad,
    verify_certificate,
)

from instances import random_forget, random_instance, sq
from test_optimize import oracle_minimizer


def test_gaussian_renyi_examples():
    assert gaussian_renyi(2, 0.0, 1.0) == 0.0
    assert gaussian_renyi(2, 1.0, 1.0) == 1.0
    assert gaussian_renyi(1.5, 4.0, 0.5) == 6.0
    assert gaussian_renyi(3, 2 * 0.37, 0.37) == pytest.approx(3.0, rel=1e-15)
    for bad in ((1.0, 1.0, 1.0), (2.0, 1.0, 0.0), (2.0, -1.0, 1.0)):
        with pytest.raises(ValueError):
            gaussian_renyi(*bad)


def test_budget_validation():
    with pytest.raises(ValueError):
        CertBudget(1.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        CertBudget(2.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        CertBudget(2.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        CertBudget(2.0, 5.0, 0.1).validate(4)
    CertBudget(2.0, 4.0, 0.1).validate(4)


def test_noise_calibration_exact():
    rng = np.random.default_rng(0)
    for _ in range(200):
        b = CertBudget(2.0, rng.uniform(0.1, 1), rng.uniform(1e-3, 1))
        L, d = rng.uniform(0.5, 100), int(rng.integers(1, 500))
        v = NoiseSpec.certified(b, L, d).variance
        assert v * 2 * L * d == pytest.approx(b.alpha_emp, rel=1e-15)
        # the divergence at the full precision budget is exactly q*eps
        assert gaussian_renyi(b.q, 4 * b.target(L, d), v) == pytest.approx(b.divergence_budget, rel=1e-14)


def test_perturb_moments_and_determinism():
    theta = np.linspace(-1, 1, 1_000_000)
    noise = NoiseSpec(0.25)
    out = perturb(theta, noise, RngHandle(1))
    delta = out - theta
    assert abs(delta.var() / 0.25 - 1) <= 0.01
    assert abs(delta.mean()) <= 4 * math.sqrt(0.25 / delta.size)
    assert out.tobytes() == perturb(theta, noise, RngHandle(1)).tobytes()


def test_noisy_minimizer_two_anchor_example():
    model = losses.quadratic_anchor()
    ds = Dataset("anchor", np.array([[0.0], [2.0]]))
    budget = CertBudget(2.0, 1.0, 4e-8)  # target 1e-8 with L = d = 1
    rep = pipeline_noisy_minimizer(model, ds, ForgetSpec.of([1]), budget, [5.0], RngHandle(0))
    assert rep.target == pytest.approx(1e-8)
    assert abs(rep.pre_noise_theta[0]) <= 1e-4
    assert rep.certificate.verified and rep.certificate.satisfied


def test_empty_forget_is_vacuous():
    rng = np.random.default_rng(1)
    for _ in range(20):
        model, ds = random_instance(rng, n_max=30, d_max=5)
        budget = CertBudget(2.0, min(1.0, ds.d), 0.1)
        rep = pipeline_noisy_minimizer(model, ds, ForgetSpec.of([]), budget, np.zeros(ds.d), RngHandle(2))
        assert rep.unlearn_report.iterations == 0
        assert np.array_equal(rep.pre_noise_theta, rep.train_report.final_theta)
        assert rep.certificate.distance_sq == 0.0 and rep.certificate.divergence == 0.0


def test_certificate_fields_consistent():
    rng = np.random.default_rng(2)
    model, ds = random_instance(rng, n_max=30, d_max=5)
    budget = CertBudget(3.0, min(1.0, ds.d), 0.1)
    forget = random_forget(rng, ds.n)
    rep = pipeline_noisy_minimizer(model, ds, forget, budget, np.zeros(ds.d), RngHandle(3))
    c = rep.certificate
    assert c.divergence == pytest.approx(c.q * c.distance_sq / (2 * c.noise_variance), rel=1e-15)
    assert c.satisfied == (c.divergence <= c.budget)
    assert c.budget == 3.0 * budget.epsilon
    d = c.as_dict()
    assert set(d) == {"q", "budget", "divergence", "distance_sq", "noise_variance", "satisfied", "verified"}


def test_unverified_when_no_oracle():
    ds = Dataset("classification", np.random.default_rng(0).standard_normal((20, 3)), np.arange(20) % 2)
    model = losses.reg_logistic(ds, 0.5)
    budget = CertBudget(2.0, 1.0, 0.1)
    rep = pipeline_noisy_minimizer(model, ds, ForgetSpec.of([0, 1]), budget, np.zeros(3), RngHandle(0))
    assert not rep.certificate.verified
    assert math.isnan(rep.certificate.divergence) and math.isnan(rep.retain_excess_risk)
    assert Certificate.unverified(2.0, 2.0, 0.1).satisfied is False


def test_pipeline_errors():
    model = losses.quadratic_anchor()
    ds = Dataset("anchor", np.zeros((4, 2)))
    with pytest.raises(ValueError):  # eps > d
        pipeline_noisy_minimizer(model, ds, ForgetSpec.of([0]), CertBudget(2.0, 3.0, 0.1), [0, 0], RngHandle(0))
    with pytest.raises(ValueError):  # empty retain set
        pipeline_noisy_minimizer(model, ds, ForgetSpec.of([0, 1, 2, 3]), CertBudget(2.0, 1.0, 0.1), [0, 0], RngHandle(0))
    with pytest.raises(ValueError):  # f >= n/2
        pipeline_trimgrad(model, ds, ForgetSpec.of([0, 1]), CertBudget(2.0, 1.0, 0.1), [0, 0], RngHandle(0))


def test_trimgrad_f0_matches_plain_training_phase():
    rng = np.random.default_rng(4)
    model, ds = random_instance(rng, n_max=30, d_max=5)
    budget = CertBudget(2.0, min(1.0, ds.d), 0.1)
    rep = pipeline_trimgrad(model, ds, ForgetSpec.of([]), budget, np.zeros(ds.d), RngHandle(0))
    assert rep.train_report.points_per_step == ds.n
    assert rep.train_report.warnings == []
    assert rep.certificate.satisfied


def test_trimgrad_clean_data_reaches_target():
    rng = np.random.default_rng(5)
    for _ in range(20):
        model, ds = random_instance(rng, n_max=40, d_max=6)
        budget = CertBudget(2.0, min(1.0, ds.d), 0.1)
        forget = random_forget(rng, ds.n, f_max=(ds.n - 1) // 2)
        rep = pipeline_trimgrad(model, ds, forget, budget, np.zeros(ds.d), RngHandle(1))
        assert sq(rep.pre_noise_theta - oracle_minimizer(model, ds, forget)) <= rep.target
        assert rep.retain_excess_risk >= -1e-12
        assert rep.interp_error is not None and rep.interp_error >= 0


def test_adversarial_point_starts_trimgrad_closer():
    # mu = L for anchors, so both pipelines unlearn in one exact step; the
    # separation shows in where the unlearning phase starts.
    rng = np.random.default_rng(6)
    model = losses.quadratic_anchor()
    for _ in range(10):
        d = int(rng.integers(1, 6))
        retain = Dataset("anchor", rng.standard_normal((int(rng.integers(5, 40)), d)))
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        z = scenarios.adversarial_forget_point(retain, 1e6, u)
        ds = Dataset("anchor", np.vstack([z.z, retain.features]))
        forget = ForgetSpec.of([0])
        budget = CertBudget(2.0, 1.0, 0.1)
        star = oracle_minimizer(model, ds, forget)
        a = pipeline_noisy_minimizer(model, ds, forget, budget, np.zeros(d), RngHandle(0))
        b = pipeline_trimgrad(model, ds, forget, budget, np.zeros(d), RngHandle(0))
        start_a = sq(a.train_report.final_theta - star)
        start_b = sq(b.train_report.final_theta - star)
        assert start_a >= 3 * start_b
        assert b.unlearn_report.iterations <= a.unlearn_report.iterations
        assert a.certificate.satisfied and b.certificate.satisfied


def test_verify_certificate_on_counterfactual_is_zero():
    rng = np.random.default_rng(7)
    model, ds = random_instance(rng, n_max=30, d_max=5)
    budget = CertBudget(2.0, min(1.0, ds.d), 0.1)
    forget = random_forget(rng, ds.n)
    ref = counterfactual(model, ds, forget, budget, np.zeros(ds.d))
    c = verify_certificate(model, ds, forget, budget, ref, np.zeros(ds.d))
    assert c.distance_sq == 0.0 and c.satisfied


def certificate_chain_case(rng, pipeline):
    """Returns None when a phase misses its target (not expected), else satisfied."""
    model, ds = random_instance(rng, n_max=40, d_max=8)
    budget = CertBudget(float(rng.uniform(1.1, 5)), float(rng.uniform(0.1, min(1.0, ds.d))), float(10 ** rng.uniform(-3, 0)))
    robust = pipeline is pipeline_trimgrad
    forget = random_forget(rng, ds.n, f_max=(ds.n - 1) // 2 if robust else None)
    theta0 = rng.standard_normal(ds.d)
    rep = pipeline(model, ds, forget, budget, theta0, RngHandle(int(rng.integers(1 << 30))))
    t = rep.target
    star_r = oracle_minimizer(model, ds, forget)
    phases_ok = sq(rep.pre_noise_theta - star_r) <= t
    if not robust:
        phases_ok &= sq(rep.train_report.final_theta - oracle_minimizer(model, ds)) <= t
    if not phases_ok:
        return None
    return rep.certificate.divergence <= budget.divergence_budget


def test_certificate_chain_sample():
    rng = np.random.default_rng(8)
    for k in range(60):
        res = certificate_chain_case(rng, pipeline_noisy_minimizer if k % 2 else pipeline_trimgrad)
        assert res is True


def utility_case(rng, draws=200):
    """Mean and standard error of the retain excess risk over noise draws."""
    model, ds = random_instance(rng, n_max=40, d_max=8)
    budget = CertBudget(2.0, float(rng.uniform(0.1, min(1.0, ds.d))), float(10 ** rng.uniform(-2, 0)))
    forget = random_forget(rng, ds.n)
    base = RngHandle(int(rng.integers(1 << 30)))
    rep = pipeline_noisy_minimizer(model, ds, forget, budget, np.zeros(ds.d), base, verify=False, stride=0)
    star = oracle_minimizer(model, ds, forget)
    floor = losses.batch_risk(model, star, ds, forget)
    vals = np.array(
        [
            losses.batch_risk(model, perturb(rep.pre_noise_theta, rep.noise, base.child(k)), ds, forget) - floor
            for k in range(draws)
        ]
    )
    return vals.mean(), vals.std(ddof=1) / math.sqrt(draws), budget.alpha_emp


def test_utility_chain_sample():
    rng = np.random.default_rng(9)
    for _ in range(10):
        m, se, alpha = utility_case(rng)
        assert m <= alpha + 3 * se


def test_certificate_at_full_regression_scale():
    rng = RngHandle(11)
    ds, _ = scenarios.synthetic_regression(10_000, 100, rng.child(0))
    forget = ForgetSpec.of(np.sort(rng.child(1).generator.choice(ds.n, 20, replace=False)))
    model = losses.ridge(ds, 1.0)
    rep = pipeline_noisy_minimizer(model, ds, forget, CertBudget(2.0, 1.0, 0.1), np.zeros(100), rng.child(2), stride=0)
    assert rep.certificate.verified and rep.certificate.satisfied
