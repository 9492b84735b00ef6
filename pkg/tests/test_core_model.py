import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from drcontract import core_model as cm
from drcontract.core_model import DomainError


def params_2u(**kw):
    base = dict(T=1.0, kappa=5.0, theta=2.0, h=0.0, p=1.0, r=0.1,
                mu=(2.0, 5.0), lam=(0.5, 0.1), sigma=(5.0, 2.0))
    base.update(kw)
    return cm.ModelParams(**base)


def single(lam=1.0, sigma=1.0, eps=0.1, **kw):
    return cm.ModelParams(T=1.0, kappa=1.0, theta=1.0, h=0.0, p=1.0, r=0.1,
                          mu=(1.0,), lam=(lam,), sigma=(sigma,), eps=eps, **kw)


# parameters

def test_nominal_derived_quantities(nominal):
    assert nominal.delta == pytest.approx(-55.44)
    assert nominal.mu_bar == 9.3e-5
    assert nominal.sigma_sq == pytest.approx(0.085 ** 2)
    assert nominal.rho == pytest.approx(0.0057 * 0.006 / 0.0117)
    assert nominal.l0 == 0.0 and math.copysign(1, nominal.l0) == 1
    assert nominal.A >= 10 * abs(nominal.delta) * nominal.T


def test_reservation_certainty_equivalent():
    p = params_2u(r0=-math.exp(-0.1 * 3.0))
    assert p.l0 == pytest.approx(3.0)
    assert p.with_l0(-2.0).l0 == pytest.approx(-2.0)


@pytest.mark.parametrize("bad", [
    dict(T=0.0), dict(p=0.0), dict(r=-1.0), dict(h=-1.0), dict(mu=(0.0, 1.0)),
    dict(lam=(1.0,)), dict(eps=1.0), dict(a_max=0.0), dict(r0=0.5), dict(delta=1.0),
    dict(kappa=float("nan")),
])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(DomainError):
        params_2u(**bad)


def test_replace_keeps_delta_consistent(nominal):
    q = nominal.replace(delta=-10.0)
    assert q.kappa == nominal.kappa and q.delta == pytest.approx(-10.0)
    q = nominal.replace(theta=20.0, delta=3.0)
    assert q.kappa == pytest.approx(23.0)
    q = nominal.replace(kappa=1.0)
    assert q.delta == pytest.approx(1.0 - nominal.theta)


def test_effort_bounds(two_usage):
    cm.Effort(a=(0.0, 1.0), b=(1.0, two_usage.eps), params=two_usage)
    with pytest.raises(DomainError):
        cm.Effort(a=(-1.0, 0.0), b=(1.0, 1.0), params=two_usage)
    with pytest.raises(DomainError):
        cm.Effort(a=(0.0, 0.0), b=(1.0, 0.5 * two_usage.eps), params=two_usage)


def test_split_usages_preserves_aggregates(nominal):
    q = cm.split_usages(nominal, (0.125, 0.125, 0.5, 0.25))
    assert q.mu_bar == pytest.approx(nominal.mu_bar)
    assert q.sigma_sq == pytest.approx(nominal.sigma_sq)
    assert sum(q.lam) == pytest.approx(nominal.lam[0])
    with pytest.raises(DomainError):
        cm.split_usages(nominal, (0.5, 0.6))


# costs

def test_cost_drift_examples():
    p = params_2u()
    assert cm.cost_drift(p, (0.0, 0.0)) == 0.0
    assert cm.cost_drift(p, (2.0, 5.0)) == pytest.approx(3.5)
    with pytest.raises(DomainError):
        cm.cost_drift(p, (-0.1, 0.0))


def test_cost_drift_matches_loop(nominal):
    rng = np.random.default_rng(1)
    for a in rng.uniform(0, 1e-2, 20):
        assert cm.cost_drift(nominal, (a,)) == pytest.approx(0.5 * a * a / 9.3e-5, rel=1e-12)


def test_cost_vol_examples():
    p = params_2u()
    assert cm.cost_vol(p, (1.0, 1.0)) == 0.0
    assert cm.cost_vol(p, (0.5, 1.0)) == pytest.approx(50.0)
    for bad in ((0.0, 1.0), (1.1, 1.0)):
        with pytest.raises(DomainError):
            cm.cost_vol(p, bad)


def test_cost_vol_matches_loop():
    p = params_2u()
    rng = np.random.default_rng(2)
    for b in rng.uniform(p.eps, 1, (20, 2)):
        ref = sum(s * s / l * (1 / bj - 1) for s, l, bj in zip(p.sigma, p.lam, b))
        assert cm.cost_vol(p, b) == pytest.approx(ref, rel=1e-12)


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_cost_vol_decreasing(b1, b2):
    p = single()
    lo, hi = sorted((b1, b2))
    assert cm.cost_vol(p, (lo,)) >= cm.cost_vol(p, (hi,))


def test_sigma_scaling():
    p = params_2u()
    q = p.replace(sigma=(10.0, 4.0))
    b = np.array([0.3, 0.7])
    assert cm.vol_sq(q, b) == pytest.approx(4 * cm.vol_sq(p, b))
    np.testing.assert_allclose(cm.sigma_of(q, b), 2 * cm.sigma_of(p, b))


# best responses

def test_best_response_drift_examples():
    p = params_2u(a_max=10.0)
    np.testing.assert_array_equal(cm.best_response_drift(p, 3.0), [0.0, 0.0])
    np.testing.assert_allclose(cm.best_response_drift(p, -1.0), [2.0, 5.0])
    np.testing.assert_allclose(cm.best_response_drift(params_2u(a_max=0.5), -1.0), [1.0, 2.5])


def test_best_response_vol_examples():
    p = single(lam=1.0, eps=0.1)
    assert cm.best_response_vol(p, 0.0)[0] == 1.0
    assert cm.best_response_vol(p, -4.0)[0] == pytest.approx(0.5)
    assert cm.best_response_vol(p, -1e6)[0] == pytest.approx(0.1)


@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
def test_best_responses_monotone(g1, g2):
    p = params_2u()
    lo, hi = sorted((g1, g2))
    assert np.all(cm.best_response_vol(p, lo) <= cm.best_response_vol(p, hi))
    assert np.all(cm.best_response_drift(p, lo) >= cm.best_response_drift(p, hi))
    b = cm.best_response_vol(p, lo)
    assert np.all((b >= p.eps) & (b <= 1))


# Hamiltonians

def test_hamiltonian_mean_examples():
    p = cm.ModelParams(T=1, kappa=1, theta=1, h=0, p=1, r=0.1, mu=(3.0, 4.0), lam=(1,), sigma=(1,))
    assert cm.hamiltonian_mean(p, 2.0) == 0.0
    assert cm.hamiltonian_mean(p, -1.0) == pytest.approx(3.5)


@pytest.mark.parametrize("z", [-3.0, -1.0, -0.3, 0.0, 0.7])
def test_hamiltonian_mean_grid_oracle(z):
    p = params_2u(a_max=2.0)
    a1 = np.linspace(0, p.mu[0] * p.A, 1001)
    a2 = np.linspace(0, p.mu[1] * p.A, 1001)
    A1, A2 = np.meshgrid(a1, a2, indexing="ij")
    vals = (A1 + A2) * z + 0.5 * (A1 ** 2 / p.mu[0] + A2 ** 2 / p.mu[1])
    assert cm.hamiltonian_mean(p, z) == pytest.approx(-vals.min(), abs=1e-6)


def test_hamiltonian_vol_examples():
    p = single(sigma=2.0)
    assert cm.hamiltonian_vol(p, 0.0) == 0.0
    assert cm.hamiltonian_vol(p, 1.0) == pytest.approx(2.0)


@pytest.mark.parametrize("gamma", [-0.5, -3.0, -40.0, -700.0])
def test_hamiltonian_vol_grid_oracle(gamma):
    # the objective separates across usages, so the product-grid minimum is
    # the sum of per-axis grid minima
    p = params_2u(eps=0.05)
    b = np.linspace(p.eps, 1.0, 1_000_001)
    ref = -0.5 * sum(np.min(s * s / lam * (1 / b - 1) - gamma * s * s * b)
                     for s, lam in zip(p.sigma, p.lam))
    assert cm.hamiltonian_vol(p, gamma) == pytest.approx(ref, abs=1e-6, rel=1e-6)


@given(st.floats(-1e3, 1e3))
def test_hamiltonian_vol_bounded_by_no_effort(gamma):
    p = params_2u()
    assert cm.hamiltonian_vol(p, gamma) <= 0.5 * max(gamma, 0.0) * p.sigma_sq + 1e-9


@given(st.floats(-50.0, 50.0))
def test_drift_envelope_attained(z):
    p = params_2u()
    a = cm.best_response_drift(p, z)
    assert cm.hamiltonian_mean(p, z) + z * a.sum() + cm.cost_drift(p, a) == pytest.approx(0.0, abs=1e-10)


@given(st.floats(-1e5, 1e5))
def test_vol_envelope_attained(gamma):
    p = params_2u()
    b = cm.best_response_vol(p, gamma)
    lhs = -2 * cm.hamiltonian_vol(p, gamma)
    rhs = cm.cost_vol(p, b) - gamma * cm.vol_sq(p, b)
    assert lhs == pytest.approx(rhs, abs=1e-10, rel=1e-12)


def test_hamiltonian_mean_beyond_bound_is_envelope():
    p = params_2u(a_max=0.5)
    z = -2.0
    a = cm.best_response_drift(p, z)
    assert cm.hamiltonian_mean(p, z) == pytest.approx(-(z * a.sum() + cm.cost_drift(p, a)))


# volatility-cost envelope

def test_vol_cost_envelope_examples():
    p = single(lam=1.0, sigma=1.0, eps=0.1)
    assert cm.vol_cost_envelope(p, 0.0) == 0.0
    assert cm.vol_cost_envelope(p, 4.0) == pytest.approx(3.0)
    # last branch: q >= eps^-2
    assert cm.vol_cost_envelope(p, 400.0) == pytest.approx(400 * 0.1 + 10 - 1)


@pytest.mark.parametrize("q", [0.05, 1.7, 9.0, 150.0, 5e3])
def test_vol_cost_envelope_grid_oracle(q):
    p = params_2u(eps=0.05)
    gam = -np.concatenate([[0.0], np.geomspace(1e-4, 1e6, 200001)])
    b = cm.best_response_vol(p, gam)
    f0 = q * cm.vol_sq(p, b) + cm.cost_vol(p, b)
    assert cm.vol_cost_envelope(p, q) == pytest.approx(f0.min(), rel=1e-6)


@given(st.floats(-10.0, 1e6))
def test_vol_cost_envelope_identity(q):
    p = params_2u()
    assert cm.vol_cost_envelope(p, q) == pytest.approx(-2 * cm.hamiltonian_vol(p, -q), rel=1e-12, abs=1e-12)


@given(st.floats(0.0, 1e5), st.floats(0.0, 1e5))
def test_vol_cost_envelope_monotone(q1, q2):
    p = params_2u()
    lo, hi = sorted((q1, q2))
    assert cm.vol_cost_envelope(p, lo) <= cm.vol_cost_envelope(p, hi)


def test_eta_zero_unless_bound_binds():
    p = params_2u(a_max=1.0)
    assert cm.eta_a(p, -0.5, 0.3) == 0.0
    assert cm.eta_a(p, -3.0, 0.3) == pytest.approx((0.3 + 2.0) ** 2 - 0.09)
