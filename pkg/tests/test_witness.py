import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from wiblock.analytic import (mean_service_rate, rate_matrix, service_variance_scv,
                              stationary_mean, witness_mean_queue, witness_stationary)
from wiblock.errors import DomainError, Unstable

from oracles import mh21_levels


def test_mean_service_rate():
    assert mean_service_rate(0.0, 3.0, 7.0) == 7.0
    assert mean_service_rate(0.3, 5.0, 5.0) == pytest.approx(5.0)
    assert mean_service_rate(0.5, 2.0, 1.0) == pytest.approx(4 / 3)
    with pytest.raises(DomainError):
        mean_service_rate(1.5, 1.0, 1.0)


def test_scv_pinned_and_by_sampling():
    sigma2, scv = service_variance_scv(0.5, 2.0, 1.0)
    assert sigma2 == pytest.approx(0.6875, abs=1e-15)
    assert scv == pytest.approx(11 / 9, abs=1e-15)
    rng = np.random.default_rng(0)
    n = 10**7
    phase = rng.random(n) < 0.5
    x = rng.standard_exponential(n) / np.where(phase, 2.0, 1.0)
    var = x.var()
    # sample variance of a hyper-exponential: standard error ~ sqrt((m4 - s^4)/n)
    assert var == pytest.approx(0.6875, rel=5e-3)
    assert var / x.mean() ** 2 == pytest.approx(11 / 9, rel=5e-3)


def test_exponential_scv_is_one():
    assert service_variance_scv(0.4, 3.0, 3.0)[1] == pytest.approx(1.0, abs=1e-12)


def test_mm1_reduction():
    st_ = witness_mean_queue(0.5, 0.3, 1.0, 1.0)
    assert st_.L == pytest.approx(1.0, abs=1e-12)
    tau = witness_stationary(0.5, 0.3, 1.0, 1.0, tol=1e-12)
    m = np.arange(len(tau))
    assert np.allclose(tau, 0.5 * 0.5**m, atol=1e-9)


def test_pinned_case():
    st_ = witness_mean_queue(0.8, 0.5, 2.0, 1.0)
    assert st_.rho == pytest.approx(0.6)
    assert st_.L == pytest.approx(1.6, abs=1e-12)
    assert st_.L_g + st_.L_l == pytest.approx(st_.L)
    assert stationary_mean(0.8, 0.5, 2.0, 1.0) == pytest.approx(1.6, rel=1e-9)


def test_unstable_boundary():
    mu = mean_service_rate(0.5, 2.0, 1.0)
    with pytest.raises(Unstable):
        witness_mean_queue(mu, 0.5, 2.0, 1.0)
    with pytest.raises(Unstable):
        witness_stationary(mu * 1.01, 0.5, 2.0, 1.0)


def test_idle_witness():
    st_ = witness_mean_queue(0.0, 0.5, 2.0, 1.0)
    assert st_.L == 0.0
    assert np.array_equal(witness_stationary(0.0, 0.5, 2.0, 1.0), [1.0])


def test_stationary_prefix_attached():
    st_ = witness_mean_queue(0.8, 0.5, 2.0, 1.0, tol=1e-8)
    assert st_.stationary_prefix.sum() == pytest.approx(1.0, abs=1e-8)


def test_rate_matrix_solves_quadratic():
    lam, p, mu1, mu2 = 0.8, 0.5, 2.0, 1.0
    R = rate_matrix(lam, p, mu1, mu2)
    A0 = lam * np.eye(2)
    A1 = -np.diag([lam + mu1, lam + mu2])
    A2 = np.outer([mu1, mu2], [p, 1 - p])
    assert np.max(np.abs(A0 + R @ A1 + R @ R @ A2)) < 1e-10
    assert np.max(np.abs(np.linalg.eigvals(R))) < 1


def test_against_dense_ctmc():
    tau = witness_stationary(0.8, 0.5, 2.0, 1.0, tol=1e-13)
    ref = mh21_levels(0.8, 0.5, 2.0, 1.0, N=150)
    n = min(len(tau), 60)
    assert np.allclose(tau[:n], ref[:n], atol=1e-10)


params = st.tuples(st.floats(0.01, 0.99), st.floats(0.05, 20), st.floats(0.05, 20),
                   st.floats(0.01, 0.95))


@settings(max_examples=150, deadline=None)
@given(params)
def test_matrix_geometric_matches_mean_value(prm):
    p, mu1, mu2, rho = prm
    lam = rho * mean_service_rate(p, mu1, mu2)
    L = witness_mean_queue(lam, p, mu1, mu2).L
    assert stationary_mean(lam, p, mu1, mu2) == pytest.approx(L, rel=1e-6)
    tau = witness_stationary(lam, p, mu1, mu2, tol=1e-10)
    assert tau[0] == pytest.approx(1 - rho, abs=1e-9)
    assert np.all(tau >= -1e-14)
    assert tau.sum() <= 1 + 1e-9


@settings(max_examples=150, deadline=None)
@given(params)
def test_hyperexponential_scv_at_least_one(prm):
    p, mu1, mu2, _ = prm
    _, scv = service_variance_scv(p, mu1, mu2)
    assert scv >= 1 - 1e-12
    assume(abs(mu1 - mu2) > 1e-3 * max(mu1, mu2))
    assert scv > 1


@settings(max_examples=80, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.1, 10), st.floats(0.1, 10),
       st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_mean_queue_increases_with_load(p, mu1, mu2, r1, r2):
    mu = mean_service_rate(p, mu1, mu2)
    lo, hi = sorted((r1, r2))
    assume(hi - lo > 1e-6)
    assert witness_mean_queue(lo * mu, p, mu1, mu2).L < witness_mean_queue(hi * mu, p, mu1, mu2).L
