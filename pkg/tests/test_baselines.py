import numpy as np
import pytest
from conftest import random_problem, wrap
from hypothesis import given, settings
from hypothesis import strategies as st

from sbchan.channel import ChannelRealization, frequency_response, observe_pilots
from sbchan.dictionary import SAMPLING_TIME, equispaced_pilots
from sbchan.estimators import (
    estimate_lasso,
    gaussian_posterior,
    estimate_rvm,
    estimate_rwf,
    lasso_objective,
    power_iteration,
    soft_threshold,
    uniform_pdp_correlation,
)

TAU_MAX = 144 * SAMPLING_TIME


def lasso_coordinate_descent(phi, y, kappa, sweeps=200000, tol=1e-15):
    """Cyclic complex coordinate descent on ||y - Phi a||^2 + kappa ||a||_1."""
    L = phi.shape[1]
    a = np.zeros(L, dtype=complex)
    r = y.astype(complex).copy()
    norms = np.sum(np.abs(phi) ** 2, axis=0)
    for _ in range(sweeps):
        biggest = 0.0
        for j in range(L):
            z = np.vdot(phi[:, j], r) + norms[j] * a[j]
            mag = abs(z)
            new = (1 - kappa / 2 / mag) * z / norms[j] if mag > kappa / 2 else 0.0
            delta = new - a[j]
            if delta != 0:
                r -= phi[:, j] * delta
                a[j] = new
                biggest = max(biggest, abs(delta))
        if biggest < tol:
            break
    return a


def test_soft_threshold_keeps_phase():
    z = np.array([3 * np.exp(0.7j), 0.5j, 0.0])
    out = soft_threshold(z, 1.0)
    assert out[0] == pytest.approx(2 * np.exp(0.7j), rel=1e-15)
    assert out[1] == 0 and out[2] == 0


def test_power_iteration_largest_eigenvalue():
    rng = np.random.default_rng(0)
    phi, _ = random_problem(rng, 30, 20)
    gram = phi.conj().T @ phi
    assert power_iteration(gram) == pytest.approx(np.linalg.eigvalsh(gram).max(), rel=1e-9)


def test_lasso_orthonormal_closed_form():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.standard_normal((16, 10)) + 1j * rng.standard_normal((16, 10)))
    y = 2 * (rng.standard_normal(16) + 1j * rng.standard_normal(16))
    rep = estimate_lasso(y, wrap(q), wrap(q), kappa=2.0)
    np.testing.assert_allclose(rep.alpha_hat, soft_threshold(q.conj().T @ y, 1.0), atol=1e-8)


def test_lasso_against_coordinate_descent():
    rng = np.random.default_rng(2)
    phi, y = random_problem(rng, 5, 8)
    y = 3 * y
    oracle = lasso_coordinate_descent(phi, y, 2.0)
    rep = estimate_lasso(y, wrap(phi), wrap(phi), kappa=2.0)
    assert rep.converged
    assert abs(lasso_objective(rep.alpha_hat, phi, y, 2.0) - lasso_objective(oracle, phi, y, 2.0)) < 1e-6


def test_lasso_unregularized_limit():
    rng = np.random.default_rng(3)
    phi, y = random_problem(rng, 5, 8)
    rep = estimate_lasso(y, wrap(phi), wrap(phi), kappa=1e-12)
    assert np.linalg.norm(y - phi @ rep.alpha_hat) < 1e-4 * np.linalg.norm(y)


def test_lasso_rejects_nonpositive_kappa():
    phi, y = random_problem(np.random.default_rng(0), 3, 4)
    with pytest.raises(ValueError):
        estimate_lasso(y, wrap(phi), wrap(phi), kappa=0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(2, 16), st.integers(0, 2**32 - 1), st.floats(0.1, 5))
def test_lasso_objective_not_above_zero_start(M, L, seed, kappa):
    rng = np.random.default_rng(seed)
    phi, y = random_problem(rng, M, L)
    rep = estimate_lasso(y, wrap(phi), wrap(phi), kappa=kappa)
    assert lasso_objective(rep.alpha_hat, phi, y, kappa) <= lasso_objective(np.zeros(L), phi, y, kappa) + 1e-12


def test_rvm_zero_observation():
    phi, _ = random_problem(np.random.default_rng(4), 6, 9)
    rep = estimate_rvm(np.zeros(6), wrap(phi), wrap(phi))
    assert not np.any(rep.alpha_hat) and rep.converged


def test_rvm_single_component_recovery(default_dicts):
    _, dp, df = default_dicts
    y = 0.8j * dp.matrix[:, 40]
    rep = estimate_rvm(y, dp, df)
    big = np.flatnonzero(np.abs(rep.alpha_hat) > 1e-3)
    np.testing.assert_array_equal(big, [40])
    assert abs(rep.alpha_hat[40] - 0.8j) < 1e-3


def test_rvm_fixed_point():
    rng = np.random.default_rng(5)
    phi, noise = random_problem(rng, 20, 30)
    y = phi[:, [2, 11]] @ np.array([1.0, 0.5j]) + 0.1 * noise
    tol = 1e-6
    rep = estimate_rvm(y, wrap(phi), wrap(phi), max_iters=5000, tol=tol)
    assert rep.converged
    g = rep.state["gamma"]
    a = np.flatnonzero(rep.state["active"])
    # one more E-step: the posterior second moments reproduce gamma
    gram = phi.conj().T @ phi
    mean, cov = gaussian_posterior(gram[np.ix_(a, a)], (phi.conj().T @ y)[a], rep.lambda_hat, 1.0 / g[a])
    second = np.abs(mean) ** 2 + cov.diagonal().real
    assert np.linalg.norm(second - g[a]) / np.linalg.norm(g) < tol


def test_uniform_pdp_unit_diagonal():
    f = np.arange(50) * 15e3
    r = uniform_pdp_correlation(f, f, TAU_MAX)
    np.testing.assert_allclose(r.diagonal(), 1.0, rtol=1e-15)
    np.testing.assert_allclose(r, r.conj().T, atol=1e-15)


def test_uniform_pdp_against_quadrature():
    from scipy import integrate

    df = 7 * 15e3
    re = integrate.quad(lambda t: np.cos(2 * np.pi * df * t) / TAU_MAX, 0, TAU_MAX, epsabs=0, epsrel=1e-12)[0]
    im = integrate.quad(lambda t: -np.sin(2 * np.pi * df * t) / TAU_MAX, 0, TAU_MAX, epsabs=0, epsrel=1e-12)[0]
    got = uniform_pdp_correlation([df], [0.0], TAU_MAX)[0, 0]
    assert got == pytest.approx(re + 1j * im, rel=1e-12)


def test_rwf_interpolation_identity():
    N = 64
    pattern = equispaced_pilots(N, N)
    f = pattern.subcarrier_frequencies()
    # response in the span of the assumed correlation (bandlimited to the PDP)
    r = uniform_pdp_correlation(f, f, TAU_MAX)
    v = np.random.default_rng(6).standard_normal(N)
    h = r @ v
    rep = estimate_rwf(h, pattern, N, 1e12, TAU_MAX)
    assert np.linalg.norm(rep.h_hat - h) < 1e-6 * np.linalg.norm(h)
    assert rep.alpha_hat.size == 0


def _flat_channel_rwf(snr):
    N, M = 1200, 100
    pattern = equispaced_pilots(N, M)
    h = frequency_response(ChannelRealization(1, np.array([0.0]), np.array([1.0 + 0j])), pattern.subcarrier_frequencies())
    y = observe_pilots(h[pattern.pilot_indices - 1], snr, np.random.default_rng(7)).y
    err = np.abs(estimate_rwf(y, pattern, N, snr, TAU_MAX).h_hat - h) ** 2
    return err, np.abs(h) ** 2, pattern


@pytest.mark.xfail(
    strict=True,
    reason=(
        "pilots start at subcarrier 1 with stride 12, so subcarriers 1190..1200 are extrapolated "
        "over ~0.8 of the inverse PDP width; their error stays near 0 dB at any SNR and caps the "
        "full-band NMSE near -22 dB (see the interior test below)"
    ),
)
def test_rwf_flat_channel_full_band():
    err, power, _ = _flat_channel_rwf(1e4)
    assert 10 * np.log10(err.sum() / power.sum()) < -30


def test_rwf_flat_channel_between_pilots():
    err, power, pattern = _flat_channel_rwf(1e4)
    span = slice(0, pattern.pilot_indices[-1])
    assert 10 * np.log10(err[span].sum() / power[span].sum()) < -30
    # the extrapolated edge is what breaks the full-band figure
    tail = slice(pattern.pilot_indices[-1], None)
    assert err[tail].mean() > 0.1


def test_rwf_errors():
    pattern = equispaced_pilots(8, 4)
    with pytest.raises(ValueError):
        estimate_rwf(np.ones(4), pattern, 8, 0.0, TAU_MAX)
    with pytest.raises(ValueError):
        estimate_rwf(np.ones(4), pattern, 9, 1.0, TAU_MAX)
