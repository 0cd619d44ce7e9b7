"""
Quick oracle-backed checks of the numerical core, run by ``sbchan selftest``.

Each check compares the library against an independent computation
(quadrature, a dense linear solve, sampling or a closed form) on a handful
of cases. The full test suite is far more thorough; this is a smoke test
for an installed copy.
"""

import math
import time
from typing import Callable, List, NamedTuple

import numpy as np
from scipy import integrate

from .channel import ChannelParams, compute_power_scale
from .dictionary import SAMPLING_TIME, build_delay_grid, build_dictionary, equispaced_pilots
from .estimators import PosteriorState, estimate_lasso, expected_residual, run_vmp, soft_threshold, update_alpha
from .model import EstimatorConfig, log_prior_2L
from .specfun import GigParams, gig_moment, log_bessel_k


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str
    seconds: float


def _bessel_half_order():
    z = np.geomspace(0.01, 100, 200)
    exact = 0.5 * np.log(np.pi / (2 * z)) - z
    err = np.max(np.abs(np.exp(log_bessel_k(0.5, z) - exact) - 1))
    return err < 1e-10, f"max rel err {err:.2e}"


def _bessel_quadrature():
    worst = 0.0
    for nu, x in [(0.0, 0.3), (1.7, 2.0), (6.0, 15.0)]:
        # K_nu(x) e^x = int_0^inf exp(-x (cosh t - 1)) cosh(nu t) dt
        val, _ = integrate.quad(lambda t: np.exp(-x * (np.cosh(t) - 1)) * np.cosh(nu * t), 0, 12, epsabs=0, epsrel=1e-12, limit=200)
        worst = max(worst, abs(log_bessel_k(nu, x) - (math.log(val) - x)))
    return worst < 1e-10, f"max abs log err {worst:.2e}"


def _gig_quadrature():
    worst = 0.0
    for p, r, s, n in [(-1.0, 1.0, 1.0, -1.0), (0.5, 2.0, 0.3, 1.0), (-0.5, 10.0, 0.01, -1.0)]:

        def dens(t, k):
            return math.exp(k * t - r * math.exp(t) - s * math.exp(-t))

        peak = math.log((p + math.sqrt(p * p + 4 * r * s)) / (2 * r)) if p > 0 else math.log(math.sqrt(s / r))
        lo, hi = peak - 40, peak + 10
        num = integrate.quad(dens, lo, hi, args=(p + n,), epsabs=0, epsrel=1e-12, limit=400, points=[peak])[0]
        den = integrate.quad(dens, lo, hi, args=(p,), epsabs=0, epsrel=1e-12, limit=400, points=[peak])[0]
        worst = max(worst, abs(gig_moment(GigParams(p, r, s), n) / (num / den) - 1))
    return worst < 1e-8, f"max rel err {worst:.2e}"


def _laplace_reduction():
    r = np.linspace(0, 10, 101)
    eta = 2.5
    err = np.max(np.abs(log_prior_2L(r, 1.5, eta) - (math.log(2 * eta / math.pi) - 2 * math.sqrt(eta) * r)))
    return err < 1e-10, f"max abs err {err:.2e}"


def _random_state(rng, L, lam):
    return PosteriorState(
        alpha_mean=np.zeros(L, dtype=complex),
        alpha_cov=np.zeros((L, L), dtype=complex),
        gamma_inv_mean=np.exp(rng.uniform(-3, 3, L)),
        gamma_mean=np.ones(L),
        eta_mean=np.ones(L),
        lambda_mean=lam,
        active_set=np.ones(L, dtype=bool),
    )


def _gaussian_update():
    rng = np.random.default_rng(1)
    worst = 0.0
    for M, L in [(5, 3), (12, 20), (40, 60)]:
        phi = rng.standard_normal((M, L)) + 1j * rng.standard_normal((M, L))
        y = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        s = update_alpha(_random_state(rng, L, 1.7), phi, y)
        precision = 1.7 * phi.conj().T @ phi + np.diag(s.gamma_inv_mean)
        mean = np.linalg.solve(precision, 1.7 * phi.conj().T @ y)
        worst = max(worst, np.max(np.abs(s.alpha_mean - mean)) / np.max(np.abs(mean)))
    return worst < 1e-10, f"max rel err {worst:.2e}"


def _expected_residual():
    rng = np.random.default_rng(2)
    phi = rng.standard_normal((6, 10)) + 1j * rng.standard_normal((6, 10))
    y = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    s = update_alpha(_random_state(rng, 10, 2.0), phi, y)
    chol = np.linalg.cholesky(s.alpha_cov)
    z = (rng.standard_normal((10, 200000)) + 1j * rng.standard_normal((10, 200000))) / math.sqrt(2)
    e = np.sum(np.abs(y[:, None] - phi @ (s.alpha_mean[:, None] + chol @ z)) ** 2, axis=0)
    se = e.std(ddof=1) / math.sqrt(e.size)
    dev = abs(expected_residual(s, phi, y) - e.mean()) / se
    return dev < 4, f"{dev:.2f} standard errors"


def _lasso_orthonormal():
    from .dictionary import Dictionary

    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((20, 12)) + 1j * rng.standard_normal((20, 12)))
    y = 2 * (rng.standard_normal(20) + 1j * rng.standard_normal(20))
    d = Dictionary(q, None, None)
    err = np.max(np.abs(estimate_lasso(y, d, d, kappa=2.0).alpha_hat - soft_threshold(q.conj().T @ y, 1.0)))
    return err < 1e-8, f"max abs err {err:.2e}"


def _power_scale():
    rng = np.random.default_rng(4)
    p = ChannelParams()
    counts = rng.poisson(p.mean_paths, size=200000)
    delays = rng.uniform(0, p.tau_max, size=counts.sum())
    u = compute_power_scale(p.mean_paths, p.tau_max, p.decay)
    power = u * np.exp(-delays / p.decay) * rng.exponential(size=delays.size)
    mean = power.sum() / counts.size
    return abs(mean - 1) < 0.01, f"E[sum |beta|^2] = {mean:.4f}"


def _on_grid_recovery():
    pattern = equispaced_pilots(1200, 100)
    grid = build_delay_grid(144 * SAMPLING_TIME, 200)
    dp = build_dictionary(pattern, grid)
    df = build_dictionary(pattern, grid, "all_subcarriers")
    alpha = np.zeros(200, dtype=complex)
    alpha[[7, 60, 133]] = [1.0, 0.5j, -0.4]
    rep = run_vmp(dp.matrix @ alpha, dp, df, EstimatorConfig.vmp3l())
    h = df.matrix @ alpha
    nmse = np.sum(np.abs(rep.h_hat - h) ** 2) / np.sum(np.abs(h) ** 2)
    support = {int(k) for k in np.flatnonzero(np.abs(rep.alpha_hat) > 1e-3)}
    return support == {7, 60, 133} and nmse < 1e-6, f"NMSE {10 * math.log10(nmse):.1f} dB, support {sorted(support)}"


CHECKS: List[tuple] = [
    ("bessel K half-order closed form", _bessel_half_order),
    ("bessel K vs integral representation", _bessel_quadrature),
    ("GIG moments vs quadrature", _gig_quadrature),
    ("two-layer prior Laplace reduction", _laplace_reduction),
    ("Gaussian update vs dense solve", _gaussian_update),
    ("expected residual vs sampling", _expected_residual),
    ("LASSO orthonormal soft threshold", _lasso_orthonormal),
    ("channel power normalization", _power_scale),
    ("noiseless on-grid VMP-3L recovery", _on_grid_recovery),
]


def run_selftest(report: Callable[[CheckResult], None] = None) -> List[CheckResult]:
    """Run every check; exceptions count as failures."""
    results = []
    for name, fn in CHECKS:
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed selftest
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail, time.perf_counter() - start)
        results.append(res)
        if report is not None:
            report(res)
    return results
