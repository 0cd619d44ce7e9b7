"""
Reference channel estimators: l1-regularized least squares solved by an
accelerated proximal gradient method, EM-based sparse Bayesian learning
(RVM-style), and a robust LMMSE interpolator designed for a uniform
power-delay profile.
"""

import numpy as np
from scipy import linalg

from ..dictionary import Dictionary, PilotPattern
from .common import EstimateReport, gaussian_posterior, relative_change
from .vmp import InitializationError

__all__ = [
    "soft_threshold",
    "lasso_objective",
    "power_iteration",
    "estimate_lasso",
    "estimate_rvm",
    "uniform_pdp_correlation",
    "estimate_rwf",
]


def soft_threshold(z, threshold):
    """Complex soft threshold: shrink the modulus by ``threshold``, keep the phase."""
    z = np.asarray(z)
    mag = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > threshold, 1.0 - threshold / mag, 0.0)
    return scale * z


def lasso_objective(alpha, phi, y, kappa) -> float:
    """``||y - Phi alpha||^2 + kappa ||alpha||_1``."""
    r = y - phi @ alpha
    return float(np.vdot(r, r).real + kappa * np.sum(np.abs(alpha)))


def power_iteration(gram, iters: int = 500, rtol: float = 1e-12, seed: int = 0) -> float:
    """Largest eigenvalue of a Hermitian PSD matrix."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(gram.shape[0]) + 1j * rng.standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = gram @ v
        new = float(np.vdot(v, w).real)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        if abs(new - est) <= rtol * abs(new):
            est = new
            break
        est = new
    return max(est, float(np.linalg.norm(gram @ v)))


def estimate_lasso(
    y,
    dict_pilots: Dictionary,
    dict_full: Dictionary,
    kappa: float = 2.0,
    max_iters: int = 5000,
    rtol: float = 1e-10,
) -> EstimateReport:
    """
    Minimize ``||y - Phi alpha||^2 + kappa ||alpha||_1`` with FISTA.

    The step is ``1 / (2 * lmax)`` where ``lmax`` is the largest eigenvalue
    of ``Phi^H Phi`` (power iteration), so the prox threshold is
    ``kappa / (2 * lmax)``. Iteration stops once the relative objective
    decrease falls below ``rtol`` or after ``max_iters`` steps.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    y = np.asarray(y, dtype=complex)
    phi = dict_pilots.matrix
    phi_h = phi.conj().T
    gram = phi_h @ phi
    phi_h_y = phi_h @ y
    lmax = power_iteration(gram)
    step = 1.0 / (2.0 * lmax)
    thresh = kappa * step

    L = phi.shape[1]
    alpha = np.zeros(L, dtype=complex)
    z = alpha.copy()
    t = 1.0
    obj = lasso_objective(alpha, phi, y, kappa)
    history = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        grad = 2.0 * (gram @ z - phi_h_y)
        new = soft_threshold(z - step * grad, thresh)
        new_obj = lasso_objective(new, phi, y, kappa)
        if new_obj > obj:
            # restart momentum on an objective increase
            t = 1.0
            z = alpha
            grad = 2.0 * (gram @ z - phi_h_y)
            new = soft_threshold(z - step * grad, thresh)
            new_obj = lasso_objective(new, phi, y, kappa)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = new + ((t - 1.0) / t_next) * (new - alpha)
        decrease = (obj - new_obj) / max(abs(obj), np.finfo(float).tiny)
        history.append(decrease)
        alpha, obj, t = new, new_obj, t_next
        if 0.0 <= decrease < rtol:
            converged = True
            break
    return EstimateReport(
        alpha_hat=alpha,
        h_hat=dict_full.matrix @ alpha,
        iterations_used=it,
        converged=converged,
        residual_history=np.asarray(history),
        lambda_hat=float("nan"),
    )


def estimate_rvm(
    y,
    dict_pilots: Dictionary,
    dict_full: Dictionary,
    max_iters: int = 200,
    tol: float = 1e-6,
    prune_below: float = 1e-12,
    lambda_max: float = 1e12,
) -> EstimateReport:
    """
    EM sparse Bayesian learning with per-component prior variances.

    E-step: Gaussian posterior of alpha given ``gamma`` and ``lambda``.
    M-step: ``gamma_l = |alpha_l|^2 + Sigma_ll`` and
    ``lambda = M / (||y - Phi alpha||^2 + trace(Phi Sigma Phi^H))``.
    Initialized like the VMP estimators (``gamma_l = L``,
    ``lambda = 1 / mean|y|^2``). Components with ``gamma_l < prune_below``
    are removed.
    """
    y = np.asarray(y, dtype=complex)
    phi = dict_pilots.matrix
    M, L = phi.shape
    alpha = np.zeros(L, dtype=complex)
    if not np.any(y):
        return EstimateReport(alpha, dict_full.matrix @ alpha, 0, True, np.zeros(0), lambda_max)
    power = float(np.mean(np.abs(y) ** 2))
    if not power > 0:
        raise InitializationError("zero-energy observation")
    gram = phi.conj().T @ phi
    phi_h_y = phi.conj().T @ y
    gamma = np.full(L, float(L))
    lam = 1.0 / power
    active = np.ones(L, dtype=bool)
    history = []
    converged = False
    it = 0
    second = np.zeros(L)
    for it in range(1, max_iters + 1):
        act = np.flatnonzero(active)
        mean_a, cov_a = gaussian_posterior(gram[np.ix_(act, act)], phi_h_y[act], lam, 1.0 / gamma[act])
        previous = alpha
        alpha = np.zeros(L, dtype=complex)
        alpha[act] = mean_a
        diag = cov_a.diagonal().real
        second = np.zeros(L)
        second[act] = np.abs(mean_a) ** 2 + diag
        resid = y - phi[:, act] @ mean_a
        energy = float(np.vdot(resid, resid).real + np.sum(cov_a * gram[np.ix_(act, act)].T).real)
        lam = min(M / energy, lambda_max) if energy > 0 else lambda_max
        gamma = np.where(active, second, gamma)
        dead = active & (gamma < prune_below)
        if np.any(dead):
            active &= ~dead
            alpha[dead] = 0.0
        change = relative_change(alpha, previous)
        history.append(change)
        if change < tol:
            converged = True
            break
    return EstimateReport(
        alpha_hat=alpha,
        h_hat=dict_full.matrix @ alpha,
        iterations_used=it,
        converged=converged,
        residual_history=np.asarray(history),
        lambda_hat=lam,
        state={"gamma": np.where(active, gamma, 0.0), "second_moment": second, "active": active},
    )


def uniform_pdp_correlation(freqs_a, freqs_b, tau_max: float) -> np.ndarray:
    """
    Frequency correlation ``E[h(f) h(f')^*]`` for a unit-power uniform
    power-delay profile on ``[0, tau_max]``:
    ``exp(-j pi (f - f') tau_max) sinc((f - f') tau_max)``.
    """
    df = np.subtract.outer(np.asarray(freqs_a, dtype=float), np.asarray(freqs_b, dtype=float))
    x = df * tau_max
    return np.exp(-1j * np.pi * x) * np.sinc(x)


def estimate_rwf(y, pattern: PilotPattern, N: int, design_snr: float, tau_max: float) -> EstimateReport:
    """
    Robust Wiener (LMMSE) interpolation from pilots to all N subcarriers.

    ``h_hat = R_all,p (R_p,p + I / design_snr)^{-1} y`` with correlations of
    a uniform power-delay profile over ``[0, tau_max]``. ``design_snr`` is
    linear (not dB). No coefficient vector exists, so ``alpha_hat`` is empty.
    """
    if not design_snr > 0:
        raise ValueError("design_snr must be positive")
    if N != pattern.num_subcarriers:
        raise ValueError("N must match the pilot pattern")
    y = np.asarray(y, dtype=complex)
    f_p = pattern.pilot_frequencies()
    f_all = pattern.subcarrier_frequencies()
    r_pp = uniform_pdp_correlation(f_p, f_p, tau_max)
    r_ap = uniform_pdp_correlation(f_all, f_p, tau_max)
    a = r_pp + np.eye(f_p.size) / design_snr
    try:
        w = linalg.cho_solve(linalg.cho_factor(a, lower=True, check_finite=False), y, check_finite=False)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("regularized pilot correlation matrix is singular") from exc
    return EstimateReport(
        alpha_hat=np.zeros(0, dtype=complex),
        h_hat=r_ap @ w,
        iterations_used=1,
        converged=True,
        residual_history=np.zeros(0),
        lambda_hat=float(design_snr),
    )
