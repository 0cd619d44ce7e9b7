"""
Hierarchical sparsity priors for a complex coefficient and the estimator
hyperparameter configuration.

Two-layer model:  alpha | gamma ~ CN(0, gamma),  gamma ~ Ga(epsilon, eta).
Three-layer model additionally draws eta ~ Ga(a, b).

The two-layer marginal has a closed form in terms of ``K_{epsilon-1}``; the
three-layer marginal involves Tricomi's confluent hypergeometric function and
is evaluated here by one-dimensional quadrature over the prior variance
instead, after integrating eta out analytically (which gives a beta-prime
density for gamma).

Densities are densities over the complex plane, so a proper prior satisfies
``2 pi * int_0^inf r p(r) dr = 1``. A density pole at the origin
(``epsilon <= 1``) is reported as ``+inf``, not clamped.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln

from .specfun import log_bessel_k_logarg

__all__ = [
    "EstimatorConfig",
    "log_prior_2L",
    "penalty_2L",
    "log_prior_3L",
    "QuadratureError",
]

POLE = np.inf


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested accuracy."""


@dataclass(frozen=True)
class EstimatorConfig:
    """
    Hyperparameters and iteration controls for the VMP estimators.

    A configuration is two-layer when ``eta_fixed`` is set and three-layer
    when it is ``None`` (then ``a`` and ``b`` are the Gamma shape/rate of the
    hyperprior on eta; scalars broadcast to all components).
    """

    epsilon: float = 0.0
    eta_fixed: Optional[float] = None
    a: object = 1.0
    b: object = 1e-6
    c: float = 0.0
    d: float = 0.0
    max_iters: int = 200
    tol: float = 1e-6
    prune_threshold: float = 1e12
    lambda_max: float = 1e12
    jitter: float = 1e-10

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.eta_fixed is not None and not self.eta_fixed > 0:
            raise ValueError("eta_fixed must be > 0")
        if self.eta_fixed is None:
            if np.any(np.asarray(self.a) <= 0) or np.any(np.asarray(self.b) <= 0):
                raise ValueError("three-layer hyperprior needs a > 0 and b > 0")
        if self.c < 0 or self.d < 0:
            raise ValueError("noise prior parameters c, d must be >= 0")
        if self.max_iters < 1 or not self.tol > 0 or not self.prune_threshold > 0:
            raise ValueError("max_iters >= 1, tol > 0 and prune_threshold > 0 required")

    @property
    def three_layer(self) -> bool:
        return self.eta_fixed is None

    @classmethod
    def vmp2l(cls, num_pilots: int, **kw) -> "EstimatorConfig":
        """Two-layer defaults: epsilon = 0, eta = number of pilots, c = d = 0."""
        return cls(eta_fixed=float(num_pilots), **kw)

    @classmethod
    def vmp3l(cls, **kw) -> "EstimatorConfig":
        """Three-layer defaults: epsilon = 0, a = 1, b = 1e-6, c = d = 0."""
        return cls(eta_fixed=None, **kw)

    def with_(self, **kw) -> "EstimatorConfig":
        return replace(self, **kw)


def _log_bessel_term(alpha_abs, epsilon, eta):
    """``log(|alpha|^(eps-1) K_{eps-1}(2 sqrt(eta) |alpha|))`` with its alpha -> 0 limit."""
    alpha_abs = np.asarray(alpha_abs, dtype=float)
    eta = np.asarray(eta, dtype=float)
    alpha_abs, eta = np.broadcast_arrays(alpha_abs, eta)
    nu = epsilon - 1.0
    out = np.empty(alpha_abs.shape)
    zero = alpha_abs == 0
    if np.any(zero):
        if nu <= 0:
            out[zero] = POLE
        else:
            # K_nu(z) ~ Gamma(nu)/2 (2/z)^nu
            out[zero] = gammaln(nu) - np.log(2.0) - 0.5 * nu * np.log(eta[zero])
    nz = ~zero
    if np.any(nz):
        log_a = np.log(alpha_abs[nz])
        # formed in logs: z underflows for subnormal alpha
        log_z = np.log(2.0) + 0.5 * np.log(eta[nz]) + log_a
        out[nz] = nu * log_a + log_bessel_k_logarg(nu, log_z)
    return out


def log_prior_2L(alpha_abs, epsilon: float, eta):
    """
    Log density of the two-layer prior at a complex coefficient of modulus ``alpha_abs``.

    ``p = 2 / (pi Gamma(eps)) * eta^((eps+1)/2) |alpha|^(eps-1) K_{eps-1}(2 sqrt(eta) |alpha|)``.
    For ``epsilon = 3/2`` this is the complex Laplace density
    ``(2 eta / pi) exp(-2 sqrt(eta) |alpha|)``.

    Returns ``+inf`` at ``alpha_abs = 0`` when ``epsilon <= 1`` (density pole).
    Vectorized over ``alpha_abs`` and ``eta``.
    """
    if not epsilon > 0:
        raise ValueError("log_prior_2L needs epsilon > 0 (Gamma(epsilon) normalization)")
    if np.any(np.asarray(eta) <= 0) or np.any(np.asarray(alpha_abs) < 0):
        raise ValueError("log_prior_2L needs eta > 0 and alpha_abs >= 0")
    const = np.log(2.0 / np.pi) - gammaln(epsilon) + 0.5 * (epsilon + 1.0) * np.log(eta)
    out = const + _log_bessel_term(alpha_abs, epsilon, eta)
    if np.ndim(out) == 0:
        return float(out)
    return out


def penalty_2L(alpha_abs_vec, epsilon: float, eta_vec) -> float:
    """
    Two-layer penalty ``Q = sum_l log(|alpha_l|^(eps-1) K_{eps-1}(2 sqrt(eta_l) |alpha_l|))``.

    The sum is stored with the sign as written, i.e. it grows with the log
    prior. For ``epsilon = 3/2`` and a common eta it equals
    ``const - 2 sqrt(eta) ||alpha||_1``, so a MAP objective of the form
    ``||y - Phi alpha||^2 + lambda^-1 * pen`` uses ``pen = -Q`` to recover the
    LASSO term ``+2 sqrt(eta) ||alpha||_1``.

    Any zero coefficient with ``epsilon <= 1`` makes the sum ``+inf`` (pole).
    """
    alpha_abs_vec = np.atleast_1d(np.asarray(alpha_abs_vec, dtype=float))
    eta_vec = np.asarray(eta_vec, dtype=float)
    if eta_vec.ndim and eta_vec.shape != alpha_abs_vec.shape:
        raise ValueError("alpha_abs_vec and eta_vec must have matching lengths")
    if np.any(eta_vec <= 0) or np.any(alpha_abs_vec < 0):
        raise ValueError("penalty_2L needs eta > 0 and alpha_abs >= 0")
    return float(np.sum(_log_bessel_term(alpha_abs_vec, epsilon, eta_vec)))


def _log_gamma_marginal(t, r2, epsilon, a, b):
    # log of CN(alpha|0,gamma) p(gamma) gamma at gamma = e^t, without constants;
    # p(gamma) = int Ga(gamma|eps,eta) Ga(eta|a,b) deta is beta-prime
    return (epsilon - 1.0) * t - r2 * np.exp(-t) - (epsilon + a) * np.logaddexp(t, np.log(b))


def log_prior_3L(alpha_abs: float, epsilon: float, a: float, b: float, rtol: float = 1e-10) -> float:
    """
    Log density of the three-layer prior at a coefficient of modulus ``alpha_abs``.

    With eta integrated out, gamma has density
    ``Gamma(eps+a) / (Gamma(eps) Gamma(a)) * b^a gamma^(eps-1) (gamma+b)^-(eps+a)``,
    and the remaining integral over gamma is done by adaptive quadrature in
    ``t = log(gamma)`` around the peak of the integrand.

    Raises
    ------
    QuadratureError
        If the quadrature error estimate exceeds ``1e-6`` relative.
    """
    if not (epsilon > 0 and a > 0 and b > 0):
        raise ValueError("log_prior_3L needs epsilon, a, b > 0")
    if alpha_abs < 0:
        raise ValueError("alpha_abs must be >= 0")
    const = gammaln(epsilon + a) - gammaln(epsilon) - gammaln(a) + a * np.log(b) - np.log(np.pi)
    r2 = float(alpha_abs) ** 2
    if r2 == 0:
        if epsilon <= 1:
            return POLE
        # int gamma^(eps-2) (gamma+b)^-(eps+a) dgamma = b^(-1-a) B(eps-1, a+1)
        return float(const - (1 + a) * np.log(b) + gammaln(epsilon - 1) + gammaln(a + 1) - gammaln(epsilon + a))

    def slope(t):
        return (epsilon - 1.0) + r2 * np.exp(-t) - (epsilon + a) / (1.0 + b * np.exp(-t))

    lo, hi = np.log(r2) - 1.0, np.log(r2) + 1.0
    while slope(lo) <= 0:
        lo -= 10.0
    while slope(hi) >= 0:
        hi += 10.0
    t_peak = optimize.brentq(slope, lo, hi, xtol=1e-14)
    f_peak = _log_gamma_marginal(t_peak, r2, epsilon, a, b)

    def drop(t):
        return _log_gamma_marginal(t, r2, epsilon, a, b) - f_peak + 80.0

    left = t_peak - 1.0
    while drop(left) > 0:
        left = t_peak - 2.0 * (t_peak - left)
    right = t_peak + 1.0
    while drop(right) > 0:
        right = t_peak + 2.0 * (right - t_peak)

    def integrand(t):
        return np.exp(_log_gamma_marginal(t, r2, epsilon, a, b) - f_peak)

    value, err = integrate.quad(integrand, left, right, points=[t_peak], epsabs=0.0, epsrel=rtol, limit=500)
    if not (value > 0 and err <= 1e-6 * value):
        raise QuadratureError(
            f"three-layer prior quadrature failed: value={value!r}, error={err!r}, "
            f"alpha_abs={alpha_abs}, epsilon={epsilon}, a={a}, b={b}"
        )
    return float(const + f_peak + np.log(value))
