"""
Log-domain modified Bessel functions of the second kind and moments of the
Generalized Inverse Gaussian (GIG) distribution.

The GIG density used throughout the package is parametrized as

.. math::
    q(\\gamma) \\propto \\gamma^{p-1} \\exp(-r\\gamma - s/\\gamma)

with order ``p``, ``rate`` r (coefficient of gamma) and ``inverse_rate`` s
(coefficient of 1/gamma). Its moments are ratios of Bessel functions
:math:`K_\\nu(2\\sqrt{rs})`, which over- and underflow easily, so everything is
evaluated as differences of logarithms.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, kve, zeta

__all__ = [
    "GigParams",
    "ComponentCollapse",
    "log_bessel_k",
    "log_bessel_k_small",
    "log_bessel_k_logarg",
    "gig_moment",
    "gig_log_moment",
]

# below this Bessel argument moments use the power-law limits of K_nu
SMALL_ARG = 1e-12
# kve overflows below roughly 1e-305; log_bessel_k switches to the series there
TINY_ARG = 1e-280


class ComponentCollapse(ArithmeticError):
    """Raised when a GIG factor degenerates (inverse_rate == 0) for a negative moment."""


@dataclass(frozen=True)
class GigParams:
    """Parameters of a GIG density ``gamma**(order-1) * exp(-rate*gamma - inverse_rate/gamma)``."""

    order: float
    rate: float
    inverse_rate: float

    def __post_init__(self):
        if not np.isfinite(self.order):
            raise ValueError(f"GIG order must be finite, got {self.order}")
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"GIG rate must be finite and > 0, got {self.rate}")
        if not (np.isfinite(self.inverse_rate) and self.inverse_rate >= 0):
            raise ValueError(f"GIG inverse_rate must be finite and >= 0, got {self.inverse_rate}")


def _log_k_frac_series(nu, log_x):
    """
    Small-argument ``log K_nu(x)`` for ``0 <= nu < 1``.

    ``K_nu = (Gamma(1+nu) (x/2)^-nu - Gamma(1-nu) (x/2)^nu) / (2 nu)`` up to
    O(x^2) relative terms, rearranged so that nu -> 0 is smooth and nothing
    overflows for subnormal x. Only meaningful for x well below 1.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ell = np.minimum(log_x, np.log(1e-8)) - np.log(2.0)
        g_lo = gammaln(1.0 - nu)
        safe = np.where(nu == 0, 1.0, nu)
        diff = np.exp(g_lo) * np.expm1(gammaln(1.0 + nu) - g_lo) / (2.0 * safe)
        # odd part of Gamma(1 + nu) by Taylor series; gammaln near 1 is too coarse
        g3 = np.euler_gamma**3 + 0.5 * np.euler_gamma * np.pi**2 + 2.0 * zeta(3.0)
        diff = np.where(nu < 1e-4, -np.euler_gamma + nu * nu * g3 / 6.0, diff)
        mean = 0.5 * (np.exp(gammaln(1.0 + nu)) + np.exp(g_lo))
        # cosh and sinh with exp(-nu ell) / 2 factored out (ell < 0)
        inner = diff * (1.0 + np.exp(2.0 * nu * ell)) - mean * np.expm1(2.0 * nu * ell) / safe
        log_val = -nu * ell - np.log(2.0) + np.log(inner)
        return np.where(nu == 0, np.log(-np.euler_gamma - ell), log_val)


def _prepare(order, arg, name):
    nu = np.abs(np.asarray(order, dtype=float))
    x = np.asarray(arg, dtype=float)
    if not (np.all(np.isfinite(nu)) and np.all(np.isfinite(x))):
        raise ValueError(f"{name} requires finite order and argument")
    if np.any(x <= 0):
        raise ValueError(f"{name} requires arg > 0")
    return np.broadcast_arrays(nu, x)


def _log_bessel_k(nu, log_x, series):
    """Shared core on ``log x``; ``series`` marks entries evaluated by the small-argument series."""
    steps = np.floor(nu)
    frac = nu - steps
    # kve is NaN for subnormal orders; K is even in nu, so the error is O(nu^2)
    frac = np.where(frac < 1e-150, 0.0, frac)
    x = np.exp(np.where(series, 0.0, log_x))
    out = np.where(series, _log_k_frac_series(frac, log_x), np.log(kve(frac, x)) - x)
    n_max = int(steps.max()) if steps.size else 0
    if n_max > 0:
        # power-law ratio K_{frac+1}/K_frac is exact to O(x^2); kve(frac + 1)
        # overflows below ~1e-154
        low = series | (log_x < np.log(1e-100))
        lr_low = gammaln(frac + 1.0) - np.log(2.0) + (frac + 1.0) * (np.log(2.0) - log_x) - out
        ratio_x = np.where(low, 1.0, x)
        lr = np.where(low, lr_low, np.log(kve(frac + 1.0, ratio_x) / kve(frac, ratio_x)))
        mu = frac.copy()
        for k in range(n_max):
            out = out + np.where(steps > k, lr, 0.0)
            mu = mu + 1.0
            # K_{mu+1}/K_mu = K_{mu-1}/K_mu + 2 mu / x, in logs
            lr = np.logaddexp(-lr, np.log(2.0 * mu) - log_x)
    if out.ndim == 0:
        return float(out)
    return out


def log_bessel_k(order, arg):
    """
    Natural logarithm of the modified Bessel function of the second kind.

    The fractional part of the order is evaluated with the exponentially
    scaled ``scipy.special.kve`` (which neither over- nor underflows for
    orders in [0, 1] down to x ~ 1e-305; below ``TINY_ARG`` the two-term
    series is used), and the integer part is climbed with the forward
    recurrence ``K_{v+1} = K_{v-1} + (2v/x) K_v`` written for the log of
    ``K_{v+1}/K_v``. All terms of that recurrence are positive, so it is
    stable, and the result stays finite for any order and argument.

    Parameters
    ----------
    order : float or array_like
        Order nu (any finite real; ``K_{-nu} = K_nu``).
    arg : float or array_like
        Argument x > 0.

    Returns
    -------
    float or ndarray
        ``log K_nu(x)``, broadcast over the inputs.
    """
    nu, x = _prepare(order, arg, "log_bessel_k")
    return _log_bessel_k(nu, np.log(x), x < TINY_ARG)


def log_bessel_k_logarg(order, log_arg):
    """
    ``log K_nu(exp(log_arg))``, for arguments that would underflow when
    formed directly (e.g. ``2 sqrt(eta) |alpha|`` with subnormal alpha).
    """
    nu = np.abs(np.asarray(order, dtype=float))
    lx = np.asarray(log_arg, dtype=float)
    if not (np.all(np.isfinite(nu)) and np.all(np.isfinite(lx))):
        raise ValueError("log_bessel_k_logarg requires finite order and log argument")
    if np.any(lx > np.log(np.finfo(float).max)):
        raise ValueError("log_bessel_k_logarg argument overflows")
    nu, lx = np.broadcast_arrays(nu, lx)
    return _log_bessel_k(nu, lx, lx < np.log(TINY_ARG))


def log_bessel_k_small(order, arg):
    """
    Analytic small-argument form of ``log K_nu(x)``.

    The power-law limits ``K_0(x) ~ -log(x/2) - euler_gamma`` and
    ``K_nu(x) ~ Gamma(nu)/2 (2/x)^nu`` are kept together with the
    ``(x/2)^nu`` companion term for fractional orders, which matters when
    nu is close to an integer. Integer steps use the exact recurrence. The
    neglected terms are O(x^2 log x) relative, i.e. below rounding for the
    arguments under ``SMALL_ARG`` where it is used.
    """
    nu, x = _prepare(order, arg, "log_bessel_k_small")
    return _log_bessel_k(nu, np.log(x), np.ones(x.shape, dtype=bool))


def gig_log_moment(order, rate, inverse_rate, n):
    """
    Vectorized ``log <gamma^n>`` of GIG(order, rate, inverse_rate).

    Inputs broadcast against each other. Entries with ``inverse_rate == 0``
    use the Gamma(order, rate) limit, which exists only for ``n >= 0`` and
    ``order > 0``; otherwise :class:`ComponentCollapse` is raised.
    """
    p = np.asarray(order, dtype=float)
    r = np.asarray(rate, dtype=float)
    s = np.asarray(inverse_rate, dtype=float)
    n = np.asarray(n, dtype=float)
    p, r, s, n = np.broadcast_arrays(p, r, s, n)
    if not all(np.all(np.isfinite(v)) for v in (p, r, s, n)):
        raise ValueError("gig moment inputs must be finite")
    if np.any(r <= 0) or np.any(s < 0):
        raise ValueError("gig moment requires rate > 0 and inverse_rate >= 0")

    out = np.zeros(p.shape)
    degenerate = s == 0
    if np.any(degenerate):
        bad = degenerate & (n != 0) & ((n < 0) | (p <= 0))
        if np.any(bad):
            raise ComponentCollapse("GIG factor with inverse_rate = 0 has no finite moment of this order")
        d = degenerate & (n != 0)
        out[d] = gammaln(p[d] + n[d]) - gammaln(p[d]) - n[d] * np.log(r[d])

    proper = ~degenerate & (n != 0)
    if np.any(proper):
        pp, rr, ss, nn = p[proper], r[proper], s[proper], n[proper]
        z = 2.0 * np.sqrt(rr * ss)
        scale = 0.5 * nn * (np.log(ss) - np.log(rr))
        small = z < SMALL_ARG
        ratio = np.empty_like(z)
        if np.any(small):
            zs = z[small]
            ratio[small] = log_bessel_k_small(pp[small] + nn[small], zs) - log_bessel_k_small(pp[small], zs)
        if np.any(~small):
            zl = z[~small]
            ratio[~small] = log_bessel_k(pp[~small] + nn[~small], zl) - log_bessel_k(pp[~small], zl)
        out[proper] = scale + ratio
    if out.ndim == 0:
        return float(out)
    return out


def gig_moment(params: GigParams, n: float) -> float:
    """
    Closed-form moment ``<gamma^n>`` of a GIG distribution.

    ``(s/r)^{n/2} K_{p+n}(2 sqrt(r s)) / K_p(2 sqrt(r s))``, evaluated as an
    exponentiated difference of log-Bessel values.

    Raises
    ------
    ComponentCollapse
        If ``inverse_rate == 0`` and the moment diverges (``n < 0`` or
        ``order <= 0``); the caller decides whether to prune.
    """
    return float(np.exp(gig_log_moment(params.order, params.rate, params.inverse_rate, n)))
