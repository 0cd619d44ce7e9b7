"""Shared result type and linear-Gaussian posterior solve."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

__all__ = ["EstimateReport", "gaussian_posterior", "PosteriorSolveError", "relative_change"]


class PosteriorSolveError(np.linalg.LinAlgError):
    """The posterior precision matrix was not numerically positive definite, even with jitter."""


@dataclass
class EstimateReport:
    """
    Output of every estimator.

    ``h_hat`` always equals ``dict_full.matrix @ alpha_hat`` for the
    dictionary-based estimators. The Wiener-filter baseline has no
    coefficient vector and reports an empty ``alpha_hat``.
    """

    alpha_hat: np.ndarray
    h_hat: np.ndarray
    iterations_used: int
    converged: bool
    residual_history: np.ndarray
    lambda_hat: float
    state: Optional[object] = field(default=None, repr=False)


def relative_change(new, old) -> float:
    return float(np.linalg.norm(new - old) / max(np.linalg.norm(old), 1e-12))


def gaussian_posterior(gram, phi_h_y, noise_precision, prior_precision, jitter=1e-10):
    """
    Posterior of ``alpha`` in ``y = Phi alpha + w`` with ``w ~ CN(0, I/lambda)``
    and ``alpha ~ CN(0, diag(1/prior_precision))``.

    Parameters
    ----------
    gram : (K, K) complex ndarray
        ``Phi^H Phi`` restricted to the components of interest.
    phi_h_y : (K,) complex ndarray
        ``Phi^H y`` restricted likewise.
    noise_precision : float
    prior_precision : (K,) float ndarray
    jitter : float
        On a failed Cholesky factorization, ``jitter * trace / K`` is added
        to the diagonal and the factorization retried once.

    Returns
    -------
    mean : (K,) complex ndarray
    cov : (K, K) complex ndarray
        ``(lambda Phi^H Phi + diag(prior_precision))^{-1}``.
    """
    k = gram.shape[0]
    if k == 0:
        return np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex)
    precision = noise_precision * gram
    precision[np.diag_indices(k)] = precision.diagonal().real + prior_precision
    potrf, potri = linalg.get_lapack_funcs(("potrf", "potri"), (precision,))
    chol, info = potrf(precision, lower=True, clean=False, overwrite_a=False)
    if info != 0:
        bump = jitter * precision.diagonal().real.sum() / k
        precision[np.diag_indices(k)] += bump
        chol, info = potrf(precision, lower=True, clean=False, overwrite_a=False)
        if info != 0:
            raise PosteriorSolveError("posterior precision not positive definite after jitter")
    inv, info = potri(chol, lower=True, overwrite_c=True)
    if info != 0:
        raise PosteriorSolveError(f"posterior covariance inversion failed (info={info})")
    # potri fills the lower triangle only
    cov = np.tril(inv) + np.tril(inv, -1).conj().T
    mean = noise_precision * (cov @ phi_h_y)
    return mean, cov
