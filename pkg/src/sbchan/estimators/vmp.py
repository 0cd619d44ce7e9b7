"""
Variational message passing for sparse Bayesian channel estimation.

The auxiliary density factorizes as q(alpha) q(gamma) q(eta) q(lambda):

* q(alpha) is complex Gaussian with covariance
  ``(<lambda> Phi^H Phi + diag(<1/gamma>))^{-1}`` and mean
  ``<lambda> Sigma Phi^H y``;
* each q(gamma_l) is GIG with order ``epsilon - 1``, rate ``<eta_l>`` and
  inverse rate ``<|alpha_l|^2>``;
* each q(eta_l) is Ga(epsilon + a_l, <gamma_l> + b_l) (three-layer only;
  the two-layer model pins eta at a fixed value);
* q(lambda) is Ga(M + c, <||y - Phi alpha||^2> + d).

Factors are refreshed round-robin in the order alpha, gamma, eta, lambda.
Components whose ``<1/gamma_l>`` exceeds the pruning threshold are removed
from the active set and report a zero coefficient.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from ..dictionary import Dictionary
from ..model import EstimatorConfig
from ..specfun import gig_log_moment
from .common import EstimateReport, gaussian_posterior, relative_change

__all__ = [
    "PosteriorState",
    "InitializationError",
    "vmp_init",
    "update_alpha",
    "update_gamma",
    "update_eta",
    "update_lambda",
    "expected_residual",
    "run_vmp",
]

log = logging.getLogger(__name__)


class InitializationError(ValueError):
    """The observation carries no energy, so the noise precision cannot be initialized."""


@dataclass(frozen=True, eq=False)
class PosteriorState:
    """
    Full VMP iterate.

    Vectors have length L (all dictionary columns). ``alpha_cov`` is L x L
    with zero rows/columns for pruned components.
    """

    alpha_mean: np.ndarray
    alpha_cov: np.ndarray
    gamma_inv_mean: np.ndarray
    gamma_mean: np.ndarray
    eta_mean: np.ndarray
    lambda_mean: float
    active_set: np.ndarray

    @property
    def alpha_second_moment(self) -> np.ndarray:
        """``<|alpha_l|^2> = |alpha_hat_l|^2 + Sigma_ll``."""
        return np.abs(self.alpha_mean) ** 2 + self.alpha_cov.diagonal().real

    def replace(self, **kw) -> "PosteriorState":
        return replace(self, **kw)


def _broadcast(value, L):
    return np.broadcast_to(np.asarray(value, dtype=float), (L,)).copy()


def vmp_init(y, L: int, config: EstimatorConfig) -> PosteriorState:
    """
    Initial iterate: ``<lambda>`` is the inverse sample power of ``y``,
    ``<1/gamma_l> = 1/L``, and ``<eta_l>`` is either the fixed two-layer
    value or, for three layers, one eta update computed with
    ``<gamma_l> = L`` (the reciprocal of the initial ``<1/gamma_l>``).
    """
    y = np.asarray(y, dtype=complex)
    M = y.size
    if M < 1 or L < 1:
        raise ValueError("need at least one observation and one dictionary column")
    power = float(np.mean(np.abs(y) ** 2))
    if not power > 0:
        raise InitializationError("zero-energy observation: sample variance is 0")
    gamma_inv = np.full(L, 1.0 / L)
    gamma_mean = 1.0 / gamma_inv
    state = PosteriorState(
        alpha_mean=np.zeros(L, dtype=complex),
        alpha_cov=np.zeros((L, L), dtype=complex),
        gamma_inv_mean=gamma_inv,
        gamma_mean=gamma_mean,
        eta_mean=np.full(L, float(config.eta_fixed)) if not config.three_layer else np.ones(L),
        lambda_mean=1.0 / power,
        active_set=np.ones(L, dtype=bool),
    )
    if config.three_layer:
        state = update_eta(state, config)
    return state


def _dict_terms(dictionary, y):
    phi = dictionary.matrix if isinstance(dictionary, Dictionary) else np.asarray(dictionary)
    return phi, phi.conj().T @ phi, phi.conj().T @ y


def update_alpha(state: PosteriorState, dictionary, y, *, gram=None, phi_h_y=None, jitter=1e-10) -> PosteriorState:
    """
    Refresh q(alpha) on the active set.

    ``gram`` (``Phi^H Phi``) and ``phi_h_y`` may be passed in to avoid
    recomputing them every iteration.
    """
    y = np.asarray(y, dtype=complex)
    if gram is None or phi_h_y is None:
        _, gram, phi_h_y = _dict_terms(dictionary, y)
    L = state.alpha_mean.size
    if state.active_set.all():
        mean, cov = gaussian_posterior(gram, phi_h_y, state.lambda_mean, state.gamma_inv_mean, jitter=jitter)
        return state.replace(alpha_mean=mean, alpha_cov=cov)
    act = np.flatnonzero(state.active_set)
    mean_a, cov_a = gaussian_posterior(
        gram[np.ix_(act, act)], phi_h_y[act], state.lambda_mean, state.gamma_inv_mean[act], jitter=jitter
    )
    mean = np.zeros(L, dtype=complex)
    mean[act] = mean_a
    cov = np.zeros((L, L), dtype=complex)
    cov[np.ix_(act, act)] = cov_a
    return state.replace(alpha_mean=mean, alpha_cov=cov)


def update_gamma(state: PosteriorState, config: EstimatorConfig) -> PosteriorState:
    """
    Refresh the GIG factors q(gamma_l) and prune collapsed components.

    A component is deactivated when ``<1/gamma_l>`` exceeds
    ``config.prune_threshold`` or when its second moment is exactly zero.
    """
    act = state.active_set.copy()
    second = state.alpha_second_moment
    collapsed = act & ~(second > 0)
    act &= ~collapsed
    idx = np.flatnonzero(act)
    order = config.epsilon - 1.0
    gamma_inv = state.gamma_inv_mean.copy()
    gamma_mean = state.gamma_mean.copy()
    if idx.size:
        rate = state.eta_mean[idx]
        s = second[idx]
        gamma_inv[idx] = np.exp(gig_log_moment(order, rate, s, -1.0))
        gamma_mean[idx] = np.exp(gig_log_moment(order, rate, s, 1.0))
    pruned = act & ~(gamma_inv <= config.prune_threshold)
    act &= ~pruned
    dead = collapsed | pruned
    if np.any(dead):
        log.debug("pruning %d components", int(dead.sum()))
        gamma_inv[dead] = np.where(np.isfinite(gamma_inv[dead]), gamma_inv[dead], config.prune_threshold)
        gamma_mean[dead] = 0.0
        mean = state.alpha_mean.copy()
        mean[dead] = 0.0
        cov = state.alpha_cov.copy()
        cov[dead, :] = 0.0
        cov[:, dead] = 0.0
        return state.replace(
            gamma_inv_mean=gamma_inv, gamma_mean=gamma_mean, active_set=act, alpha_mean=mean, alpha_cov=cov
        )
    return state.replace(gamma_inv_mean=gamma_inv, gamma_mean=gamma_mean, active_set=act)


def update_eta(state: PosteriorState, config: EstimatorConfig) -> PosteriorState:
    """``<eta_l> = (epsilon + a_l) / (<gamma_l> + b_l)``; a no-op for two layers."""
    if not config.three_layer:
        return state
    L = state.eta_mean.size
    a = _broadcast(config.a, L)
    b = _broadcast(config.b, L)
    act = state.active_set
    eta = state.eta_mean.copy()
    eta[act] = (config.epsilon + a[act]) / (state.gamma_mean[act] + b[act])
    return state.replace(eta_mean=eta)


def expected_residual(state: PosteriorState, dictionary, y, *, gram=None) -> float:
    """
    ``<||y - Phi alpha||^2>`` under q(alpha):
    ``||y - Phi alpha_hat||^2 + trace(Phi Sigma Phi^H)``.
    """
    phi = dictionary.matrix if isinstance(dictionary, Dictionary) else np.asarray(dictionary)
    if gram is None:
        gram = phi.conj().T @ phi
    # pruned rows/columns of the covariance are zero, so no masking is needed;
    # trace(Phi S Phi^H) = sum_ij S_ij G_ji = sum_ij conj(G_ij) S_ij (G Hermitian)
    resid = np.asarray(y) - phi @ state.alpha_mean
    trace = np.vdot(gram, state.alpha_cov).real
    return float(np.vdot(resid, resid).real + trace)


def update_lambda(state: PosteriorState, dictionary, y, config: EstimatorConfig, *, gram=None) -> PosteriorState:
    """``<lambda> = (M + c) / (E + d)``, capped at ``config.lambda_max`` on exact fits."""
    M = np.asarray(y).size
    energy = expected_residual(state, dictionary, y, gram=gram) + config.d
    if energy > 0:
        lam = min((M + config.c) / energy, config.lambda_max)
    else:
        lam = config.lambda_max
    return state.replace(lambda_mean=float(lam))


def run_vmp(y, dict_pilots: Dictionary, dict_full: Dictionary, config: EstimatorConfig) -> EstimateReport:
    """
    Iterate the VMP updates until the relative change of ``alpha_hat`` drops
    below ``config.tol`` or ``config.max_iters`` cycles have run.

    Zero observations yield the all-zero estimate directly (every component
    is shrunk away). Non-convergence is reported, not raised.
    """
    y = np.asarray(y, dtype=complex)
    phi = dict_pilots.matrix
    L = phi.shape[1]
    if not np.any(y):
        alpha = np.zeros(L, dtype=complex)
        return EstimateReport(
            alpha_hat=alpha,
            h_hat=dict_full.matrix @ alpha,
            iterations_used=0,
            converged=True,
            residual_history=np.zeros(0),
            lambda_hat=config.lambda_max,
        )
    gram = phi.conj().T @ phi
    phi_h_y = phi.conj().T @ y
    state = vmp_init(y, L, config)
    history = []
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        previous = state.alpha_mean
        state = update_alpha(state, dict_pilots, y, gram=gram, phi_h_y=phi_h_y, jitter=config.jitter)
        state = update_gamma(state, config)
        state = update_eta(state, config)
        state = update_lambda(state, dict_pilots, y, config, gram=gram)
        change = relative_change(state.alpha_mean, previous)
        if not np.isfinite(change):
            raise FloatingPointError(f"non-finite VMP iterate at iteration {it}")
        history.append(change)
        if change < config.tol:
            converged = True
            break
    return EstimateReport(
        alpha_hat=state.alpha_mean,
        h_hat=dict_full.matrix @ state.alpha_mean,
        iterations_used=it,
        converged=converged,
        residual_history=np.asarray(history),
        lambda_hat=state.lambda_mean,
        state=state,
    )
