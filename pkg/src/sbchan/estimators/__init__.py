from .common import EstimateReport, PosteriorSolveError, gaussian_posterior
from .vmp import (
    InitializationError,
    PosteriorState,
    expected_residual,
    run_vmp,
    update_alpha,
    update_eta,
    update_gamma,
    update_lambda,
    vmp_init,
)
from .baselines import (
    estimate_lasso,
    estimate_rvm,
    estimate_rwf,
    lasso_objective,
    power_iteration,
    soft_threshold,
    uniform_pdp_correlation,
)
