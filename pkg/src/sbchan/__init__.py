"""
Sparse Bayesian OFDM channel estimation by variational message passing.

Submodules
----------
specfun
    Log-domain Bessel K and GIG moments.
model
    Hierarchical prior densities and the estimator configuration.
dictionary
    Pilot patterns, delay grids and Fourier dictionaries.
channel
    Random multipath channels and noisy pilot observations.
estimators
    VMP-2L/VMP-3L and the LASSO, RVM and robust Wiener baselines.
harness
    Seeded Monte Carlo driver, CSV output, config files and the CLI.
"""

from .channel import ChannelParams, frequency_response, observe_pilots, sample_channel
from .dictionary import build_delay_grid, build_dictionary, equispaced_pilots
from .estimators import estimate_lasso, estimate_rvm, estimate_rwf, run_vmp
from .model import EstimatorConfig, log_prior_2L, log_prior_3L, penalty_2L
from .specfun import GigParams, gig_moment, log_bessel_k

__version__ = "0.1.0"
