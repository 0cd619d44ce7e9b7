"""
One channel, every estimator.

Draws a random multipath channel, observes it on 100 equispaced pilots at
15 dB and reconstructs all 1200 subcarriers with each method.
"""

import time

import numpy as np

from sbchan.channel import ChannelParams, frequency_response, observe_pilots, sample_channel
from sbchan.dictionary import build_delay_grid, build_dictionary, equispaced_pilots
from sbchan.estimators import estimate_lasso, estimate_rvm, estimate_rwf, run_vmp
from sbchan.harness import compute_nmse
from sbchan.model import EstimatorConfig

N, M, L, SNR_DB = 1200, 100, 200, 15.0
params = ChannelParams()
rng = np.random.default_rng(7)

# %% Channel and observation
ch = sample_channel(rng, params)
print(f"{ch.num_paths} paths, delays (samples): {np.round(np.sort(ch.delays) / params.sampling_time, 1)}")

pattern = equispaced_pilots(N, M)
h = frequency_response(ch, pattern.subcarrier_frequencies())
lam = 10 ** (SNR_DB / 10)
y = observe_pilots(h[pattern.pilot_indices - 1], lam, rng).y

# %% Dictionaries: pilot rows for fitting, all rows for reconstruction
grid = build_delay_grid(params.tau_max, L)
dp = build_dictionary(pattern, grid)
df = build_dictionary(pattern, grid, "all_subcarriers")

# %% Estimates
runs = {
    "vmp3l": lambda: run_vmp(y, dp, df, EstimatorConfig.vmp3l()),
    "vmp2l": lambda: run_vmp(y, dp, df, EstimatorConfig.vmp2l(M)),
    "lasso": lambda: estimate_lasso(y, dp, df, kappa=2.0),
    "rvm": lambda: estimate_rvm(y, dp, df),
    "rwf": lambda: estimate_rwf(y, pattern, N, lam, params.tau_max),
}
for name, run in runs.items():
    t0 = time.perf_counter()
    rep = run()
    nmse = compute_nmse(rep.h_hat, h)
    active = np.count_nonzero(np.abs(rep.alpha_hat) > 1e-3) if rep.alpha_hat.size else "-"
    print(f"{name:6s} NMSE {10 * np.log10(nmse):7.2f} dB  active {active!s:>4}  ({time.perf_counter() - t0:.2f}s)")
