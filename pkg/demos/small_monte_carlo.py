"""
A desk-scale NMSE-versus-SNR sweep.

Runs a reduced version of the full experiment (40 trials, four SNR points)
through the same driver the CLI uses, then prints the aggregate table.
Expect a couple of minutes on one core.
"""

import math

from sbchan.harness import ExperimentConfig, aggregate, run_experiment

config = ExperimentConfig(
    scenario="mse_vs_snr",
    snr_grid_db=(0.0, 8.0, 16.0, 24.0),
    trials=40,
    master_seed=11,
    estimators=("vmp3l", "vmp2l", "lasso", "rwf"),
)

# %% Run
results = run_experiment(config)
table = {(a.point, a.estimator): a.mean_nmse_db for a in aggregate(results, config.estimators)}

# %% Report
print("SNR dB " + "".join(f"{e:>9s}" for e in config.estimators))
for snr in config.snr_grid_db:
    cells = [table.get((snr, e), math.nan) for e in config.estimators]
    print(f"{snr:6.1f} " + "".join(f"{v:9.2f}" for v in cells))
