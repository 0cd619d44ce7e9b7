from .experiment import (
    ESTIMATORS,
    SCENARIOS,
    Aggregate,
    ExperimentConfig,
    SkipTrial,
    TrialResult,
    aggregate,
    compute_nmse,
    grid_points,
    run_experiment,
    run_trial,
    trial_rng,
)
from .io import AGGREGATE_HEADER, RAW_HEADER, ConfigError, load_config, parse_config, read_raw_csv, write_csv
