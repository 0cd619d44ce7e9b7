"""
Seeded Monte Carlo driver.

Every (grid point, trial) pair draws its channel and noise from its own
generator, seeded by ``SeedSequence([master_seed, point_index, trial_index])``.
Streams therefore do not depend on execution order, worker count or on which
estimators are enabled, and every estimator at a grid point sees the same
realization.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence

import numpy as np

from ..channel import ChannelParams, frequency_response, observe_pilots, sample_channel
from ..dictionary import build_delay_grid, build_dictionary, equispaced_pilots
from ..estimators import estimate_lasso, estimate_rvm, estimate_rwf, run_vmp
from ..model import EstimatorConfig

__all__ = [
    "ESTIMATORS",
    "SCENARIOS",
    "ExperimentConfig",
    "TrialResult",
    "Aggregate",
    "SkipTrial",
    "compute_nmse",
    "trial_rng",
    "grid_points",
    "run_trial",
    "run_experiment",
    "aggregate",
]

log = logging.getLogger(__name__)

ESTIMATORS = ("vmp2l", "vmp3l", "lasso", "rvm", "rwf")
SCENARIOS = ("mse_vs_snr", "mse_vs_pilots", "single_run")


class SkipTrial(ValueError):
    """The true channel is identically zero, so a relative error is undefined."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "mse_vs_snr"
    snr_grid_db: tuple = tuple(range(0, 25, 3))
    pilot_grid: tuple = tuple(range(60, 201, 20))
    trials: int = 500
    master_seed: int = 0
    estimators: tuple = ESTIMATORS
    N: int = 1200
    L: int = 200
    channel: ChannelParams = field(default_factory=ChannelParams)
    kappa: float = 2.0
    output_path: str = "results.csv"
    # operating point held fixed along the other axis
    fixed_snr_db: float = 15.0
    fixed_pilots: int = 100
    # RWF design SNR in dB; None tracks the true SNR of each point
    rwf_design_snr_db: Optional[float] = None
    max_iters: int = 200
    tol: float = 1e-6
    workers: int = 1
    record_wall_time: bool = False

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            raise ValueError(f"unknown or empty estimator list {list(self.estimators)}; choose from {ESTIMATORS}")
        if self.scenario == "mse_vs_snr" and not self.snr_grid_db:
            raise ValueError("mse_vs_snr needs a non-empty snr_grid_db")
        if self.scenario == "mse_vs_pilots" and not self.pilot_grid:
            raise ValueError("mse_vs_pilots needs a non-empty pilot_grid")
        if self.L < 2 or self.N < 1:
            raise ValueError("need N >= 1 and L >= 2")
        if any(not 1 <= m <= self.N for m in self.pilot_grid) or not 1 <= self.fixed_pilots <= self.N:
            raise ValueError("pilot counts must lie in 1..N")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class TrialResult:
    scenario: str
    point: float
    estimator: str
    trial: int
    nmse: float
    converged: bool
    iterations: int
    wall_time: float


@dataclass(frozen=True)
class Aggregate:
    scenario: str
    point: float
    estimator: str
    mean_nmse: float
    mean_nmse_db: float
    trials: int
    failures: int
    stderr_nmse: float


def compute_nmse(h_hat, h_true) -> float:
    """``||h_hat - h||^2 / ||h||^2``; raises :class:`SkipTrial` for a zero channel."""
    h_hat = np.asarray(h_hat)
    h_true = np.asarray(h_true)
    if h_hat.shape != h_true.shape:
        raise ValueError("estimate and truth must have equal length")
    energy = float(np.vdot(h_true, h_true).real)
    if energy == 0:
        raise SkipTrial("true channel is identically zero")
    err = h_hat - h_true
    return float(np.vdot(err, err).real / energy)


def trial_rng(master_seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(point_index), int(trial_index)]))


def grid_points(config: ExperimentConfig) -> List[tuple]:
    """``(point value, snr_db, num_pilots)`` for each grid point of the scenario."""
    if config.scenario == "mse_vs_snr":
        return [(float(s), float(s), config.fixed_pilots) for s in config.snr_grid_db]
    if config.scenario == "mse_vs_pilots":
        return [(float(m), config.fixed_snr_db, int(m)) for m in config.pilot_grid]
    snr = float(config.snr_grid_db[0]) if config.snr_grid_db else config.fixed_snr_db
    pilots = int(config.pilot_grid[0]) if config.pilot_grid else config.fixed_pilots
    return [(snr, snr, pilots)]


@lru_cache(maxsize=32)
def _setup(N: int, M: int, L: int, tau_max: float):
    pattern = equispaced_pilots(N, M)
    grid = build_delay_grid(tau_max, L)
    return pattern, build_dictionary(pattern, grid, "pilots_only"), build_dictionary(pattern, grid, "all_subcarriers")


def _estimate(name, y, pattern, dict_pilots, dict_full, snr_db, config):
    if name == "vmp3l":
        cfg = EstimatorConfig.vmp3l(max_iters=config.max_iters, tol=config.tol)
        return run_vmp(y, dict_pilots, dict_full, cfg)
    if name == "vmp2l":
        cfg = EstimatorConfig.vmp2l(pattern.num_pilots, max_iters=config.max_iters, tol=config.tol)
        return run_vmp(y, dict_pilots, dict_full, cfg)
    if name == "lasso":
        return estimate_lasso(y, dict_pilots, dict_full, config.kappa)
    if name == "rvm":
        return estimate_rvm(y, dict_pilots, dict_full, max_iters=config.max_iters, tol=config.tol)
    if name == "rwf":
        design_db = snr_db if config.rwf_design_snr_db is None else config.rwf_design_snr_db
        return estimate_rwf(y, pattern, config.N, 10.0 ** (design_db / 10.0), config.channel.tau_max)
    raise ValueError(f"unknown estimator {name!r}")


def run_trial(config: ExperimentConfig, point_index: int, trial_index: int) -> List[TrialResult]:
    """
    One channel and one noisy pilot vector, shared by every configured
    estimator. Returns an empty list when the channel has no paths.
    """
    value, snr_db, M = grid_points(config)[point_index]
    pattern, dict_pilots, dict_full = _setup(config.N, M, config.L, config.channel.tau_max)
    rng = trial_rng(config.master_seed, point_index, trial_index)
    ch = sample_channel(rng, config.channel)
    h = frequency_response(ch, pattern.subcarrier_frequencies())
    if not np.any(h):
        return []
    # received symbol power is 1, so the noise precision is the linear SNR
    obs = observe_pilots(h[pattern.pilot_indices - 1], 10.0 ** (snr_db / 10.0), rng, pattern)
    out = []
    for name in config.estimators:
        start = time.perf_counter()
        try:
            report = _estimate(name, obs.y, pattern, dict_pilots, dict_full, snr_db, config)
            nmse = compute_nmse(report.h_hat, h)
            if not math.isfinite(nmse):
                raise FloatingPointError("non-finite NMSE")
            converged, iters = bool(report.converged), int(report.iterations_used)
        except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
            log.warning("estimator %s failed at point %s trial %d: %s", name, value, trial_index, exc)
            nmse, converged, iters = float("nan"), False, 0
        elapsed = time.perf_counter() - start
        out.append(TrialResult(config.scenario, value, name, trial_index, nmse, converged, iters, elapsed))
    return out


def _run_chunk(args):
    config, items = args
    rows = []
    for p, t in items:
        rows.extend(run_trial(config, p, t))
    return rows


def run_experiment(config: ExperimentConfig, progress=None) -> List[TrialResult]:
    """
    Run every grid point x trial and return the raw rows in canonical order
    (grid point, trial, estimator order as configured).

    With ``config.workers > 1`` trials are distributed over processes; the
    result is identical to a serial run.
    """
    points = grid_points(config)
    items = [(p, t) for p in range(len(points)) for t in range(config.trials)]
    rows: List[TrialResult] = []
    if config.workers == 1:
        for k, (p, t) in enumerate(items):
            rows.extend(run_trial(config, p, t))
            if progress is not None:
                progress(k + 1, len(items))
    else:
        chunks = [items[i :: config.workers * 4] for i in range(config.workers * 4)]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for part in pool.map(_run_chunk, [(config, c) for c in chunks if c]):
                rows.extend(part)
    point_index = {v[0]: i for i, v in enumerate(points)}
    est_index = {e: i for i, e in enumerate(config.estimators)}
    rows.sort(key=lambda r: (point_index[r.point], r.trial, est_index[r.estimator]))
    return rows


def aggregate(results: Iterable[TrialResult], estimators: Optional[Sequence[str]] = None) -> List[Aggregate]:
    """
    Mean NMSE per (grid point, estimator) over non-failed rows; failed rows
    (NaN NMSE) are counted separately.
    """
    groups = {}
    order = []
    for r in results:
        key = (r.scenario, r.point, r.estimator)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r.nmse)
    if estimators is not None:
        rank = {e: i for i, e in enumerate(estimators)}
        order.sort(key=lambda k: (k[1], rank.get(k[2], len(rank))))
    out = []
    for key in order:
        vals = np.asarray(groups[key], dtype=float)
        good = vals[np.isfinite(vals)]
        n = good.size
        mean = float(np.mean(good)) if n else float("nan")
        se = float(np.std(good, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
        mean_db = 10.0 * math.log10(mean) if n and mean > 0 else float("nan")
        out.append(Aggregate(key[0], key[1], key[2], mean, mean_db, n, int(vals.size - n), se))
    return out
