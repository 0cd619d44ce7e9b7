"""
Random multipath channels and noisy pilot observations.

A channel is a sum of K delayed taps with K ~ Poisson(mean_paths), delays
uniform on ``[0, tau_max]`` and circular complex Gaussian gains whose variance
decays exponentially with delay. The decay profile is scaled so the expected
total channel power is one.
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dictionary import SAMPLING_TIME, PilotPattern

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "Observation",
    "compute_power_scale",
    "default_channel_params",
    "sample_channel",
    "frequency_response",
    "observe_pilots",
    "complex_normal",
    "write_channel_csv",
    "read_channel_csv",
]


def compute_power_scale(mean_paths: float, tau_max: float, decay: float) -> float:
    """
    Gain-variance scale ``u`` such that ``E[sum_k |beta_k|^2] = 1``.

    With uniform delays, ``E[u exp(-tau/v)] = u (v/tau_max) (1 - exp(-tau_max/v))``,
    and the Poisson path count contributes a factor ``mean_paths``.
    """
    if not (mean_paths > 0 and tau_max > 0 and decay > 0):
        raise ValueError("mean_paths, tau_max and decay must be positive")
    ratio = tau_max / decay
    # -expm1 keeps precision when decay >> tau_max
    return 1.0 / (mean_paths * (-np.expm1(-ratio)) / ratio)


@dataclass(frozen=True)
class ChannelParams:
    mean_paths: float = 10.0
    tau_max: float = 144 * SAMPLING_TIME
    decay: float = 20 * SAMPLING_TIME
    sampling_time: float = SAMPLING_TIME
    power_scale: Optional[float] = None

    def __post_init__(self):
        if self.power_scale is None:
            u = compute_power_scale(self.mean_paths, self.tau_max, self.decay)
            object.__setattr__(self, "power_scale", u)


def default_channel_params() -> ChannelParams:
    """Poisson(10) paths over a 144-sample delay spread with a 20-sample decay."""
    return ChannelParams()


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    num_paths: int
    delays: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        if len(self.delays) != self.num_paths or len(self.gains) != self.num_paths:
            raise ValueError("delays and gains must have num_paths entries")
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("channel gains must be finite")

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.gains) ** 2))


@dataclass(frozen=True, eq=False)
class Observation:
    y: np.ndarray
    noise_precision_true: float
    pattern: Optional[PilotPattern] = None


def complex_normal(rng: np.random.Generator, size, variance=1.0) -> np.ndarray:
    """Circular complex Gaussian samples with total (real + imaginary) variance ``variance``."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_channel(rng: np.random.Generator, params: ChannelParams) -> ChannelRealization:
    K = int(rng.poisson(params.mean_paths))
    delays = rng.uniform(0.0, params.tau_max, size=K)
    variances = params.power_scale * np.exp(-delays / params.decay)
    gains = complex_normal(rng, K, variances)
    return ChannelRealization(num_paths=K, delays=delays, gains=gains)


def frequency_response(ch: ChannelRealization, freqs) -> np.ndarray:
    """``h(f) = sum_k gain_k exp(-2j pi f delay_k)`` at each requested frequency."""
    freqs = np.asarray(freqs, dtype=float)
    if ch.num_paths == 0:
        return np.zeros(freqs.shape, dtype=complex)
    cycles = np.outer(freqs, ch.delays)
    cycles -= np.round(cycles)
    return np.exp(-2j * np.pi * cycles) @ ch.gains


def observe_pilots(
    h_pilots, noise_precision: float, rng: Optional[np.random.Generator] = None, pattern: Optional[PilotPattern] = None
) -> Observation:
    """
    Pilot observations ``y = h + w`` with ``w ~ CN(0, I / noise_precision)``.

    ``noise_precision = inf`` gives noiseless observations and consumes no
    random numbers.
    """
    h_pilots = np.asarray(h_pilots, dtype=complex)
    if not noise_precision > 0:
        raise ValueError("noise_precision must be positive")
    if np.isinf(noise_precision):
        y = h_pilots.copy()
    else:
        if rng is None:
            raise ValueError("a random stream is required for noisy observations")
        y = h_pilots + complex_normal(rng, h_pilots.shape, 1.0 / noise_precision)
    return Observation(y=y, noise_precision_true=float(noise_precision), pattern=pattern)


def write_channel_csv(ch: ChannelRealization, path) -> None:
    """One row per path: ``path,delay_s,gain_real,gain_imag``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "delay_s", "gain_real", "gain_imag"])
        for k in range(ch.num_paths):
            g = ch.gains[k]
            writer.writerow([k, repr(float(ch.delays[k])), repr(float(g.real)), repr(float(g.imag))])


def read_channel_csv(path) -> ChannelRealization:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    delays = np.array([float(r["delay_s"]) for r in rows])
    gains = np.array([complex(float(r["gain_real"]), float(r["gain_imag"])) for r in rows])
    return ChannelRealization(num_paths=len(rows), delays=delays, gains=gains)
