"""
Delay-grid Fourier dictionaries for pilot-aided OFDM.

Subcarriers are numbered 1..N and subcarrier n sits at frequency
``(n - 1) * subcarrier_spacing``. Column k of a dictionary is the frequency
response of a unit tap at grid delay ``tau_k``, ``exp(-2j pi f tau_k)``.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SAMPLING_TIME",
    "SUBCARRIER_SPACING",
    "PilotPattern",
    "DelayGrid",
    "Dictionary",
    "build_delay_grid",
    "build_dictionary",
    "equispaced_pilots",
]

# LTE-like numerology: 15 kHz spacing, 2048-point FFT
SAMPLING_TIME = 32.55e-9
SUBCARRIER_SPACING = 15e3


@dataclass(frozen=True, eq=False)
class PilotPattern:
    num_subcarriers: int
    pilot_indices: np.ndarray
    subcarrier_spacing: float = SUBCARRIER_SPACING

    def __post_init__(self):
        idx = np.asarray(self.pilot_indices, dtype=np.int64)
        if self.num_subcarriers < 1:
            raise ValueError("num_subcarriers must be positive")
        if idx.ndim != 1 or idx.size == 0 or idx.size > self.num_subcarriers:
            raise ValueError("need 1 <= M <= N pilot indices")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("pilot indices must be strictly increasing")
        if idx[0] < 1 or idx[-1] > self.num_subcarriers:
            raise ValueError("pilot indices must lie in 1..N")
        idx.setflags(write=False)
        object.__setattr__(self, "pilot_indices", idx)

    @property
    def num_pilots(self) -> int:
        return int(self.pilot_indices.size)

    def subcarrier_frequencies(self) -> np.ndarray:
        """Frequencies of all N subcarriers, in Hz."""
        return np.arange(self.num_subcarriers) * self.subcarrier_spacing

    def pilot_frequencies(self) -> np.ndarray:
        return (self.pilot_indices - 1) * self.subcarrier_spacing


@dataclass(frozen=True, eq=False)
class DelayGrid:
    delays: np.ndarray
    resolution: float
    tau_max: float

    @property
    def size(self) -> int:
        return int(self.delays.size)


@dataclass(frozen=True, eq=False)
class Dictionary:
    matrix: np.ndarray
    grid: DelayGrid
    pattern: PilotPattern

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def H(self) -> np.ndarray:
        return self.matrix.conj().T


def build_delay_grid(tau_max: float, num_points: int) -> DelayGrid:
    """Uniform grid of ``num_points`` delays covering ``[0, tau_max]`` inclusive."""
    if num_points < 2:
        raise ValueError("a delay grid needs at least 2 points")
    if not tau_max > 0:
        raise ValueError("tau_max must be positive")
    resolution = tau_max / (num_points - 1)
    delays = np.arange(num_points) * resolution
    delays[-1] = tau_max
    delays.setflags(write=False)
    return DelayGrid(delays=delays, resolution=resolution, tau_max=float(tau_max))


def build_dictionary(pattern: PilotPattern, grid: DelayGrid, rows: str = "pilots_only") -> Dictionary:
    """
    Fourier dictionary ``exp(-2j pi f_m tau_k)``.

    Parameters
    ----------
    pattern : PilotPattern
    grid : DelayGrid
    rows : {'pilots_only', 'all_subcarriers'}
        Pilot rows (M x L) for estimation or every subcarrier (N x L) for
        reconstructing the full frequency response.
    """
    if rows == "pilots_only":
        freqs = pattern.pilot_frequencies()
    elif rows == "all_subcarriers":
        freqs = pattern.subcarrier_frequencies()
    else:
        raise ValueError(f"rows must be 'pilots_only' or 'all_subcarriers', got {rows!r}")
    # phase reduced mod 1 cycle before exp to keep |entry| = 1 to rounding
    cycles = np.outer(freqs, grid.delays)
    cycles -= np.round(cycles)
    matrix = np.exp(-2j * np.pi * cycles)
    matrix.setflags(write=False)
    return Dictionary(matrix=matrix, grid=grid, pattern=pattern)


def equispaced_pilots(N: int, M: int, subcarrier_spacing: float = SUBCARRIER_SPACING) -> PilotPattern:
    """Pilots at ``1, 1 + s, 1 + 2s, ...`` with stride ``s = N // M``."""
    if not 1 <= M <= N:
        raise ValueError(f"need 1 <= M <= N, got M={M}, N={N}")
    stride = N // M
    indices = 1 + stride * np.arange(M)
    return PilotPattern(num_subcarriers=N, pilot_indices=indices, subcarrier_spacing=subcarrier_spacing)
