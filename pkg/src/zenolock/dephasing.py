"""Ensemble frequency statistics for independently perturbed atoms.

Atom k of an ensemble carries a frequency f_k drawn from a normal
distribution of FWHM ``fwhm`` around ``center_frequency``.  This module
samples such ensembles, computes the decay of the mean cosine of the
accumulated phases (Monte Carlo and closed form), the sqrt(N) narrowing of
the distribution of ensemble-mean frequencies, and the Allan deviation of a
clock disciplined by those atoms.

This is the only module that works in plain Hz and seconds.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit

from .parallel import parallel_map

TWO_PI = 2.0 * np.pi


def fwhm_to_sigma(fwhm: float) -> float:
    """Standard deviation of a Gaussian with the given full width at half maximum."""
    if fwhm <= 0.0:
        raise ValueError(f"fwhm must be positive, got {fwhm}")
    return fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))


@dataclass(frozen=True)
class EnsembleConfig:
    """Statistical description of N atom frequencies over M prepared replicas."""

    atom_count: int
    center_frequency: float  # Hz
    fwhm: float              # Hz
    seed: int
    time_grid: tuple         # seconds, strictly increasing
    replicas: int = 1

    def __post_init__(self):
        if self.atom_count < 1:
            raise ValueError("atom_count must be >= 1")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.fwhm <= 0.0:
            raise ValueError("fwhm must be positive")
        grid = tuple(float(t) for t in self.time_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("time_grid must be strictly increasing")
        object.__setattr__(self, "time_grid", grid)

    @property
    def sigma(self) -> float:
        return fwhm_to_sigma(self.fwhm)


def _replica_rng(seed: int, replica: int) -> np.random.Generator:
    # Counter-based stream keyed by (seed, replica); the atom index is the
    # position inside the stream.  Results are independent of execution order.
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(replica)])
    return np.random.Generator(np.random.Philox(key=key))


def sample_frequencies(config: EnsembleConfig, replica: int = 0) -> np.ndarray:
    """Draw the N atom frequencies of one prepared ensemble."""
    rng = _replica_rng(config.seed, replica)
    draws = rng.standard_normal(config.atom_count)
    return config.center_frequency + config.sigma * draws


def sample_all_replicas(config: EnsembleConfig) -> np.ndarray:
    """Frequencies of every replica, shape (replicas, atom_count)."""
    out = np.empty((config.replicas, config.atom_count))
    for r in range(config.replicas):
        out[r] = sample_frequencies(config, r)
    return out


def mean_frequency(frequencies: Sequence[float]) -> float:
    """Arithmetic mean of the ensemble frequencies."""
    freqs = np.asarray(frequencies, dtype=float)
    if freqs.size == 0:
        raise ValueError("cannot average an empty frequency list")
    return float(np.mean(freqs))


def mean_cos_phase(frequencies: Sequence[float], t):
    """Mean over atoms of cos(2 pi f_k t); scalar or vectorized in t."""
    freqs = np.asarray(frequencies, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("time must be non-negative")
    values = np.cos(TWO_PI * np.multiply.outer(t_arr, freqs)).mean(axis=-1)
    return float(values) if np.isscalar(t) or t_arr.ndim == 0 else values


def envelope_independent(t, sigma: float, center_frequency: float):
    """Expected mean cosine when every atom keeps its own frequency.

    Gaussian coherence envelope times the carrier: the ensemble-averaged
    phase washes out on the 1/(2 pi sigma) timescale.
    """
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * (TWO_PI * t) ** 2 * sigma**2) * np.cos(TWO_PI * center_frequency * t)


def envelope_locked(t, sigma: float, center_frequency: float, atom_count: int):
    """Expected mean cosine when all atoms are locked to their ensemble mean.

    Identical to :func:`envelope_independent` with sigma -> sigma/sqrt(N);
    the shared frequency f-bar scatters sqrt(N) less between replicas.
    """
    return envelope_independent(t, sigma / np.sqrt(atom_count), center_frequency)


@dataclass(frozen=True)
class AllanParams:
    """Inputs of the closed-form Allan deviation of an atom-disciplined clock."""

    fwhm: float            # Hz
    carrier: float         # Hz
    atom_count: int
    cycle_time: float      # seconds per interrogation cycle
    averaging_time: float  # seconds (distinct from the Zeno free interval)

    def __post_init__(self):
        for name in ("fwhm", "carrier", "cycle_time", "averaging_time"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.atom_count < 1:
            raise ValueError("atom_count must be >= 1")


def allan_deviation(params: AllanParams) -> float:
    """Fractional frequency instability after the given averaging time."""
    return (params.fwhm / (params.carrier * np.sqrt(params.atom_count))
            * np.sqrt(params.cycle_time / params.averaging_time))


def monte_carlo_mean_cos(config: EnsembleConfig, locked: bool = False,
                         max_workers: int | None = None):
    """Replica-averaged mean cosine on the config time grid.

    Returns ``(mean, standard_error)`` arrays.  In the locked variant every
    atom of a replica oscillates at that replica's mean frequency.  Grid
    points are processed independently (optionally in parallel); the result
    is bit-identical for any worker count.
    """
    freqs = sample_all_replicas(config)
    grid = np.asarray(config.time_grid)
    single = config.replicas == 1

    def spread(values):
        if single:
            return 0.0
        return values.std(ddof=1) / np.sqrt(config.replicas)

    if locked:
        per_replica_freq = freqs.mean(axis=1)

        def at_time(t):
            values = np.cos(TWO_PI * t * per_replica_freq)
            return values.mean(), spread(values)
    else:

        def at_time(t):
            values = np.cos(TWO_PI * t * freqs).mean(axis=1)
            return values.mean(), spread(values)

    results = parallel_map(at_time, grid, max_workers=max_workers)
    mean = np.array([m for m, _ in results])
    se = np.array([s for _, s in results])
    return mean, se


@dataclass(frozen=True)
class HistogramData:
    bin_edges: np.ndarray
    density: np.ndarray
    sample_sigma: float

    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.bin_edges)))


@dataclass(frozen=True)
class BandwidthHistograms:
    """Before/after picture of the sqrt(N) bandwidth narrowing."""

    individual: HistogramData
    replica_means: HistogramData

    @property
    def sigma_ratio(self) -> float:
        return self.individual.sample_sigma / self.replica_means.sample_sigma


def bandwidth_histogram(config: EnsembleConfig, bins: int = 60) -> BandwidthHistograms:
    """Normalized histograms of individual frequencies and of replica means."""
    freqs = sample_all_replicas(config)
    singles = freqs.ravel()
    means = freqs.mean(axis=1)

    def make(samples):
        density, edges = np.histogram(samples, bins=bins, density=True)
        return HistogramData(edges, density, float(np.std(samples, ddof=1)))

    return BandwidthHistograms(make(singles), make(means))


def fit_efold_time(times, values, center_frequency: float, sigma_guess: float | None = None) -> float:
    """Time at which a Gaussian coherence envelope drops to e^(-1/2).

    Fits exp(-a t^2) cos(2 pi f0 t) with the amplitude pinned to 1 (the mean
    cosine is exactly 1 at t = 0 for every replica).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)

    def model(t, a):
        return np.exp(-a * t**2) * np.cos(TWO_PI * center_frequency * t)

    if sigma_guess is None:
        # assume the grid spans a few e-fold times
        span = float(times[-1]) if times[-1] > 0 else 1.0
        sigma_guess = 3.0 / (TWO_PI * span)
    a0 = 0.5 * (TWO_PI * sigma_guess) ** 2
    popt, _ = curve_fit(model, times, values, p0=[a0], maxfev=10_000)
    a = float(popt[0])
    if a <= 0.0:
        raise ValueError("envelope fit produced a non-decaying envelope")
    return 1.0 / np.sqrt(2.0 * a)
