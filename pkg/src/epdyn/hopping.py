"""Stochastic realisation hopping and kinematic observables.

The process reading of the probabilistic sum: at every cycle of period tau
the system takes one realisation, drawn independently with its probability
alpha_r.  In the measurement regime the first draw of a localized realisation
freezes the trajectory for good.

RNG is the counter-based Philox generator keyed by (master seed, trajectory
id), so trajectories are bit-reproducible and embarrassingly parallel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import PhysicalConstants
from .effective import RealisationEnsemble
from .errors import ConfigurationError, DomainError, RegimeMismatchWarning

CHAOS = "chaos"
MEASUREMENT = "measurement"


@dataclass(frozen=True)
class HopConfig:
    regime: str = CHAOS
    steps: int = 1000
    seed: int = 0
    tau: float = 1.0  # cycle period, time per hop
    localization_threshold: float = 0.0  # RMS length for the measurement freeze
    trajectory_id: int = 0

    def __post_init__(self):
        if self.regime not in (CHAOS, MEASUREMENT):
            raise ConfigurationError(f"unknown regime {self.regime!r}")
        if self.steps < 1:
            raise ConfigurationError("steps must be >= 1")
        if self.tau <= 0:
            raise ConfigurationError("tau must be positive")
        if self.regime == MEASUREMENT and not self.localization_threshold > 0:
            raise ConfigurationError("measurement regime needs a positive threshold")


@dataclass(frozen=True)
class HopTrajectory:
    """Time-ordered record of visited realisation indices.

    steps are 1-based; frozen_at (measurement regime) is the step number of
    the first localized draw, None if the trajectory never froze.
    """

    indices: np.ndarray
    centroids: np.ndarray
    config: HopConfig
    frozen_at: int | None = None

    def __post_init__(self):
        for name in ("indices", "centroids"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def steps(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class EmpiricalStats:
    counts: np.ndarray
    frequencies: np.ndarray
    drift_velocity: float  # <delta centroid> / tau
    mean_jump_length: float  # <|delta centroid|>
    steps: int
    tau: float


def make_rng(seed: int, trajectory_id: int = 0) -> np.random.Generator:
    """Philox stream keyed by (master seed, trajectory id)."""
    key = np.array([seed, trajectory_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _alpha_array(ensemble: RealisationEnsemble) -> np.ndarray:
    return np.array([float(a) for a in ensemble.probabilities])


def hop_step(ensemble: RealisationEnsemble, rng: np.random.Generator) -> int:
    """One categorical draw with probabilities alpha_r; advances the stream."""
    cum = np.cumsum(_alpha_array(ensemble))
    return int(np.searchsorted(cum, rng.random(), side="right").clip(0, len(cum) - 1))


def localized_mask(ensemble: RealisationEnsemble, threshold: float) -> np.ndarray:
    lengths = np.array([
        r.localization_length(ensemble.coordinates, ensemble.measure)
        for r in ensemble.realisations
    ])
    return lengths < threshold


def simulate_hops(ensemble: RealisationEnsemble, config: HopConfig) -> HopTrajectory:
    """Run one hop trajectory.

    Chaos regime: independent draws each step.  Measurement regime: identical
    until a drawn realisation is localized (RMS spread below the threshold),
    then frozen for all remaining steps.  One draw is consumed per step in
    both regimes, so regimes differ only in post-processing of the stream.
    """
    rng = make_rng(config.seed, config.trajectory_id)
    alphas = _alpha_array(ensemble)
    cum = np.cumsum(alphas)
    draws = np.searchsorted(cum, rng.random(config.steps), side="right")
    draws = np.clip(draws, 0, len(alphas) - 1).astype(np.int64)
    frozen_at = None
    if config.regime == MEASUREMENT:
        mask = localized_mask(ensemble, config.localization_threshold)
        hits = np.nonzero(mask[draws])[0]
        if hits.size:
            k = int(hits[0])
            draws[k:] = draws[k]
            frozen_at = k + 1  # 1-based step count at freeze
    cents = ensemble.centroids[draws]
    return HopTrajectory(indices=draws, centroids=cents, config=config,
                         frozen_at=frozen_at)


def empirical_frequencies(trajectory: HopTrajectory, ensemble: RealisationEnsemble) -> EmpiricalStats:
    """Visit counts, frequencies, drift and jump statistics of a trajectory."""
    if trajectory.config.regime != CHAOS:
        warnings.warn(
            "frequencies of a measurement-regime trajectory are not alpha-distributed",
            RegimeMismatchWarning,
        )
    k = len(ensemble.realisations)
    counts = np.bincount(trajectory.indices, minlength=k).astype(np.int64)
    freqs = counts / trajectory.steps
    deltas = np.diff(trajectory.centroids)
    if deltas.size:
        drift = float(deltas.mean() / trajectory.config.tau)
        jump = float(np.abs(deltas).mean())
    else:
        drift, jump = 0.0, 0.0
    return EmpiricalStats(counts=counts, frequencies=freqs, drift_velocity=drift,
                          mean_jump_length=jump, steps=trajectory.steps,
                          tau=trajectory.config.tau)


@dataclass(frozen=True)
class KinematicObservables:
    energy: float  # h / tau
    momentum: float  # h / mean jump length
    velocity: float  # drift
    de_broglie_length: float  # h / (m |v|), inf when drift vanishes
    consistency_ratio: float  # p * lambda_B / (h * lambda_B / lambda), 1 when defined


def kinematic_observables(stats: EmpiricalStats, constants: PhysicalConstants,
                          config: HopConfig) -> KinematicObservables:
    h = constants.h
    energy = h / config.tau
    momentum = h / stats.mean_jump_length if stats.mean_jump_length > 0 else math.inf
    v = stats.drift_velocity
    lam_b = h / (constants.mass * abs(v)) if v != 0.0 else math.inf
    if math.isfinite(momentum) and math.isfinite(lam_b) and stats.mean_jump_length > 0:
        ratio = momentum * lam_b / (h * (lam_b / stats.mean_jump_length))
    else:
        ratio = math.nan
    return KinematicObservables(energy=energy, momentum=momentum, velocity=v,
                                de_broglie_length=lam_b, consistency_ratio=ratio)


def energy_partition_check(m0: float, v: float, c: float, h: float = None):
    """Relativistic energy split: rest + motion terms against the total.

    Returns (rest_term, motion_term, lhs_total, rhs_total, residual).
    """
    if not 0.0 <= v < c:
        raise DomainError(f"need 0 <= v < c, got v={v}, c={c}")
    root = math.sqrt(1.0 - (v / c) ** 2)
    rest = m0 * c * c * root
    motion = m0 * v * v / root
    rhs = m0 * c * c / root
    lhs = rest + motion
    return rest, motion, lhs, rhs, abs(lhs - rhs)
