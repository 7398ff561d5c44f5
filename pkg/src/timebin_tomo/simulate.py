"""Expected photon counts and seeded Poisson noise for tomography experiments."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .povm import (
    JitterConfig,
    MeasurementOperator,
    TimeGrid,
    build_povm,
    pair_povm,
    select_time_grid,
)
from .wavepacket import FiberConfig, PulseConfig

DEFAULT_PHOTONS = 1000
DEFAULT_THRESHOLD = 0.05
# Five instants per arm spread over the 5% region alias the two-photon
# fringes at 500 m (spacing ~ one fringe period); 0.4 keeps the pair design
# matrix best conditioned at both table lengths.
DEFAULT_PAIR_THRESHOLD = 0.4


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Everything needed to turn a state into a reproducible data set.

    With ``two_photon`` set, each photon of a pair is measured on ``grid`` and
    the POVM consists of all Kronecker products of single-photon operators.
    """

    photons: int
    pulse: PulseConfig
    fiber: FiberConfig
    jitter: JitterConfig
    grid: TimeGrid
    seed: int = 0
    two_photon: bool = False

    def __post_init__(self):
        if self.photons < 0:
            raise ValueError(f"photons must be >= 0, got {self.photons}")

    @cached_property
    def single_povm(self) -> list[MeasurementOperator]:
        return build_povm(self.pulse, self.fiber, self.jitter, self.grid)

    @cached_property
    def povm(self) -> list[MeasurementOperator]:
        ops = self.single_povm
        return pair_povm(ops) if self.two_photon else ops

    @property
    def dim(self) -> int:
        return self.pulse.dim**2 if self.two_photon else self.pulse.dim


def make_config(dim: int = 2, length: float = 200.0, sigma_d: float = 0.0,
                photons: int = DEFAULT_PHOTONS, operators: int | None = None,
                seed: int = 0, two_photon: bool = False,
                threshold: float | None = None,
                pulse: PulseConfig | None = None, beta: float | None = None) -> ExperimentConfig:
    """Config with the default pulse and fiber, selecting the time grid.

    ``operators`` is the total POVM size; for pairs it must be a perfect square
    and the per-arm grid has sqrt(operators) instants.  ``threshold`` defaults
    to 0.05 for single photons and 0.4 for pairs.
    """
    if threshold is None:
        threshold = DEFAULT_PAIR_THRESHOLD if two_photon else DEFAULT_THRESHOLD
    pulse = pulse or PulseConfig(dim=dim)
    fiber = FiberConfig(length=length) if beta is None else FiberConfig(beta=beta, length=length)
    if operators is None:
        operators = 25 if two_photon else 26
    if two_photon:
        per_arm = int(round(operators**0.5))
        if per_arm**2 != operators:
            raise ValueError(f"two-photon operator count must be a perfect square, got {operators}")
    else:
        per_arm = operators
    grid = select_time_grid(pulse, fiber, per_arm, threshold)
    return ExperimentConfig(photons, pulse, fiber, JitterConfig(sigma_d), grid, seed, two_photon)


@dataclass(frozen=True, eq=False)
class CountRecord:
    expected: np.ndarray
    sampled: np.ndarray
    seed: int = field(default=0)


def stacked_operators(povm: Sequence[MeasurementOperator]) -> tuple[np.ndarray, np.ndarray]:
    mats = np.stack([op.matrix for op in povm])
    widths = np.array([op.bin_width for op in povm])
    return mats, widths


def expected_counts(rho: np.ndarray, config: ExperimentConfig) -> np.ndarray:
    """N * bin_width * tr(M_i rho) for every operator; round-off negatives clamp to 0."""
    return counts_for_povm(rho, config.povm, config.photons)


def counts_for_povm(rho: np.ndarray, povm: Sequence[MeasurementOperator], photons: int) -> np.ndarray:
    mats, widths = stacked_operators(povm)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != mats.shape[1:]:
        raise ValueError(f"state of shape {rho.shape} does not match operators of shape {mats.shape[1:]}")
    lam = photons * widths * np.einsum("kij,ji->k", mats, rho).real
    return np.clip(lam, 0.0, None)


def poisson_sample(expected, seed: int) -> np.ndarray:
    """Independent Poisson draws with the given means; bit-reproducible per seed."""
    expected = np.asarray(expected, dtype=float)
    if np.any(expected < 0) or not np.all(np.isfinite(expected)):
        raise ValueError("Poisson means must be finite and non-negative")
    return np.random.default_rng(seed).poisson(expected).astype(np.int64)


def derive_seed(master: int, index: int) -> int:
    """64-bit per-state seed: SeedSequence entropy mixing of (master, index)."""
    words = np.random.SeedSequence([int(master) & (2**64 - 1), int(index)]).generate_state(2, np.uint32)
    return int(words[0]) << 32 | int(words[1])


def simulate_state(rho: np.ndarray, config: ExperimentConfig, index: int) -> CountRecord:
    seed = derive_seed(config.seed, index)
    lam = expected_counts(rho, config)
    return CountRecord(lam, poisson_sample(lam, seed), seed)


def run_ensemble(states: Sequence[np.ndarray], config: ExperimentConfig, workers: int = 1,
                 ids: Sequence[int] | None = None) -> list[tuple[int, CountRecord]]:
    """One CountRecord per state; the seed depends only on (config.seed, state id)."""
    if len(states) == 0:
        raise ValueError("state list is empty")
    ids = list(range(len(states))) if ids is None else list(ids)
    if workers <= 1:
        return [(i, simulate_state(rho, config, i)) for i, rho in zip(ids, states)]
    with ProcessPoolExecutor(workers) as pool:
        futures = [pool.submit(simulate_state, rho, config, i) for i, rho in zip(ids, states)]
        records = [f.result() for f in futures]
    return list(zip(ids, records))
