"""Least-squares and maximum-likelihood state reconstruction over the W
parametrization, plus ensemble fidelity statistics."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .povm import MeasurementOperator
from .simulate import ExperimentConfig, derive_seed, expected_counts, poisson_sample, stacked_operators
from .states import density_from_w, fidelity, maximally_mixed, w_layout

log = logging.getLogger(__name__)

METHODS = ("ls", "mle")
LAMBDA_FLOOR = 1e-12
RESTARTS = 5


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    rho_out: np.ndarray
    w_final: np.ndarray
    objective_value: float
    iterations: int
    converged: bool
    method: str
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class FidelityStats:
    mean: float
    std_dev: float
    count: int
    fidelities: np.ndarray = field(repr=False)
    failed: int = 0

    @classmethod
    def from_values(cls, values, failed: int = 0) -> "FidelityStats":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls(float("nan"), float("nan"), 0, values, failed)
        return cls(float(values.mean()), float(values.std()), int(values.size), values, failed)


class _Objective:
    """Objective in frequency units with its gradient with respect to w.

    p_i(w) = tr(B_i W^dag W) / tr(W^dag W) with B_i = bin_width_i M_i.  A
    penalty (|w|^2 - 1)^2 pins the scale of W, which rho does not depend on.
    """

    def __init__(self, counts, mats, widths, photons, method):
        self.method = method
        self.photons = float(photons)
        self.freq = np.asarray(counts, dtype=float) / self.photons
        self.d = mats.shape[1]
        ops = mats * widths[:, None, None]
        # tr(B_k G) = sum_ij B_kij G_ji, as one matrix-vector product
        self.ops_t = np.ascontiguousarray(ops.transpose(0, 2, 1).reshape(len(ops), -1))
        self.ops_flat = np.ascontiguousarray(ops.reshape(len(ops), -1))
        self.floor = LAMBDA_FLOOR / self.photons
        rows, cols = (np.array(w_layout(self.d), dtype=int).T if self.d > 1
                      else (np.array([], int), np.array([], int)))
        self.rows, self.cols = rows, cols
        self.diag = np.arange(self.d)

    def _w_matrix(self, w):
        d = self.d
        mat = np.zeros((d, d), dtype=complex)
        mat[self.diag, self.diag] = w[:d]
        mat[self.rows, self.cols] = w[d::2] + 1j * w[d + 1::2]
        return mat

    def probabilities(self, w):
        mat = self._w_matrix(w)
        s = float(w @ w)
        gram = mat.conj().T @ mat
        return (self.ops_t @ gram.reshape(-1)).real / s, mat, s

    def __call__(self, w):
        p, mat, s = self.probabilities(w)
        if self.method == "ls":
            resid = p - self.freq
            value = float(resid @ resid)
            dg = 2.0 * resid
        else:
            pf = np.maximum(p, self.floor)
            value = float(np.sum(pf) - self.freq @ np.log(pf))
            dg = 1.0 - np.where(p > self.floor, self.freq / pf, 0.0)
        # d p_k / d W  (as Re + i Im) = 2 W (B_k - p_k) / s
        b = (dg @ self.ops_flat).reshape(self.d, self.d) - (dg @ p) * np.eye(self.d)
        gmat = 2.0 * (mat @ b) / s
        grad = np.empty_like(w)
        grad[: self.d] = gmat[self.diag, self.diag].real
        off = gmat[self.rows, self.cols]
        grad[self.d::2] = off.real
        grad[self.d + 1::2] = off.imag
        pen = s - 1.0
        value += pen * pen
        grad += 4.0 * pen * w
        return value, grad

    def in_counts(self, value_freq_units: float, w) -> float:
        """Convert an objective value back to count units (without the penalty)."""
        s = float(w @ w)
        raw = value_freq_units - (s - 1.0) ** 2
        if self.method == "ls":
            return raw * self.photons**2
        return raw * self.photons - float(np.sum(self.freq * self.photons * np.log(self.photons)))


def _starts(d: int, restarts: int, seed: int) -> list[np.ndarray]:
    ident = np.zeros(d * d)
    ident[:d] = 1.0 / math.sqrt(d)
    rng = np.random.default_rng(seed)
    draws = [rng.normal(size=d * d) for _ in range(restarts - 1)]
    return [ident] + [x / np.linalg.norm(x) for x in draws]


def reconstruct(counts, povm: Sequence[MeasurementOperator], photons: int, method: str = "ls",
                restarts: int = RESTARTS, seed: int = 0) -> ReconstructionResult:
    """Fit rho = W^dag W / tr(W^dag W) to ``counts`` by least squares or Poisson likelihood.

    L-BFGS-B with analytic gradients from ``restarts`` starting points (W
    proportional to the identity, then seeded random draws); the lowest
    objective wins.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    counts = np.asarray(counts, dtype=float)
    mats, widths = stacked_operators(povm)
    d = mats.shape[1]
    if counts.shape != (len(povm),):
        raise ValueError(f"{counts.size} counts for {len(povm)} operators")
    if len(povm) < d * d:
        raise ValueError(f"need at least {d * d} operators, got {len(povm)}")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    if not np.any(counts > 0) or photons <= 0:
        rho = maximally_mixed(d)
        w = np.zeros(d * d)
        w[:d] = 1.0 / math.sqrt(d)
        return ReconstructionResult(rho, w, float("nan"), 0, False, method, degenerate=True)

    obj = _Objective(counts, mats, widths, photons, method)
    best = None
    iterations = 0
    for x0 in _starts(d, restarts, seed):
        res = optimize.minimize(obj, x0, jac=True, method="L-BFGS-B",
                                options={"maxiter": 3000, "ftol": 1e-12, "gtol": 1e-8})
        iterations += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res
    w = best.x / np.linalg.norm(best.x)
    value = obj.in_counts(float(best.fun), best.x)
    _, grad = obj(best.x)
    converged = bool(best.success) or float(np.linalg.norm(grad)) < 1e-8
    return ReconstructionResult(density_from_w(w), w, value, iterations, converged, method)


def reconstruct_ls(counts, povm, photons, **kw) -> ReconstructionResult:
    return reconstruct(counts, povm, photons, "ls", **kw)


def reconstruct_mle(counts, povm, photons, **kw) -> ReconstructionResult:
    return reconstruct(counts, povm, photons, "mle", **kw)


@dataclass(frozen=True, eq=False)
class StateOutcome:
    state_id: int
    results: dict  # method -> ReconstructionResult
    fidelities: dict  # method -> float


def reconstruct_state(rho_in, config: ExperimentConfig, state_id: int,
                      methods: Sequence[str] = METHODS, restart_seed: int = 0) -> StateOutcome:
    """Simulate one noisy data set and feed the same counts to every method."""
    lam = expected_counts(rho_in, config)
    counts = poisson_sample(lam, derive_seed(config.seed, state_id))
    return reconstruct_counts(rho_in, counts, config.povm, config.photons, state_id, methods, restart_seed)


def reconstruct_counts(rho_in, counts, povm, photons, state_id: int,
                       methods: Sequence[str] = METHODS, restart_seed: int = 0) -> StateOutcome:
    results, fids = {}, {}
    for m in methods:
        res = reconstruct(counts, povm, photons, m, seed=restart_seed)
        results[m] = res
        fids[m] = fidelity(rho_in, res.rho_out)
    return StateOutcome(state_id, results, fids)


def _state_job(args):
    rho, config, i, methods = args
    return reconstruct_state(rho, config, i, methods)


def run_reconstructions(states: Sequence[np.ndarray], config: ExperimentConfig,
                        methods: Sequence[str] = METHODS, workers: int = 1) -> list[StateOutcome]:
    jobs = [(rho, config, i, tuple(methods)) for i, rho in enumerate(states)]
    if workers <= 1:
        return [_state_job(j) for j in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_state_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def summarize(outcomes: Sequence[StateOutcome], method: str) -> FidelityStats:
    """Mean and population std of fidelity; degenerate data sets are excluded."""
    values = [o.fidelities[method] for o in outcomes if not o.results[method].degenerate]
    failed = sum(1 for o in outcomes if o.results[method].degenerate)
    return FidelityStats.from_values(values, failed)


def average_fidelities(states: Sequence[np.ndarray], config: ExperimentConfig,
                       methods: Sequence[str] = METHODS, workers: int = 1) -> dict[str, FidelityStats]:
    if len(states) == 0:
        raise ValueError("state list is empty")
    outcomes = run_reconstructions(states, config, methods, workers)
    return {m: summarize(outcomes, m) for m in methods}


def average_fidelity(states: Sequence[np.ndarray], config: ExperimentConfig, method: str = "ls",
                     workers: int = 1) -> FidelityStats:
    return average_fidelities(states, config, (method,), workers)[method]
