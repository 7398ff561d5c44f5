"""Time-resolved measurement operators for time-bin qudits.

A photon detected at time t after the fiber projects onto the (unnormalized)
vector v(t) with components v_n(t) = u_L(t - c_n), c_n the bin centres.  The
operator is M(t) = conj(v) v^T so that tr(M(t) rho) equals the detection
density |sum_n alpha_n u_L(t - c_n)|^2 for rho = |alpha><alpha|.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .wavepacket import (
    FiberConfig,
    PulseConfig,
    chirp_coefficient,
    propagated_envelope,
    quadrature_window,
    spread_constant,
)


@dataclass(frozen=True)
class JitterConfig:
    """Gaussian detector timing jitter (standard deviation, ps)."""

    sigma_d: float = 0.0

    def __post_init__(self):
        if not self.sigma_d >= 0:
            raise ValueError(f"sigma_d must be >= 0, got {self.sigma_d}")


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    matrix: np.ndarray
    time: float | tuple
    bin_width: float = 0.0
    jitter: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def purity(self) -> float:
        """tr(M^2) / tr(M)^2; equals 1 for rank-1 operators."""
        m = self.matrix
        return float(np.real(np.vdot(m.conj().T, m)) / self.trace**2)

    def probability(self, rho: np.ndarray) -> float:
        """Born-rule weight bin_width * tr(M rho) of this grid cell."""
        return self.bin_width * float(np.real(np.einsum("ij,ji->", self.matrix, rho)))


@dataclass(frozen=True)
class TimeGrid:
    instants: np.ndarray
    bin_width: float

    def __post_init__(self):
        inst = np.asarray(self.instants, dtype=float)
        if inst.ndim != 1 or inst.size == 0:
            raise ValueError("time grid needs at least one instant")
        if inst.size > 1 and np.any(np.diff(inst) <= 0):
            raise ValueError("time grid instants must be strictly increasing")
        if not self.bin_width > 0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width}")
        object.__setattr__(self, "instants", inst)

    def __len__(self) -> int:
        return self.instants.size

    @property
    def span(self) -> float:
        return float(self.instants[-1] - self.instants[0])


def measurement_vectors(t, pulse: PulseConfig, fiber: FiberConfig) -> np.ndarray:
    """Unnormalized measurement vectors v_n(t) = u_L(t - c_n), shape t.shape + (d,)."""
    t = np.asarray(t, dtype=float)
    return propagated_envelope(t[..., None] - pulse.centers, pulse, fiber)


def weight_mu(t, pulse: PulseConfig, fiber: FiberConfig):
    """Total detection density mu(t) = tr M(t) in closed form (ps^-1)."""
    t = np.asarray(t, dtype=float)
    c = spread_constant(pulse, fiber)
    s = pulse.sigma
    dt = t[..., None] - pulse.centers
    return s / (math.sqrt(math.pi * c)) * np.exp(-(s**2) * dt**2 / c).sum(axis=-1)


def detection_density(t, alpha, pulse: PulseConfig, fiber: FiberConfig):
    """Born-rule density |sum_n alpha_n u_L(t - c_n)|^2 for a pure input."""
    v = measurement_vectors(t, pulse, fiber)
    return np.abs(v @ np.asarray(alpha, dtype=complex)) ** 2


def ideal_matrices(t, pulse: PulseConfig, fiber: FiberConfig) -> np.ndarray:
    """Stack of rank-1 matrices conj(v) v^T, shape t.shape + (d, d)."""
    v = measurement_vectors(t, pulse, fiber)
    return v.conj()[..., :, None] * v[..., None, :]


def jittered_matrices(t, pulse: PulseConfig, fiber: FiberConfig, sigma_d: float) -> np.ndarray:
    """Gaussian-jitter convolution of the ideal operators, evaluated in closed form.

    Each entry conj(v_m(t')) v_n(t') is |A|^2 exp(P t'^2 + Q t' + R); smoothing it
    with a normalized Gaussian of variance s^2 gives

        |A|^2 / sqrt(1 - 2 P s^2) * exp(P t^2 + Q t + R + s^2 (2 P t + Q)^2 / (2 (1 - 2 P s^2))).
    """
    if sigma_d == 0:
        return ideal_matrices(t, pulse, fiber)
    t = np.asarray(t, dtype=float)[..., None, None]
    a = chirp_coefficient(pulse, fiber)
    ac = a.conjugate()
    cm = pulse.centers[:, None]
    cn = pulse.centers[None, :]
    p = 2.0 * a.real
    q = -2.0 * (ac * cm + a * cn)
    r = ac * cm**2 + a * cn**2
    s2 = sigma_d**2
    g = 1.0 - 2.0 * p * s2
    amp2 = pulse.sigma / math.sqrt(math.pi * spread_constant(pulse, fiber))
    expo = p * t**2 + q * t + r + s2 * (2.0 * p * t + q) ** 2 / (2.0 * g)
    return amp2 / math.sqrt(g) * np.exp(expo)


def jitter_kernel(t, sigma_d: float):
    t = np.asarray(t, dtype=float)
    return np.exp(-(t**2) / (2 * sigma_d**2)) / math.sqrt(2 * math.pi * sigma_d**2)


def jittered_matrix_quadrature(t: float, pulse: PulseConfig, fiber: FiberConfig, sigma_d: float) -> np.ndarray:
    """Entrywise adaptive quadrature of the jitter convolution (validation path)."""
    if sigma_d == 0:
        return ideal_matrices(t, pulse, fiber)
    lo, hi = quadrature_window(pulse, fiber)
    lo = min(lo, t - 20 * sigma_d)
    hi = max(hi, t + 20 * sigma_d)
    d = pulse.dim
    out = np.empty((d, d), dtype=complex)
    for m in range(d):
        for n in range(d):
            def f(tp, part):
                v = measurement_vectors(tp, pulse, fiber)
                val = np.conj(v[m]) * v[n] * jitter_kernel(t - tp, sigma_d)
                return val.real if part == 0 else val.imag

            re, _ = integrate.quad(f, lo, hi, args=(0,), epsabs=1e-15, epsrel=1e-11,
                                   limit=800, points=[t, *pulse.centers])
            im, _ = integrate.quad(f, lo, hi, args=(1,), epsabs=1e-15, epsrel=1e-11,
                                   limit=800, points=[t, *pulse.centers])
            out[m, n] = complex(re, im)
    return out


def measurement_operator(t: float, pulse: PulseConfig, fiber: FiberConfig,
                         bin_width: float = 0.0) -> MeasurementOperator:
    return MeasurementOperator(ideal_matrices(float(t), pulse, fiber), float(t), bin_width, 0.0)


def jittered_operator(t: float, pulse: PulseConfig, fiber: FiberConfig,
                      jitter: JitterConfig, bin_width: float = 0.0) -> MeasurementOperator:
    m = jittered_matrices(float(t), pulse, fiber, jitter.sigma_d)
    return MeasurementOperator(m, float(t), bin_width, jitter.sigma_d)


def select_time_grid(pulse: PulseConfig, fiber: FiberConfig, count: int,
                     threshold_fraction: float = 0.05) -> TimeGrid:
    """Equally spaced instants spanning the region where mu(t) >= threshold * max mu.

    The region runs from the first to the last threshold crossing, so isolated
    bins at zero dispersion are covered together with the gaps between them.
    """
    if count < pulse.dim**2:
        raise ValueError(f"need at least d^2 = {pulse.dim**2} operators, got {count}")
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    lo, hi = quadrature_window(pulse, fiber, widths=6.0)
    ts = np.linspace(lo, hi, 20001)
    mu = weight_mu(ts, pulse, fiber)
    level = threshold_fraction * mu.max()
    above = np.nonzero(mu >= level)[0]
    if above.size == 0 or above[0] == 0 or above[-1] == ts.size - 1:
        raise ValueError("threshold region is empty or not bracketed")

    def excess(t):
        return weight_mu(t, pulse, fiber) - level

    left = optimize.brentq(excess, ts[above[0] - 1], ts[above[0]], xtol=1e-13)
    right = optimize.brentq(excess, ts[above[-1]], ts[above[-1] + 1], xtol=1e-13)
    if not right > left:
        raise ValueError("threshold region is empty")
    # mu is even, so symmetrize away brentq round-off
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    if abs(mid) < 1e-9:
        left, right = -half, half
    instants = np.linspace(left, right, count)
    return TimeGrid(instants, (right - left) / (count - 1))


def build_povm(pulse: PulseConfig, fiber: FiberConfig, jitter: JitterConfig,
               grid: TimeGrid) -> list[MeasurementOperator]:
    mats = jittered_matrices(grid.instants, pulse, fiber, jitter.sigma_d)
    return [MeasurementOperator(m, float(t), grid.bin_width, jitter.sigma_d)
            for m, t in zip(mats, grid.instants)]


def tensor_operator(a: MeasurementOperator, b: MeasurementOperator) -> MeasurementOperator:
    """Kronecker product of two single-photon operators (bin widths multiply)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    ta = a.time if isinstance(a.time, tuple) else (a.time,)
    tb = b.time if isinstance(b.time, tuple) else (b.time,)
    return MeasurementOperator(np.kron(a.matrix, b.matrix), ta + tb,
                               a.bin_width * b.bin_width, a.jitter)


def pair_povm(single: Sequence[MeasurementOperator]) -> list[MeasurementOperator]:
    return [tensor_operator(a, b) for a in single for b in single]


def completeness_defect(pulse: PulseConfig, fiber: FiberConfig, points: int = 40001) -> np.ndarray:
    """Entrywise |int M(t) dt - 1| on a fine uniform grid.

    The trapezoid rule converges geometrically for these Gaussian integrands.
    """
    lo, hi = quadrature_window(pulse, fiber)
    ts = np.linspace(lo, hi, points)
    total = np.trapezoid(ideal_matrices(ts, pulse, fiber), ts, axis=0)
    return np.abs(total - np.eye(pulse.dim))


def design_matrix(ops: Sequence[MeasurementOperator]) -> np.ndarray:
    """Rows are tr(M_i X) as linear functionals on vectorized X (K x d^2)."""
    return np.stack([op.matrix.T.reshape(-1) for op in ops])


def informational_rank(ops: Sequence[MeasurementOperator], rtol: float = 1e-8) -> int:
    sv = np.linalg.svd(design_matrix(ops), compute_uv=False)
    return int(np.sum(sv > rtol * sv[0]))


def povm_to_records(ops: Sequence[MeasurementOperator]) -> list[dict]:
    """JSON-ready records {time_ps, bin_width_ps, sigma_d_ps, matrix} with [re, im] pairs row-major."""
    out = []
    for op in ops:
        t = list(op.time) if isinstance(op.time, tuple) else op.time
        out.append({
            "time_ps": t,
            "bin_width_ps": op.bin_width,
            "sigma_d_ps": op.jitter,
            "matrix": [[float(z.real), float(z.imag)] for z in op.matrix.reshape(-1)],
        })
    return out


def povm_from_records(records: Sequence[dict]) -> list[MeasurementOperator]:
    ops = []
    for rec in records:
        flat = np.array([complex(re, im) for re, im in rec["matrix"]])
        d = int(round(math.sqrt(flat.size)))
        if d * d != flat.size:
            raise ValueError(f"matrix with {flat.size} entries is not square")
        t = rec["time_ps"]
        t = tuple(t) if isinstance(t, list) else float(t)
        ops.append(MeasurementOperator(flat.reshape(d, d), t,
                                       float(rec["bin_width_ps"]), float(rec["sigma_d_ps"])))
    return ops


def povm_hash(ops: Sequence[MeasurementOperator]) -> str:
    """Digest of the operator set, rounded to 12 significant digits."""
    h = hashlib.sha256()
    for op in ops:
        h.update(np.array([op.bin_width, op.jitter]).round(12).tobytes())
        h.update(np.format_float_scientific(op.trace, precision=11).encode())
        m = op.matrix
        scale = max(float(np.abs(m).max()), 1e-300)
        h.update((np.round(m.view(float) / scale, 11) + 0.0).tobytes())
    return h.hexdigest()
