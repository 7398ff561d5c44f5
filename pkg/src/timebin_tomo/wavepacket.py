"""Gaussian time-bin envelopes, dispersive propagation and basis overlaps.

Units: time in ps, length in m, group-velocity dispersion in ps^2/m.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

#: 1 s^2/m expressed in ps^2/m.
S2_PER_M_TO_PS2_PER_M = 1e24

#: SMF28e+ group-velocity dispersion, -1.15e-26 s^2/m.
DEFAULT_BETA_PS2_PER_M = -1.15e-26 * S2_PER_M_TO_PS2_PER_M
DEFAULT_SIGMA_PS = 0.65
DEFAULT_TAU_PS = 5.0

_OVERLAP_WARN = 1e-3


def beta_from_si(beta_s2_per_m: float) -> float:
    """Convert a dispersion parameter from s^2/m to ps^2/m."""
    return beta_s2_per_m * S2_PER_M_TO_PS2_PER_M


@dataclass(frozen=True)
class PulseConfig:
    """Envelope width ``sigma``, bin separation ``tau`` (both ps) and qudit dimension."""

    sigma: float = DEFAULT_SIGMA_PS
    tau: float = DEFAULT_TAU_PS
    dim: int = 2

    def __post_init__(self):
        if not self.sigma > 0 or not self.tau > 0:
            raise ValueError(f"sigma and tau must be positive, got sigma={self.sigma}, tau={self.tau}")
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        neighbour = math.exp(-self.tau**2 / (4 * self.sigma**2))
        if neighbour >= _OVERLAP_WARN:
            warnings.warn(
                f"time bins overlap by {neighbour:.2e}; basis is far from orthogonal",
                stacklevel=2,
            )

    @property
    def centers(self) -> np.ndarray:
        """Bin centres n*tau - (d-1)*tau/2, symmetric around t = 0."""
        n = np.arange(self.dim)
        return n * self.tau - 0.5 * (self.dim - 1) * self.tau


@dataclass(frozen=True)
class FiberConfig:
    """Fiber with dispersion ``beta`` (ps^2/m, signed) and ``length`` (m)."""

    beta: float = DEFAULT_BETA_PS2_PER_M
    length: float = 0.0

    def __post_init__(self):
        if self.length < 0:
            raise ValueError(f"fiber length must be >= 0, got {self.length}")

    @property
    def beta_l(self) -> float:
        """Accumulated dispersion beta*L in ps^2."""
        return self.beta * self.length


def spread_constant(pulse: PulseConfig, fiber: FiberConfig) -> float:
    """C = 4 beta^2 L^2 + sigma^4 (ps^4); sets the width of the propagated pulse."""
    return 4.0 * fiber.beta_l**2 + pulse.sigma**4


def propagated_width(pulse: PulseConfig, fiber: FiberConfig) -> float:
    """Temporal standard deviation of |u_L(t)|^2 in ps."""
    return math.sqrt(spread_constant(pulse, fiber)) / (pulse.sigma * math.sqrt(2.0))


def envelope(t, pulse: PulseConfig):
    """Normalized Gaussian amplitude exp(-t^2 / 2 sigma^2) / (pi^1/4 sqrt(sigma))."""
    t = np.asarray(t, dtype=float)
    s = pulse.sigma
    return np.exp(-(t**2) / (2 * s**2)) / (np.pi**0.25 * np.sqrt(s))


def chirp_coefficient(pulse: PulseConfig, fiber: FiberConfig) -> complex:
    """The complex coefficient a with u_L(t) = A exp(a t^2).

    a = i / (4 beta L - 2 i sigma^2) = (-sigma^2 + 2 i beta L) / (2 C).
    """
    c = spread_constant(pulse, fiber)
    return complex(-pulse.sigma**2, 2.0 * fiber.beta_l) / (2.0 * c)


def propagated_prefactor(pulse: PulseConfig, fiber: FiberConfig) -> complex:
    """Amplitude 1 / (pi^1/4 sqrt(sigma + 2 i beta L / sigma)), principal root."""
    s = pulse.sigma
    return 1.0 / (np.pi**0.25 * np.sqrt(complex(s, 2.0 * fiber.beta_l / s)))


def propagated_envelope(t, pulse: PulseConfig, fiber: FiberConfig):
    """Envelope after a dispersive fiber; reduces to :func:`envelope` at L = 0."""
    t = np.asarray(t, dtype=float)
    if fiber.beta_l == 0.0:
        return envelope(t, pulse).astype(complex)
    a = chirp_coefficient(pulse, fiber)
    return propagated_prefactor(pulse, fiber) * np.exp(a * t**2)


def _check_index(i: int, pulse: PulseConfig) -> None:
    if not 0 <= i < pulse.dim:
        raise IndexError(f"bin index {i} outside [0, {pulse.dim})")


def basis_overlap(n: int, k: int, pulse: PulseConfig) -> float:
    """<n|k> = exp(-tau^2 (k-n)^2 / (4 sigma^2)) for Gaussian time bins."""
    _check_index(n, pulse)
    _check_index(k, pulse)
    delta = (k - n) * pulse.tau
    return math.exp(-(delta**2) / (4 * pulse.sigma**2))


def gram_matrix(pulse: PulseConfig) -> np.ndarray:
    c = pulse.centers
    delta = c[:, None] - c[None, :]
    return np.exp(-(delta**2) / (4 * pulse.sigma**2))


def quadrature_window(pulse: PulseConfig, fiber: FiberConfig, widths: float = 20.0):
    """Time window covering every bin out to ``widths`` propagated widths."""
    half = widths * math.sqrt(spread_constant(pulse, fiber)) / pulse.sigma
    edge = 0.5 * (pulse.dim - 1) * pulse.tau
    return -edge - half, edge + half


def norm_by_quadrature(pulse: PulseConfig, fiber: FiberConfig) -> float:
    """Integral of |u_L(t)|^2 over a +-20 width window."""
    lo, hi = quadrature_window(pulse, fiber)
    val, _ = integrate.quad(
        lambda t: abs(propagated_envelope(t, pulse, fiber)) ** 2,
        lo, hi, epsabs=0.0, epsrel=1e-12, limit=400, points=[0.0],
    )
    return val
