"""Density matrices, the W (triangular) parametrization, fidelity, state
families used as tomography benchmarks, and Bloch/Majorana coordinates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .wavepacket import FiberConfig, PulseConfig, chirp_coefficient
from .povm import weight_mu

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10


def check_density(rho: np.ndarray, name: str = "rho") -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; return rho as complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name} must be square, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
        raise ValueError(f"{name} is not Hermitian")
    if abs(np.trace(rho) - 1) > TRACE_TOL:
        raise ValueError(f"{name} has trace {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
        raise ValueError(f"{name} is not positive semidefinite")
    return rho


# ---------------------------------------------------------------------------
# W parametrization
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def w_layout(d: int) -> tuple[tuple[int, int], ...]:
    """Positions of the off-diagonal parameter pairs.

    The first d parameters are the real diagonal; the remaining ones come in
    (re, im) pairs walking the sub-diagonals outward, each top to bottom:
    (1,0), (2,1), ..., then (2,0), (3,1), ...  For d = 2, 3, 4 this is the
    numbering w1..w4, w1..w9 and w1..w16 used for the qubit, qutrit and
    two-qubit reconstructions.
    """
    return tuple((i + k, i) for k in range(1, d) for i in range(d - k))


def w_to_matrix(w, d: int | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if d is None:
        d = int(round(math.sqrt(w.size)))
    if w.size != d * d:
        raise ValueError(f"expected {d * d} parameters for d={d}, got {w.size}")
    mat = np.zeros((d, d), dtype=complex)
    mat[np.diag_indices(d)] = w[:d]
    rows, cols = np.array(w_layout(d), dtype=int).reshape(-1, 2).T if d > 1 else ((), ())
    mat[rows, cols] = w[d::2] + 1j * w[d + 1::2]
    return mat


def matrix_to_w(mat: np.ndarray) -> np.ndarray:
    d = mat.shape[0]
    w = np.empty(d * d)
    w[:d] = np.real(np.diag(mat))
    if d > 1:
        rows, cols = np.array(w_layout(d), dtype=int).T
        w[d::2] = mat[rows, cols].real
        w[d + 1::2] = mat[rows, cols].imag
    return w


def density_from_w(w, d: int | None = None) -> np.ndarray:
    """rho = W^dag W / tr(W^dag W) for lower-triangular complex W."""
    mat = w_to_matrix(w, d)
    s = mat.conj().T @ mat
    tr = np.real(np.trace(s))
    if not tr > 0:
        raise ValueError("W parameters are all zero; density matrix undefined")
    rho = s / tr
    return 0.5 * (rho + rho.conj().T)


def w_from_density(rho: np.ndarray, eps: float = 0.0) -> np.ndarray:
    """Lower-triangular W with W^dag W = rho, as a parameter vector.

    With J the exchange matrix, chol(J rho J) = L gives W = J L^dag J.
    ``eps`` regularizes rank-deficient input.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    flipped = rho[::-1, ::-1] + eps * np.eye(d)
    chol = np.linalg.cholesky(flipped)
    mat = chol.conj().T[::-1, ::-1]
    return matrix_to_w(mat)


# ---------------------------------------------------------------------------
# fidelity
# ---------------------------------------------------------------------------

def psd_sqrt(rho: np.ndarray, cutoff: float = 1e-14) -> np.ndarray:
    """Hermitian square root; eigenvalues below ``cutoff`` (round-off) are set to 0."""
    vals, vecs = np.linalg.eigh(rho)
    if vals.min() < -PSD_TOL:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {vals.min():.3e})")
    vals = np.where(vals < cutoff, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Evaluated as the squared nuclear norm of sqrt(sigma) sqrt(rho), which avoids
    taking square roots of round-off eigenvalues near rank-deficient inputs.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    sv = np.linalg.svd(psd_sqrt(sigma) @ psd_sqrt(rho), compute_uv=False)
    return float(min(1.0, sv.sum() ** 2))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(rho - sigma)).sum())


def pure(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


# ---------------------------------------------------------------------------
# benchmark state families
# ---------------------------------------------------------------------------

def bloch_state(r: float, theta: float, phi: float) -> np.ndarray:
    """Qubit with Bloch vector r (sin th cos ph, sin th sin ph, cos th)."""
    x = r * math.sin(theta) * math.cos(phi)
    y = r * math.sin(theta) * math.sin(phi)
    z = r * math.cos(theta)
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])


def qutrit_state(theta1: float, theta2: float, phi: float) -> np.ndarray:
    """Pure qutrit (cos th1, e^{i ph} sin th1 cos th2, sin th1 sin th2)."""
    psi = np.array([
        math.cos(theta1),
        np.exp(1j * phi) * math.sin(theta1) * math.cos(theta2),
        math.sin(theta1) * math.sin(theta2),
    ])
    return pure(psi)


def sample_state_grid(d: int, resolution: int) -> list[np.ndarray]:
    """resolution**3 benchmark states on a regular parameter grid.

    d = 2: Bloch ball over r in [0, 1], theta in [0, pi], phi in [0, 2 pi].
    d = 3: pure states over theta1, theta2 in [0, pi], phi in [0, 2 pi].
    Both ends of every range are included and coincident points are kept, so
    the count is exactly resolution**3.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    phis = np.linspace(0.0, 2 * math.pi, resolution)
    thetas = np.linspace(0.0, math.pi, resolution)
    if d == 2:
        radii = np.linspace(0.0, 1.0, resolution)
        return [bloch_state(r, th, ph) for r in radii for th in thetas for ph in phis]
    if d == 3:
        return [qutrit_state(a, b, ph) for a in thetas for b in thetas for ph in phis]
    raise ValueError(f"no state grid for d={d}")


def phi_plus(phi: float) -> np.ndarray:
    """Projector onto (|00> + e^{i phi} |11>) / sqrt(2)."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1.0
    psi[3] = np.exp(1j * phi)
    return pure(psi)


def phase_family(count: int) -> list[np.ndarray]:
    """``count`` Phi+ states with phases uniform on [0, 2 pi)."""
    return [phi_plus(p) for p in np.arange(count) * 2 * math.pi / count]


def partial_trace(rho: np.ndarray, keep: int, dims=(2, 2)) -> np.ndarray:
    r = rho.reshape(dims[0], dims[1], dims[0], dims[1])
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    return np.einsum("ijil->jl", r)


# ---------------------------------------------------------------------------
# coordinates for plotting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlochPoint:
    x: float
    y: float
    z: float

    @property
    def radius(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


@dataclass(frozen=True)
class MajoranaPair:
    points: tuple[BlochPoint, BlochPoint]
    roots: tuple[complex, complex]
    time: float
    weight: float


def bloch_coordinates(rho: np.ndarray) -> BlochPoint:
    """(x, y, z) = (2 Re rho01, 2 Im rho10, rho00 - rho11), i.e. tr(rho sigma_i)."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise ValueError(f"Bloch coordinates need a 2x2 matrix, got {rho.shape}")
    return BlochPoint(
        float(2 * rho[0, 1].real),
        float(2 * rho[1, 0].imag),
        float((rho[0, 0] - rho[1, 1]).real),
    )


def stereographic(z: complex) -> BlochPoint:
    """Inverse stereographic projection from the south pole; infinity maps to (0, 0, -1)."""
    if not np.isfinite(z):
        return BlochPoint(0.0, 0.0, -1.0)
    n = 1.0 + abs(z) ** 2
    return BlochPoint(2 * z.real / n, 2 * z.imag / n, (1 - abs(z) ** 2) / n)


def majorana_coefficients(t: float, pulse: PulseConfig, fiber: FiberConfig) -> np.ndarray:
    """(a, b, c) of a z^2 + b z + c with a = e^{i(t-tau)^2/D}, b = -sqrt(2) e^{i t^2/D},
    c = e^{i(t+tau)^2/D}, D = 4 beta L - 2 i sigma^2, rescaled by a common factor."""
    k = chirp_coefficient(pulse, fiber)  # i / D
    tau = pulse.tau
    logs = np.array([k * (t - tau) ** 2, k * t**2, k * (t + tau) ** 2])
    logs -= logs.real.max()
    coef = np.exp(logs)
    coef[1] *= -math.sqrt(2.0)
    return coef


def majorana_roots(t: float, pulse: PulseConfig, fiber: FiberConfig) -> tuple[complex, complex]:
    a, b, c = majorana_coefficients(t, pulse, fiber)
    if abs(a) < 1e-14:
        # one root escapes to infinity, the other is -c/b
        return (complex(np.inf), complex(-c / b))
    disc = np.sqrt(b * b - 4 * a * c)
    # pick the sign that avoids cancellation, then use Vieta for the partner
    qq = -0.5 * (b + disc) if abs(b + disc) >= abs(b - disc) else -0.5 * (b - disc)
    r1 = qq / a
    r2 = c / qq if qq != 0 else -b / a - r1
    return (complex(r1), complex(r2))


def majorana_pair(t: float, pulse: PulseConfig, fiber: FiberConfig) -> MajoranaPair:
    if pulse.dim != 3:
        raise ValueError("Majorana pairs are defined for qutrits only")
    roots = majorana_roots(t, pulse, fiber)
    pts = (stereographic(roots[0]), stereographic(roots[1]))
    return MajoranaPair(pts, roots, float(t), float(weight_mu(t, pulse, fiber)))
