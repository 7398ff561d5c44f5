import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_pure
from timebin_tomo.states import (
    bloch_coordinates,
    bloch_state,
    check_density,
    density_from_w,
    fidelity,
    majorana_coefficients,
    majorana_pair,
    majorana_roots,
    matrix_to_w,
    maximally_mixed,
    partial_trace,
    phase_family,
    phi_plus,
    pure,
    sample_state_grid,
    stereographic,
    trace_distance,
    w_from_density,
    w_layout,
    w_to_matrix,
)
from timebin_tomo.wavepacket import FiberConfig, PulseConfig


def test_w_layout_matches_triangular_numbering():
    # qubit: W = [[w1, 0], [w3 + i w4, w2]]
    np.testing.assert_array_equal(w_to_matrix([1, 2, 3, 4]), [[1, 0], [3 + 4j, 2]])
    # qutrit: rows (w4 + i w5, w2, 0), (w8 + i w9, w6 + i w7, w3)
    m = w_to_matrix(np.arange(1, 10))
    np.testing.assert_array_equal(m, [[1, 0, 0], [4 + 5j, 2, 0], [8 + 9j, 6 + 7j, 3]])
    m = w_to_matrix(np.arange(1, 17))
    expected = [
        [1, 0, 0, 0],
        [5 + 6j, 2, 0, 0],
        [11 + 12j, 7 + 8j, 3, 0],
        [15 + 16j, 13 + 14j, 9 + 10j, 4],
    ]
    np.testing.assert_array_equal(m, expected)
    assert w_layout(2) == ((1, 0),)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_w_layout_bijective(rng, d):
    w = rng.normal(size=d * d)
    np.testing.assert_array_equal(matrix_to_w(w_to_matrix(w)), w)
    m = w_to_matrix(w)
    assert np.all(np.triu(m, 1) == 0)
    assert np.all(np.diag(m).imag == 0)


def test_density_from_w_examples():
    np.testing.assert_allclose(density_from_w([1, 1, 0, 0]), np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(density_from_w([1, 0, 0, 0]), [[1, 0], [0, 0]], atol=1e-15)
    with pytest.raises(ValueError):
        density_from_w(np.zeros(4))
    with pytest.raises(ValueError):
        density_from_w(np.ones(5))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_density_from_w_physical(rng, d):
    for _ in range(10_000 // 3):
        rho = density_from_w(rng.normal(size=d * d) * rng.exponential())
        assert abs(np.trace(rho) - 1) < 1e-10
        assert np.abs(rho - rho.conj().T).max() < 1e-12
        assert np.linalg.eigvalsh(rho).min() > -1e-10


@pytest.mark.parametrize("d", [2, 3, 4])
def test_w_factorization_recovers_density(rng, d):
    worst = 0.0
    for _ in range(1000):
        vals = rng.dirichlet(np.ones(d))
        q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
        rho = (q * vals) @ q.conj().T
        worst = max(worst, np.linalg.norm(density_from_w(w_from_density(rho)) - rho))
    assert worst < 1e-10


def test_check_density():
    check_density(np.eye(2) / 2)
    with pytest.raises(ValueError):
        check_density(np.eye(2))
    with pytest.raises(ValueError):
        check_density(np.array([[1.5, 0], [0, -0.5]]))
    with pytest.raises(ValueError):
        check_density(np.array([[0.5, 0.1], [0.2, 0.5]]))


def test_fidelity_examples():
    zero, one = pure([1, 0]), pure([0, 1])
    assert fidelity(zero, zero) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(maximally_mixed(2), zero) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        fidelity(zero, maximally_mixed(3))
    with pytest.raises(ValueError):
        fidelity(zero, np.diag([1.5, -0.5]))


def test_fidelity_axioms(rng):
    for _ in range(10_000):
        d = int(rng.integers(2, 5))
        a = random_density(rng, d, rank=int(rng.integers(1, d + 1)))
        b = random_density(rng, d, rank=int(rng.integers(1, d + 1)))
        fab, fba = fidelity(a, b), fidelity(b, a)
        assert 0.0 <= fab <= 1.0
        assert abs(fab - fba) < 1e-10
        assert fidelity(a, a) == pytest.approx(1.0, abs=1e-10)


def test_pure_state_reduction(rng):
    for _ in range(1000):
        d = int(rng.integers(2, 5))
        psi, phi = random_pure(rng, d), random_pure(rng, d)
        assert fidelity(pure(psi), pure(phi)) == pytest.approx(abs(np.vdot(psi, phi)) ** 2, abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8), st.lists(st.floats(-3, 3), min_size=8, max_size=8))
def test_fidelity_symmetric_property(a, b):
    wa = np.array(a[:4]) + 0.05
    wb = np.array(b[:4]) + 0.05
    ra, rb = density_from_w(wa), density_from_w(wb)
    assert abs(fidelity(ra, rb) - fidelity(rb, ra)) < 1e-10


def test_qubit_grid_count_and_membership():
    grid = sample_state_grid(2, 21)
    assert len(grid) == 9261
    for rho in grid[:: 97]:
        check_density(rho)
    cardinals = [pure([1, 0]), pure([0, 1]), pure([1, 1]), pure([1, -1]), pure([1, 1j]), pure([1, -1j])]
    flat = np.array([g.reshape(-1) for g in grid])
    for target in cardinals + [maximally_mixed(2)]:
        assert np.abs(flat - target.reshape(-1)).max(axis=1).min() < 1e-12


def test_qutrit_grid():
    grid = sample_state_grid(3, 7)
    assert len(grid) == 343
    for rho in grid:
        check_density(rho)
        assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        sample_state_grid(4, 3)
    with pytest.raises(ValueError):
        sample_state_grid(2, 1)


def test_phi_plus():
    assert fidelity(phi_plus(0), phi_plus(0)) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(phi_plus(0), phi_plus(math.pi)) == pytest.approx(0.0, abs=1e-12)
    for phi in np.linspace(0, 2 * math.pi, 13):
        rho = phi_plus(phi)
        check_density(rho)
        np.testing.assert_allclose(partial_trace(rho, 0), np.eye(2) / 2, atol=1e-15)
        np.testing.assert_allclose(partial_trace(rho, 1), np.eye(2) / 2, atol=1e-15)
    fam = phase_family(200)
    assert len(fam) == 200


def test_partial_trace_of_product(rng):
    a, b = random_density(rng, 2), random_density(rng, 2)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), 0), a, atol=1e-14)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), 1), b, atol=1e-14)


def test_bloch_coordinates():
    assert bloch_coordinates(maximally_mixed(2)).radius == 0.0
    p = bloch_coordinates(pure([1, 0]))
    assert (p.x, p.y, p.z) == pytest.approx((0, 0, 1))
    p = bloch_coordinates(pure([1, 1]))
    assert (p.x, p.y, p.z) == pytest.approx((1, 0, 0))
    p = bloch_coordinates(pure([1, 1j]))
    assert (p.x, p.y, p.z) == pytest.approx((0, 1, 0))
    p = bloch_coordinates(bloch_state(0.7, 1.1, 2.3))
    assert p.radius == pytest.approx(0.7)
    with pytest.raises(ValueError):
        bloch_coordinates(maximally_mixed(3))


def test_stereographic():
    assert stereographic(0j).z == 1.0
    assert stereographic(complex(np.inf)).z == -1.0
    p = stereographic(1 + 0j)
    assert (p.x, p.y, p.z) == pytest.approx((1, 0, 0))


@pytest.mark.parametrize("length", [200.0, 500.0])
def test_majorana_vieta_and_sphere(length):
    pulse, fiber = PulseConfig(dim=3), FiberConfig(length=length)
    den = 4 * fiber.beta_l - 2j * pulse.sigma**2
    for t in np.linspace(-25, 25, 41):
        r1, r2 = majorana_roots(t, pulse, fiber)
        target = np.exp(1j * (t + pulse.tau) ** 2 / den) / np.exp(1j * (t - pulse.tau) ** 2 / den)
        assert abs(r1 * r2 - target) <= 1e-9 * max(1.0, abs(target))
        a, b, c = majorana_coefficients(t, pulse, fiber)
        for r in (r1, r2):
            assert abs(a * r * r + b * r + c) < 1e-9 * max(1, abs(r)) ** 2
        pair = majorana_pair(t, pulse, fiber)
        for p in pair.points:
            assert p.radius == pytest.approx(1.0, abs=1e-10)
        assert pair.weight > 0


def test_majorana_pairs_differ_between_lengths():
    pulse = PulseConfig(dim=3)
    ts = np.linspace(-20, 20, 26)
    clouds = []
    for length in (200.0, 500.0):
        fiber = FiberConfig(length=length)
        clouds.append(np.array([[[p.x, p.y, p.z] for p in majorana_pair(t, pulse, fiber).points] for t in ts]))
    assert np.abs(clouds[0] - clouds[1]).max() > 0.1
    with pytest.raises(ValueError):
        majorana_pair(0.0, PulseConfig(dim=2), FiberConfig(length=200.0))


def test_trace_distance():
    assert trace_distance(pure([1, 0]), pure([0, 1])) == pytest.approx(1.0)
    assert trace_distance(maximally_mixed(2), maximally_mixed(2)) == 0.0
