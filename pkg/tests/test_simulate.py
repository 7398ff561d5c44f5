import numpy as np
import pytest
from scipy import integrate

from conftest import random_density
from timebin_tomo.povm import jitter_kernel, weight_mu
from timebin_tomo.simulate import (
    CountRecord,
    derive_seed,
    expected_counts,
    make_config,
    poisson_sample,
    run_ensemble,
)
from timebin_tomo.states import maximally_mixed, pure, sample_state_grid


def _mu_jittered(t, cfg):
    sd = cfg.jitter.sigma_d
    if sd == 0:
        return weight_mu(t, cfg.pulse, cfg.fiber)
    val, _ = integrate.quad(lambda tp: weight_mu(tp, cfg.pulse, cfg.fiber) * jitter_kernel(t - tp, sd),
                            -120, 120, epsabs=1e-14, epsrel=1e-12, limit=400)
    return val


@pytest.mark.parametrize("sigma_d", [0.0, 1.0, 4.0])
def test_maximally_mixed_counts(sigma_d):
    cfg = make_config(2, 200.0, sigma_d)
    lam = expected_counts(maximally_mixed(2), cfg)
    oracle = [cfg.photons * cfg.grid.bin_width * _mu_jittered(t, cfg) / 2 for t in cfg.grid.instants]
    np.testing.assert_allclose(lam, oracle, rtol=1e-8)


def test_zero_photons_gives_zero_counts():
    cfg = make_config(2, 200.0, 1.0, photons=0)
    np.testing.assert_array_equal(expected_counts(pure([1, 0]), cfg), 0.0)


@pytest.mark.parametrize("sigma_d", [0.0, 4.0])
def test_complementary_fringe_counts(sigma_d):
    cfg = make_config(2, 500.0, sigma_d)
    plus = expected_counts(pure([1, 1]), cfg)
    minus = expected_counts(pure([1, -1]), cfg)
    np.testing.assert_allclose(plus + minus, 2 * expected_counts(maximally_mixed(2), cfg), rtol=1e-10)


def test_dimension_mismatch():
    cfg = make_config(2, 200.0, 0.0)
    with pytest.raises(ValueError):
        expected_counts(maximally_mixed(3), cfg)


def test_deficit_and_linearity(rng):
    cells = [(L, sd) for L in (200.0, 500.0) for sd in (0.0, 1.0, 4.0)]
    for dim, two in [(2, False), (3, False), (2, True)]:
        extra = [(5000.0, 20.0)] if two else []
        for L, sd in cells + extra:
            cfg = make_config(dim, L, sd, two_photon=two)
            d = cfg.dim
            for _ in range(10):
                a, b = random_density(rng, d, rank=1), random_density(rng, d)
                w = rng.uniform()
                la, lb = expected_counts(a, cfg), expected_counts(b, cfg)
                assert la.sum() <= cfg.photons * (1 + 1e-6)
                mix = expected_counts(w * a + (1 - w) * b, cfg)
                np.testing.assert_allclose(mix, w * la + (1 - w) * lb, rtol=1e-9, atol=1e-9)


def test_poisson_basics():
    np.testing.assert_array_equal(poisson_sample(np.zeros(7), 3), 0)
    lam = np.linspace(0, 40, 26)
    np.testing.assert_array_equal(poisson_sample(lam, 42), poisson_sample(lam, 42))
    assert not np.array_equal(poisson_sample(lam, 42), poisson_sample(lam, 43))
    with pytest.raises(ValueError):
        poisson_sample([1.0, -0.1], 0)


def test_poisson_moments():
    draws = poisson_sample(np.full(100_000, 50.0), 7)
    assert abs(draws.mean() - 50) < 0.5
    assert abs(draws.var() - 50) < 2


def test_derive_seed():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    seeds = {derive_seed(1, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(1, 0) != derive_seed(2, 0)
    assert 0 <= derive_seed(2**63, 5) < 2**64


def test_single_state_ensemble_is_expected_plus_poisson():
    cfg = make_config(2, 200.0, 1.0, seed=9)
    rho = pure([1, 1j])
    [(sid, rec)] = run_ensemble([rho], cfg)
    assert sid == 0 and isinstance(rec, CountRecord)
    np.testing.assert_array_equal(rec.expected, expected_counts(rho, cfg))
    np.testing.assert_array_equal(rec.sampled, poisson_sample(rec.expected, derive_seed(9, 0)))


def test_ensemble_order_independent(rng):
    cfg = make_config(2, 500.0, 4.0, seed=5)
    states = sample_state_grid(2, 3)
    ids = list(range(len(states)))
    perm = rng.permutation(len(states))
    a = dict(run_ensemble(states, cfg, ids=ids))
    b = dict(run_ensemble([states[i] for i in perm], cfg, ids=[ids[i] for i in perm]))
    for k in ids:
        np.testing.assert_array_equal(a[k].sampled, b[k].sampled)


def test_ensemble_parallel_matches_serial():
    cfg = make_config(2, 200.0, 1.0, seed=3)
    states = sample_state_grid(2, 2)
    serial = run_ensemble(states, cfg, workers=1)
    par = run_ensemble(states, cfg, workers=2)
    for (i, a), (j, b) in zip(serial, par):
        assert i == j
        np.testing.assert_array_equal(a.sampled, b.sampled)


def test_full_qubit_ensemble():
    cfg = make_config(2, 200.0, 0.0, photons=1000, seed=1)
    out = run_ensemble(sample_state_grid(2, 21), cfg)
    assert len(out) == 9261
    assert all(rec.sampled.shape == (26,) and rec.expected.sum() <= 1000 for _, rec in out)


def test_empty_ensemble():
    with pytest.raises(ValueError):
        run_ensemble([], make_config())


def test_default_thresholds():
    single = make_config(2, 500.0, 0.0)
    pair = make_config(2, 500.0, 0.0, two_photon=True)
    narrow = make_config(2, 500.0, 0.0, two_photon=True, threshold=0.05)
    assert single.grid.span > pair.grid.span
    assert narrow.grid.span > pair.grid.span
    assert len(pair.grid) == 5 and len(pair.povm) == 25
