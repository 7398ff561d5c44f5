import numpy as np
import pytest

from timebin_tomo.wavepacket import FiberConfig, PulseConfig


@pytest.fixture
def pulse():
    return PulseConfig()


@pytest.fixture
def fiber200():
    return FiberConfig(length=200.0)


@pytest.fixture
def fiber500():
    return FiberConfig(length=500.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_pure(rng, d):
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    return psi / np.linalg.norm(psi)


def random_density(rng, d, rank=None):
    rank = rank or d
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def pytest_terminal_summary(terminalreporter):
    reports = [r for key in ("passed", "failed") for r in terminalreporter.stats.get(key, [])
               if r.when == "call" and "test_acceptance.py::test_criterion_" in r.nodeid]
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    for rep in sorted(reports, key=lambda r: r.nodeid):
        name = rep.nodeid.split("::test_criterion_")[1]
        number, _, label = name.partition("_")
        verdict = "PASS" if rep.passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} {verdict}: {label.replace('_', ' ')}")
        for key, value in rep.user_properties:
            if key == "check":
                terminalreporter.write_line(f"    {value}")
