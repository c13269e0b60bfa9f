import sys

import numpy as np
import pytest

from solitonspheres.reflectionless import dirac_potential, dirac_sphere_data
from solitonspheres.scattering import GridPotential
from solitonspheres.weierstrass import build_spinor, immerse


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical checks")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 16):
        line = mod.RESULTS.get(n)
        if line is None:
            # errored before producing a measurement, or not selected
            line = f"criterion {n:2d}: {'FAIL' if _acceptance_ran(terminalreporter, n) else 'not run'}"
        terminalreporter.write_line(line)


def _acceptance_ran(reporter, n):
    tag = f"test_criterion_{n:02d}_"
    for key in ("failed", "error", "passed"):
        for rep in reporter.stats.get(key, []):
            if tag in getattr(rep, "nodeid", ""):
                return True
    return False


@pytest.fixture(scope="session")
def U1():
    return GridPotential.from_function(lambda x: dirac_potential(1, x))


@pytest.fixture(scope="session")
def U2():
    return GridPotential.from_function(lambda x: dirac_potential(2, x))


@pytest.fixture(scope="session")
def U3():
    return GridPotential.from_function(lambda x: dirac_potential(3, x))


@pytest.fixture(scope="session")
def gauss_U():
    return GridPotential.from_function(lambda x: 0.3 * np.exp(-x * x))


@pytest.fixture(scope="session")
def sphere_field():
    return build_spinor(dirac_sphere_data(1), [1, 0])


@pytest.fixture(scope="session")
def sphere(sphere_field):
    return immerse(sphere_field)


@pytest.fixture(scope="session")
def dirac_surfaces():
    """Pure and mixed kernel elements for N = 1, 2, 3."""
    out = {}
    for N in (1, 2, 3):
        d = dirac_sphere_data(N)
        pure = [1] + [0] * (2 * N - 1)
        mixed = [1, 1] + [0] * (2 * N - 2) if N > 1 else [1, 0.5]
        for tag, a in (("pure", pure), ("mixed", mixed)):
            psi = build_spinor(d, a)
            out[N, tag] = (psi, immerse(psi))
    return out
