import math
import sys

import numpy as np
import pytest

from measuresl import BoundaryConditionSpec, Measure, build_problem, build_tau, from_classical


def random_triple(rng: np.random.Generator, L: float = 3.0):
    """Random valid (rho, sigma, chi) on (0, L) mixing atoms and piecewise densities.

    rho has a positive density everywhere, so there are no gaps; atom
    positions of the three measures are all distinct.
    """
    nb = int(rng.integers(2, 5))
    br = np.sort(np.concatenate([[0.0, L], rng.uniform(0.2, L - 0.2, nb)]))
    cells = list(zip(br[:-1], br[1:]))
    spots = rng.permutation(np.linspace(0.15, L - 0.15, 30))[:6]
    rho = Measure(0, L, atoms=[(x, rng.uniform(0.2, 1.5)) for x in spots[:2]],
                  density=[(x0, x1, rng.uniform(0.5, 2.0)) for x0, x1 in cells])
    sig = Measure(0, L, atoms=[(x, rng.uniform(0.05, 0.5)) for x in spots[2:4]],
                  density=[(x0, x1, rng.uniform(0.5, 2.0)) for x0, x1 in cells])
    chi = Measure(0, L, atoms=[(x, rng.uniform(-1.0, 1.0)) for x in spots[4:6]],
                  density=[(x0, x1, rng.uniform(-1.0, 1.0)) for x0, x1 in cells])
    return rho, sig, chi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def dirichlet_pi():
    tau = from_classical(1.0, 1.0, 0.0, (0.0, math.pi))
    return build_problem(tau, BoundaryConditionSpec.separate(0.0, 0.0))


@pytest.fixture(scope="session")
def mixed_problem():
    """Separate conditions on a triple with atoms in every coefficient."""
    rho = Measure(0, 2, atoms=[(0.7, 0.5)], density=[(0, 2, 1.0)])
    sig = Measure(0, 2, atoms=[(1.3, 0.2)], density=[(0, 1, 1.0), (1, 2, 2.0)])
    chi = Measure(0, 2, atoms=[(0.4, -0.3)], density=[(0, 2, 0.5)])
    tau = build_tau(rho, sig, chi)
    return build_problem(tau, BoundaryConditionSpec.separate(0.3, 1.1))


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is not None and acc.REPORT:
        terminalreporter.section("acceptance criteria")
        for n in sorted(acc.REPORT):
            terminalreporter.write_line(acc.REPORT[n])
