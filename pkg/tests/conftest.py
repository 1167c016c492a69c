import functools
import json
from pathlib import Path

import numpy as np
import pytest

from adslab import boundary as Bd
from adslab import solver
from adslab.mesh import disc_mesh

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def oracles():
    return json.loads((FIXTURES / "oracles.json").read_text())


@pytest.fixture(scope="session")
def regression():
    return json.loads((FIXTURES / "regression.json").read_text())


def fourier_boundary(a=(0.0,), b=(0.0,), N=128):
    return Bd.AdmissibleBoundary.from_fourier(Bd.Fourier(tuple(a), tuple(b)), N=N)


MIXED = ((0.0, 0.0, 0.3), (0.0, 0.2))


@functools.lru_cache(maxsize=None)
def mesh(K, R=3.0):
    return disc_mesh(K, R)


@functools.lru_cache(maxsize=None)
def solved(a, b, H, K, center=True):
    """Cached CMC solve for a Fourier boundary (coefficients as tuples)."""
    bd = fourier_boundary(a, b)
    if center:
        bd = Bd.center(bd).boundary
    return solver.solve_cmc(bd, H, mesh(K))


@functools.lru_cache(maxsize=None)
def umbilical(H, K):
    from adslab.hull import delta_of, umbilical_graph
    m = mesh(K)
    ring = m.boundary_ring
    d = umbilical_graph(delta_of(H, 2), m.hyperboloid()[ring])
    return solver.solve_cmc(None, H, m, dirichlet=d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance summary ------------------------------------------------------

ACCEPTANCE: dict = {}


def record(number: int, ok: bool, detail: str) -> bool:
    """Store the outcome of one acceptance criterion for the terminal summary."""
    ACCEPTANCE[number] = (bool(ok), detail)
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
