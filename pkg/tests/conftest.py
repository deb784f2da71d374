import numpy as np
import pytest

from fracinv.spectral import BoundarySpec, SpatialMesh, assemble_operator, eigenbasis


def make_basis(n_cells=256, n_modes=64, a=1.0, sigma=(0.0, 0.0), L=1.0):
    mesh = SpatialMesh(L, n_cells)
    bd = BoundarySpec(*sigma)
    return eigenbasis(assemble_operator(mesh, a, bd), n_modes)


@pytest.fixture(scope="session")
def dirichlet_basis():
    return make_basis()


@pytest.fixture(scope="session")
def small_basis():
    return make_basis(n_cells=64, n_modes=32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
