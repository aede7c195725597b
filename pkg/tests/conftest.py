import numpy as np
import pytest

from mirrorflow import spectral
from mirrorflow.fields import GridSpec, VectorField


def band_limited(grid: GridSpec, band: int, rng: np.random.Generator) -> VectorField:
    """Random real field on the periodic cube with |k_i| <= band in every direction."""
    wn = spectral.wavenumbers(grid)
    inside = (np.abs(wn.k[0]) <= band) & (np.abs(wn.k[1]) <= band) & (np.abs(wn.k[2]) <= band)
    shape = (3,) + wn.kappa2.shape
    c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * inside
    return VectorField(grid, spectral.irfft3(c, grid.shape))


def band_limited_scalar(grid: GridSpec, band: int, rng: np.random.Generator) -> np.ndarray:
    return band_limited(grid, band, rng).data[0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def cube16():
    return GridSpec.periodic_cube(16)


@pytest.fixture(scope="session")
def cube32():
    return GridSpec.periodic_cube(32)


# one verdict line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}
ACCEPTANCE_NAMES = {
    1: "identity suite",
    2: "compatibility iff",
    3: "forced low orders",
    4: "counterexample traces",
    5: "symmetry persistence",
    6: "exact shear regression",
    7: "inviscid limit",
    8: "norm equivalence",
    9: "solver health",
}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, name in ACCEPTANCE_NAMES.items():
        terminalreporter.write_line(ACCEPTANCE.get(k, f"criterion {k} ({name}): NO VERDICT (errored or not run)"))
