import numpy as np
import pytest

from ksampling.gridops import a0_apply, idwt2
from ksampling.wavelets import WaveletSpec

SYM10_J3 = WaveletSpec("symmlet", 3, 10)
SHANNON_J3 = WaveletSpec("shannon", 3)


def synthesis_matrix(spec, n):
    """Psi assembled column by column from idwt2 of unit coefficients."""
    cols = np.empty((n * n, n * n))
    unit = np.zeros((n, n))
    for j in range(n * n):
        unit.flat[j] = 1.0
        cols[:, j] = idwt2(unit, spec).ravel()
        unit.flat[j] = 0.0
    return cols


def dft_matrix_centred(n):
    """Unitary 2D DFT on the centred grid as an explicit n^2 x n^2 matrix,
    built from the defining sum (no FFT)."""
    k = np.arange(n) - n // 2
    t = np.arange(n)
    f1 = np.exp(-2j * np.pi * np.outer(k, t) / n) / np.sqrt(n)
    return np.kron(f1, f1)


def a0_matrix(spec, n):
    return dft_matrix_centred(n) @ synthesis_matrix(spec, n)


@pytest.fixture(scope="session")
def a0_32():
    return a0_matrix(SYM10_J3, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def columns_via_operator(spec, n):
    """A0 assembled from the matrix-free apply, for cross-checks."""
    out = np.empty((n * n, n * n), dtype=complex)
    unit = np.zeros((n, n))
    for j in range(n * n):
        unit.flat[j] = 1.0
        out[:, j] = a0_apply(unit, spec).ravel()
        unit.flat[j] = 0.0
    return out


# one "criterion N: PASS/FAIL ..." line per acceptance criterion, printed at
# the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
