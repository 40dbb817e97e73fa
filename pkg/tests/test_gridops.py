import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ksampling.gridops import (
    MeasurementOperator,
    a0_adjoint,
    a0_adjoint_complex,
    a0_apply,
    check_image,
    dwt2,
    fft2_unitary,
    frequency_grid,
    idwt2,
    ifft2_unitary,
    masked_adjoint,
    masked_apply,
)
from ksampling.wavelets import WaveletSpec

from conftest import SHANNON_J3, SYM10_J3, dft_matrix_centred


def naive_dft_centred(img):
    """O(N^4) unitary DFT with output entry (r, c) at frequency (r - N/2, c - N/2)."""
    n = img.shape[0]
    out = np.zeros((n, n), dtype=complex)
    t = np.arange(n)
    for r in range(n):
        for c in range(n):
            ky, kx = r - n // 2, c - n // 2
            phase = np.exp(-2j * np.pi * (ky * t[:, None] + kx * t[None, :]) / n)
            out[r, c] = (img * phase).sum() / n
    return out


def test_fft_delta_against_naive_sum():
    img = np.zeros((4, 4))
    img[0, 0] = 1.0
    k = fft2_unitary(img)
    np.testing.assert_allclose(k, naive_dft_centred(img), atol=1e-12)
    np.testing.assert_allclose(np.abs(k), 0.25, atol=1e-12)


def test_fft_random_against_naive_sum(rng):
    img = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    np.testing.assert_allclose(fft2_unitary(img), naive_dft_centred(img), atol=1e-12)


def test_fft_constant_image():
    n, c = 16, 3.5
    k = fft2_unitary(np.full((n, n), c))
    assert k[n // 2, n // 2] == pytest.approx(c * n, abs=1e-12)
    k[n // 2, n // 2] = 0
    assert np.abs(k).max() < 1e-12


def test_parseval_and_inverse(rng):
    img = rng.standard_normal((32, 32))
    k = fft2_unitary(img)
    assert np.linalg.norm(k) == pytest.approx(np.linalg.norm(img), rel=1e-12)
    np.testing.assert_allclose(ifft2_unitary(k), img, atol=1e-12)


def test_frequency_grid_convention():
    ky, kx = frequency_grid(8)
    assert ky[4, 4] == 0 and kx[4, 4] == 0
    assert ky[0, 0] == -4 and kx[0, 7] == 3


@pytest.mark.parametrize("spec", [SYM10_J3, SHANNON_J3])
def test_dwt_roundtrip_and_energy(spec, rng):
    img = rng.standard_normal((32, 32))
    c = dwt2(img, spec)
    assert np.linalg.norm(c) == pytest.approx(np.linalg.norm(img), rel=1e-12)
    np.testing.assert_allclose(idwt2(c, spec), img, atol=1e-12)
    np.testing.assert_allclose(dwt2(idwt2(c, spec), spec), c, atol=1e-12)


def test_idwt_zero_and_atom_orthogonality():
    spec = SYM10_J3
    assert np.all(idwt2(np.zeros((32, 32)), spec) == 0)
    a = np.zeros((32, 32))
    b = np.zeros((32, 32))
    a[1, 2] = 1.0
    b[9, 20] = 1.0
    atom_a, atom_b = idwt2(a, spec), idwt2(b, spec)
    assert abs(np.vdot(atom_a, atom_b)) < 1e-10
    assert np.linalg.norm(atom_a) == pytest.approx(1.0, abs=1e-12)


def test_dwt_delta_matches_matrix_rows(rng):
    from conftest import synthesis_matrix

    spec = SYM10_J3
    psi = synthesis_matrix(spec, 32)
    img = np.zeros((32, 32))
    img[0, 0] = 1.0
    # analysis of a delta is column 0 of Psi^T, i.e. row 0 of Psi
    np.testing.assert_allclose(dwt2(img, spec).ravel(), psi[0, :], atol=1e-10)


def test_dwt_errors():
    with pytest.raises(ValueError):
        dwt2(np.zeros((24, 24)), SYM10_J3)
    with pytest.raises(ValueError):
        dwt2(np.zeros((16, 16)), WaveletSpec(levels=3))
    with pytest.raises(ValueError):
        check_image(np.full((16, 16), np.nan))


def test_a0_matches_explicit_matrix(a0_32, rng):
    x = rng.standard_normal((32, 32))
    np.testing.assert_allclose(a0_apply(x, SYM10_J3).ravel(), a0_32 @ x.ravel(), atol=1e-10)


def test_a0_norms_preserved(rng):
    for _ in range(100):
        x = rng.standard_normal((32, 32))
        assert np.linalg.norm(a0_apply(x, SYM10_J3)) == pytest.approx(np.linalg.norm(x), rel=1e-10)


def test_a0_zero():
    assert np.all(a0_apply(np.zeros((16, 16)), WaveletSpec(levels=2)) == 0)
    assert np.all(a0_adjoint(np.zeros((16, 16), dtype=complex), WaveletSpec(levels=2)) == 0)


def test_a0_adjoint_inverts_apply(rng):
    x = rng.standard_normal((32, 32))
    back, imag = a0_adjoint(a0_apply(x, SYM10_J3), SYM10_J3, return_imag=True)
    np.testing.assert_allclose(back, x, atol=1e-10)
    assert imag < 1e-10


def test_adjoint_identity(rng):
    spec = SYM10_J3
    for _ in range(10):
        x = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
        y = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
        lhs = np.vdot(y, a0_apply(x, spec))
        rhs = np.vdot(a0_adjoint_complex(y, spec), x)
        assert abs(lhs - rhs) < 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)


def test_masked_full_mask_equals_a0(rng):
    n = 16
    spec = WaveletSpec(levels=2)
    x = rng.standard_normal((n, n))
    op = MeasurementOperator(np.arange(n * n), spec, n)
    np.testing.assert_allclose(masked_apply(op, x), a0_apply(x, spec).ravel(), atol=1e-12)
    # A* A = I on the full mask
    np.testing.assert_allclose(np.real(op.adjoint(op.apply(x))), x, atol=1e-10)


def test_masked_single_index(rng):
    x = rng.standard_normal((32, 32))
    op = MeasurementOperator([517], SYM10_J3, 32)
    val = masked_apply(op, x)
    assert val.shape == (1,)
    assert val[0] == pytest.approx(fft2_unitary(idwt2(x, SYM10_J3)).ravel()[517], abs=1e-12)


def test_masked_rows_match_matrix(a0_32, rng):
    idx = rng.choice(1024, size=200, replace=False)
    op = MeasurementOperator(idx, SYM10_J3, 32)
    x = rng.standard_normal((32, 32))
    np.testing.assert_allclose(masked_apply(op, x), a0_32[idx] @ x.ravel(), atol=1e-10)
    u = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    np.testing.assert_allclose(
        masked_adjoint(op, u).ravel(), a0_32[idx].conj().T @ u, atol=1e-10
    )


def test_row_orthonormality(rng):
    idx = rng.choice(1024, size=300, replace=False)
    op = MeasurementOperator(idx, SYM10_J3, 32)
    u = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    np.testing.assert_allclose(op.apply(op.adjoint(u)), u, atol=1e-10)


def test_masked_adjoint_consistency_random_masks(rng):
    spec = SYM10_J3
    for size in (1, 50, 700):
        idx = rng.integers(0, 1024, size=size)  # repeats allowed
        op = MeasurementOperator(idx, spec, 32)
        x = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
        u = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        assert abs(np.vdot(u, op.apply(x)) - np.vdot(op.adjoint(u), x)) < 1e-9 * (
            np.linalg.norm(x) * np.linalg.norm(u)
        )


def test_measurement_operator_errors():
    with pytest.raises(IndexError):
        MeasurementOperator([1024], SYM10_J3, 32)
    with pytest.raises(IndexError):
        MeasurementOperator([-1], SYM10_J3, 32)
    with pytest.raises(ValueError):
        MeasurementOperator([], SYM10_J3, 32)


def test_dft_matrix_helper_is_unitary():
    f = dft_matrix_centred(8)
    np.testing.assert_allclose(f.conj().T @ f, np.eye(64), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (16, 16), elements=st.floats(-1e3, 1e3)))
def test_roundtrip_property(img):
    spec = WaveletSpec(levels=2)
    np.testing.assert_allclose(idwt2(dwt2(img, spec), spec), img, atol=1e-9)
    k = a0_apply(dwt2(img, spec), spec)
    np.testing.assert_allclose(k, fft2_unitary(img), atol=1e-9)
