"""Grid conventions and the unitary operators F, Psi and A0 = F* Psi.

Images, k-space grids and wavelet coefficients are plain ``N x N`` numpy
arrays.  K-space arrays are *centred*: entry ``(r, c)`` holds frequency
``(ky, kx) = (r - N/2, c - N/2)`` so DC sits at ``(N/2, N/2)``.  A linear
frequency index is ``r * N + c`` on that centred grid.
"""

from __future__ import annotations

import numpy as np

from .wavelets import WaveletSpec, filter_bank, is_power_of_two

__all__ = [
    "check_image",
    "fft2_unitary",
    "ifft2_unitary",
    "dwt2",
    "idwt2",
    "a0_apply",
    "a0_adjoint",
    "a0_adjoint_complex",
    "frequency_grid",
    "MeasurementOperator",
]


def check_image(values: np.ndarray, name: str = "image") -> np.ndarray:
    values = np.asarray(values)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"{name} must be a square 2D array, got shape {values.shape}")
    n = values.shape[0]
    if not is_power_of_two(n):
        raise ValueError(f"{name} side {n} is not a power of two")
    if n < 8:
        raise ValueError(f"{name} side {n} is smaller than 8")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} contains non-finite values")
    return values


def frequency_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer ``(ky, kx)`` arrays of the centred grid."""
    k = np.arange(n) - n // 2
    return np.meshgrid(k, k, indexing="ij")


def fft2_unitary(image: np.ndarray) -> np.ndarray:
    """Unitary 2D DFT with the centred k-space convention."""
    return np.fft.fftshift(np.fft.fft2(image, norm="ortho"))


def ifft2_unitary(kspace: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(np.fft.ifftshift(kspace), norm="ortho")


def dwt2(image: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    """Orthogonal periodic forward wavelet transform (pyramid layout).

    Complex inputs are transformed linearly; real inputs give real output.
    """
    image = np.asarray(image)
    n = image.shape[0]
    spec.validate(n)
    bank = filter_bank(spec, n)
    real = not np.iscomplexobj(image)
    return bank.analyze(np.fft.fft2(image), real=real)


def idwt2(coeffs: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    """Inverse (= adjoint) of :func:`dwt2`."""
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1]:
        raise ValueError(f"coefficients must be square, got shape {coeffs.shape}")
    n = coeffs.shape[0]
    spec.validate(n)
    bank = filter_bank(spec, n)
    image = np.fft.ifft2(bank.synthesize(coeffs))
    return image.real if not np.iscomplexobj(coeffs) else image


def a0_apply(coeffs: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    """``F* Psi``: wavelet coefficients to centred unitary k-space."""
    coeffs = np.asarray(coeffs)
    n = coeffs.shape[0]
    spec.validate(n)
    spectrum = filter_bank(spec, n).synthesize(coeffs)
    return np.fft.fftshift(spectrum) / n


def a0_adjoint_complex(kspace: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    """Adjoint of :func:`a0_apply` without discarding the imaginary part."""
    kspace = np.asarray(kspace)
    n = kspace.shape[0]
    spec.validate(n)
    spectrum = np.fft.ifftshift(kspace) * n
    return filter_bank(spec, n).analyze(spectrum)


def a0_adjoint(kspace: np.ndarray, spec: WaveletSpec, return_imag: bool = False):
    """``Psi* F``: centred k-space to real wavelet coefficients.

    The imaginary part left after synthesis is dropped; with
    ``return_imag=True`` its l2 norm is returned alongside.
    """
    full = a0_adjoint_complex(kspace, spec)
    if return_imag:
        return full.real, float(np.linalg.norm(full.imag))
    return full.real


class MeasurementOperator:
    """Row subset ``A`` of ``A0`` selected by a list of frequency indices.

    Parameters
    ----------
    indices : array_like of int
        Linear indices on the centred grid, in measurement order.  Repeats
        are allowed and produce repeated rows.
    spec : WaveletSpec
    n : int
        Grid side.
    """

    def __init__(self, indices, spec: WaveletSpec, n: int):
        spec.validate(n)
        idx = np.asarray(indices, dtype=np.int64).ravel()
        if idx.size == 0:
            raise ValueError("mask is empty")
        if idx.min() < 0 or idx.max() >= n * n:
            raise IndexError(f"mask index out of range for N={n}")
        self.indices = idx
        self.spec = spec
        self.n = n
        self.has_duplicates = np.unique(idx).size != idx.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.indices.size, self.n * self.n)

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return a0_apply(coeffs, self.spec).ravel()[self.indices]

    def adjoint(self, values: np.ndarray) -> np.ndarray:
        """Scatter measurements back (conjugate transpose); complex output."""
        grid = self.scatter(values)
        return a0_adjoint_complex(grid, self.spec)

    def scatter(self, values: np.ndarray) -> np.ndarray:
        n = self.n
        grid = np.zeros(n * n, dtype=complex)
        if self.has_duplicates:
            np.add.at(grid, self.indices, values)
        else:
            grid[self.indices] = values
        return grid.reshape(n, n)

    def grid_mask(self) -> np.ndarray:
        m = np.zeros(self.n * self.n, dtype=bool)
        m[self.indices] = True
        return m.reshape(self.n, self.n)


def masked_apply(op: MeasurementOperator, coeffs: np.ndarray) -> np.ndarray:
    return op.apply(coeffs)


def masked_adjoint(op: MeasurementOperator, values: np.ndarray) -> np.ndarray:
    return op.adjoint(values)
