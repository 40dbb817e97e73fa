"""The k-space centre Omega covered by low-frequency wavelet atoms.

Omega collects the frequencies where the approximation atoms (plus
optionally the coarsest detail levels) have Fourier support.  Fully sampling
it gives the low-frequency coefficients directly through ``Psi* F``, and the
residual ``x - x_Omega`` is what the l1 stage has to recover.
"""

from __future__ import annotations

from dataclasses import dataclass

from typing import Optional

import numpy as np

from .gridops import a0_adjoint, frequency_grid
from .wavelets import WaveletSpec, filter_bank

__all__ = [
    "FrequencySet",
    "low_frequency_bands",
    "omega_region",
    "central_square",
    "x_omega",
    "x_omega_from_kspace",
    "sparsify",
    "effective_sparsity",
]

SHANNON_SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class FrequencySet:
    """Sorted, distinct linear indices on the centred ``N x N`` grid."""

    side: int
    indices: np.ndarray
    provenance: str = ""
    atom_count: int = 0
    low_levels: Optional[int] = None

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64).ravel())
        if idx.size and (idx[0] < 0 or idx[-1] >= self.side * self.side):
            raise ValueError("frequency index out of range")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return int(self.indices.size)

    def __contains__(self, i) -> bool:
        pos = np.searchsorted(self.indices, i)
        return bool(pos < self.indices.size and self.indices[pos] == i)

    def to_grid(self) -> np.ndarray:
        g = np.zeros(self.side * self.side, dtype=bool)
        g[self.indices] = True
        return g.reshape(self.side, self.side)

    @classmethod
    def from_grid(cls, grid: np.ndarray, **kwargs) -> "FrequencySet":
        grid = np.asarray(grid, dtype=bool)
        return cls(grid.shape[0], np.flatnonzero(grid), **kwargs)


def low_band_mask(spec: WaveletSpec, n: int, low_levels: int = 0) -> np.ndarray:
    """Boolean coefficient mask of the low-frequency bands."""
    out = np.zeros((n, n), dtype=bool)
    for band in low_frequency_bands(spec, n, low_levels):
        out[band.rows, band.cols] = True
    return out


def low_frequency_bands(spec: WaveletSpec, n: int, low_levels: int = 0):
    """Approximation band plus the ``low_levels`` coarsest detail levels."""
    if not 0 <= low_levels <= spec.levels:
        raise ValueError(f"low_levels must lie in [0, {spec.levels}]")
    cutoff = spec.levels - low_levels
    return [
        b
        for b in filter_bank(spec, n).bands
        if b.is_approximation or b.level > cutoff
    ]


def _low_band_modulus(spec: WaveletSpec, n: int, low_levels: int) -> tuple[np.ndarray, int]:
    bank = filter_bank(spec, n)
    out = np.zeros((n, n))
    atoms = 0
    for band in low_frequency_bands(spec, n, low_levels):
        resp = np.abs(np.fft.fftshift(bank.band_response(band))) / n
        np.maximum(out, resp, out=out)
        atoms += band.size**2
    return out, atoms


def omega_region(
    spec: WaveletSpec, n: int, low_levels: int = 0, tau: float = 0.01
) -> FrequencySet:
    """Fourier support of the low-frequency atoms.

    Shannon atoms have compact Fourier support, so the union is exact and
    ``tau`` is ignored.  Symmlet atoms are supported everywhere; there Omega is
    where the low-band modulus exceeds ``tau`` times its peak.
    """
    spec.validate(n)
    if not 0 <= tau < 1:
        raise ValueError("tau must lie in [0, 1)")
    modulus, atoms = _low_band_modulus(spec, n, low_levels)
    if spec.family == "shannon":
        grid = modulus > SHANNON_SUPPORT_TOL
        prov = "exact-shannon"
    else:
        if tau == 0:
            raise ValueError("tau = 0 makes Omega the whole grid for Symmlet atoms")
        grid = modulus > tau * modulus.max()
        prov = f"thresholded-symmlet({tau:g})"
    return FrequencySet.from_grid(grid, provenance=prov, atom_count=atoms, low_levels=low_levels)


def central_square(n: int, width: int) -> FrequencySet:
    """Plain centred square of ``width`` frequencies per side."""
    if not 1 <= width <= n:
        raise ValueError("width must lie in [1, N]")
    ky, kx = frequency_grid(n)
    lo = -(width // 2)
    hi = lo + width
    grid = (ky >= lo) & (ky < hi) & (kx >= lo) & (kx < hi)
    return FrequencySet.from_grid(grid, provenance=f"central-square({width})")


def x_omega(y_center: np.ndarray, omega: FrequencySet, spec: WaveletSpec) -> np.ndarray:
    """``Psi* F y_Omega`` from samples given in ``omega.indices`` order."""
    y_center = np.asarray(y_center).ravel()
    if y_center.size != len(omega):
        raise ValueError(
            f"expected {len(omega)} samples on Omega, got {y_center.size}"
        )
    n = omega.side
    grid = np.zeros(n * n, dtype=complex)
    grid[omega.indices] = y_center
    return a0_adjoint(grid.reshape(n, n), spec)


def x_omega_from_kspace(kspace: np.ndarray, omega: FrequencySet, spec: WaveletSpec) -> np.ndarray:
    return x_omega(np.asarray(kspace).ravel()[omega.indices], omega, spec)


def effective_sparsity(x: np.ndarray, reference_max: float | None = None, rel: float = 1e-6) -> int:
    """Number of entries above ``rel * max|x|`` (or ``rel * reference_max``)."""
    x = np.asarray(x)
    peak = np.abs(x).max() if reference_max is None else reference_max
    return int(np.count_nonzero(np.abs(x) > rel * peak))


def sparsify(x: np.ndarray, x_om: np.ndarray, report: bool = False):
    """``x - x_Omega``; with ``report=True`` also return sparsity counts
    (threshold tied to ``max|x|``) before and after."""
    x = np.asarray(x)
    x_om = np.asarray(x_om)
    if x.shape != x_om.shape:
        raise ValueError("coefficient arrays differ in shape")
    residual = x - x_om
    if not report:
        return residual
    peak = float(np.abs(x).max())
    info = {
        "sparsity_before": effective_sparsity(x, peak),
        "sparsity_after": effective_sparsity(residual, peak),
    }
    return residual, info
