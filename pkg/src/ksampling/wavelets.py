"""Periodic orthogonal 2D wavelet transforms evaluated in the Fourier domain.

Every atom of a periodic orthogonal filter bank is a circular translate of
one representative per subband, so the synthesis of a subband is a product
between the (tiled) DFT of its coefficient block and a fixed frequency
response on the full grid.  Both the FIR Symmlet family and the ideal
(Shannon) family are handled this way, which keeps them on a single code
path and makes per-subband Fourier moduli available for free.

Layout of the coefficient array (standard pyramid, ``s = N / 2**j``)::

    +-------+-------+
    |  LL_J | LH_j  |      rows: axis 0 (ky), cols: axis 1 (kx)
    +-------+-------+      LH: low along axis 0, high along axis 1
    |  HL_j | HH_j  |
    +-------+-------+

The detail blocks of level ``j`` occupy ``[0:s, s:2s]``, ``[s:2s, 0:s]`` and
``[s:2s, s:2s]``; the approximation block of the coarsest level ``J`` is
``[0:N/2**J, 0:N/2**J]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np
import scipy.fft as sfft

__all__ = [
    "SYMMLET_FILTERS",
    "Subband",
    "WaveletSpec",
    "FourierFilterBank",
    "filter_bank",
    "is_power_of_two",
]

# Orthonormal Symmlet reconstruction low-pass filters (sum = sqrt(2)).
SYMMLET_FILTERS: dict[int, tuple[float, ...]] = {
    4: (
        0.0322231006040427,
        -0.012603967262037833,
        -0.09921954357684722,
        0.29785779560527736,
        0.8037387518059161,
        0.49761866763201545,
        -0.02963552764599851,
        -0.07576571478927333,
    ),
    8: (
        0.0018899503327594609,
        -0.0003029205147213668,
        -0.01495225833704823,
        0.003808752013890615,
        0.049137179673607506,
        -0.027219029917056003,
        -0.05194583810770904,
        0.3644418948353314,
        0.7771857517005235,
        0.4813596512583722,
        -0.061273359067658524,
        -0.1432942383508097,
        0.007607487324917605,
        0.03169508781149298,
        -0.0005421323317911481,
        -0.0033824159510061256,
    ),
    10: (
        -0.0004593294210046588,
        5.7036083618494284e-05,
        0.004593173585311828,
        -0.0008043589320165449,
        -0.02035493981231129,
        0.005764912033581909,
        0.04999497207737669,
        -0.0319900568824278,
        -0.03553674047381755,
        0.38382676106708546,
        0.7695100370211071,
        0.47169066693843925,
        -0.07088053578324385,
        -0.15949427888491757,
        0.011609893903711381,
        0.0459272392310922,
        -0.0014653825813050513,
        -0.008641299277022422,
        9.563267072289475e-05,
        0.0007701598091144901,
    ),
}


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class WaveletSpec:
    """Wavelet family, decomposition depth and boundary rule.

    Parameters
    ----------
    family : {"symmlet", "shannon"}
    levels : int
        Decomposition depth ``J``; must satisfy ``1 <= J <= log2(N) - 2``.
    vanishing_moments : int
        Only used by the Symmlet family.
    """

    family: str = "symmlet"
    levels: int = 3
    vanishing_moments: int = 10
    boundary: str = "periodic"

    def __post_init__(self):
        if self.family not in ("symmlet", "shannon"):
            raise ValueError(f"unknown wavelet family {self.family!r}")
        if self.family == "symmlet" and self.vanishing_moments not in SYMMLET_FILTERS:
            raise ValueError(
                f"no Symmlet table for {self.vanishing_moments} vanishing moments "
                f"(available: {sorted(SYMMLET_FILTERS)})"
            )
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")
        if int(self.levels) < 1:
            raise ValueError("levels must be >= 1")

    def validate(self, n: int) -> None:
        if not is_power_of_two(n):
            raise ValueError(f"side {n} is not a power of two")
        if n < 8:
            raise ValueError(f"side {n} is smaller than 8")
        max_levels = int(np.log2(n)) - 2
        if self.levels > max_levels:
            raise ValueError(
                f"levels={self.levels} too large for N={n} (max {max_levels})"
            )

    @property
    def label(self) -> str:
        if self.family == "symmlet":
            return f"sym{self.vanishing_moments}-J{self.levels}"
        return f"shannon-J{self.levels}"

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "levels": self.levels,
            "vanishing_moments": self.vanishing_moments,
            "boundary": self.boundary,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WaveletSpec":
        return cls(**d)


@dataclass(frozen=True)
class Subband:
    """One subband of the pyramid.

    ``level`` is 1 for the finest details; the approximation band carries
    ``level = J`` and ``kind = "LL"``.
    """

    kind: str
    level: int
    rows: slice
    cols: slice

    @property
    def size(self) -> int:
        return self.rows.stop - self.rows.start

    @property
    def is_approximation(self) -> bool:
        return self.kind == "LL"


def subbands(n: int, levels: int) -> list[Subband]:
    """Subbands ordered coarse to fine, approximation first."""
    s = n >> levels
    out = [Subband("LL", levels, slice(0, s), slice(0, s))]
    for j in range(levels, 0, -1):
        s = n >> j
        out.append(Subband("LH", j, slice(0, s), slice(s, 2 * s)))
        out.append(Subband("HL", j, slice(s, 2 * s), slice(0, s)))
        out.append(Subband("HH", j, slice(s, 2 * s), slice(s, 2 * s)))
    return out


def _lowpass_response(spec: WaveletSpec, k: np.ndarray, m: int) -> np.ndarray:
    """DTFT of the low-pass filter at frequencies ``2*pi*k/m``."""
    k = np.asarray(k, dtype=np.int64)
    if spec.family == "shannon":
        # ideal half-band; the +-pi/2 pair splits its energy so atoms stay real
        kk = np.mod(k + m // 2 - 1, m) - (m // 2 - 1)  # centred in (-m/2, m/2]
        out = np.zeros(k.shape, dtype=complex)
        out[np.abs(kk) * 4 < m] = np.sqrt(2.0)
        edge = np.abs(kk) * 4 == m
        out[edge] = np.exp(1j * np.pi / 4 * np.sign(kk[edge]))
        return out
    h = np.asarray(SYMMLET_FILTERS[spec.vanishing_moments])
    taps = np.arange(h.size)
    phase = np.mod(np.outer(k.ravel(), taps), m)
    resp = np.exp(-2j * np.pi * phase / m) @ h
    return resp.reshape(k.shape)


def _highpass_response(spec: WaveletSpec, k: np.ndarray, m: int) -> np.ndarray:
    # G(w) = -exp(-iw) conj(H(w + pi)), the alternating-flip partner of H
    k = np.asarray(k, dtype=np.int64)
    shift = np.exp(-2j * np.pi * np.mod(k, m) / m)
    return -shift * np.conj(_lowpass_response(spec, k + m // 2, m))


def _atom_response_1d(spec: WaveletSpec, n: int, level: int, high: bool) -> np.ndarray:
    """Unnormalised DFT (length ``n``, natural order) of a level-``level`` atom
    sitting at the origin."""
    k = np.arange(n)
    resp = np.ones(n, dtype=complex)
    last = level - 1 if high else level
    for lev in range(last):
        resp *= _lowpass_response(spec, k, n >> lev)
    if high:
        resp *= _highpass_response(spec, k, n >> (level - 1))
    return resp


class FourierFilterBank:
    """Per-level one-dimensional filter responses for an ``N x N`` grid.

    ``synthesize`` maps a (possibly complex) coefficient array to the
    unnormalised, natural-order DFT of the image it synthesizes, running the
    two-scale cascade coarse to fine; ``analyze`` runs it fine to coarse and
    is the inverse of ``synthesize`` followed by ``ifft2``.  Callers normally
    go through :mod:`ksampling.gridops`.
    """

    def __init__(self, spec: WaveletSpec, n: int):
        spec.validate(n)
        self.spec = spec
        self.n = n
        self.bands = subbands(n, spec.levels)
        # level j splits a grid of side n >> (j - 1)
        self._filters = {}
        for j in range(1, spec.levels + 1):
            m = n >> (j - 1)
            k = np.arange(m)
            self._filters[j] = (_lowpass_response(spec, k, m), _highpass_response(spec, k, m))

    def band_response(self, band: Subband) -> np.ndarray:
        """Full-grid DFT of the band's atom located at the origin."""
        row_high = band.kind in ("HL", "HH")
        col_high = band.kind in ("LH", "HH")
        r = _atom_response_1d(self.spec, self.n, band.level, row_high)
        c = _atom_response_1d(self.spec, self.n, band.level, col_high)
        return np.outer(r, c)

    def __iter__(self) -> Iterator[tuple[Subband, np.ndarray]]:
        for band in self.bands:
            yield band, self.band_response(band)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        levels = self.spec.levels
        s = self.n >> levels
        spec_ll = sfft.fft2(coeffs[:s, :s])
        for j in range(levels, 0, -1):
            s = self.n >> j
            h, g = self._filters[j]
            lh = sfft.fft2(coeffs[:s, s:2 * s])
            hl = sfft.fft2(coeffs[s:2 * s, :s])
            hh = sfft.fft2(coeffs[s:2 * s, s:2 * s])
            low_rows = np.tile(spec_ll, (2, 2)) * h + np.tile(lh, (2, 2)) * g
            high_rows = np.tile(hl, (2, 2)) * h + np.tile(hh, (2, 2)) * g
            spec_ll = h[:, None] * low_rows + g[:, None] * high_rows
        return spec_ll

    def analyze(self, spectrum: np.ndarray, real: bool = False) -> np.ndarray:
        n = self.n
        out = np.zeros((n, n), dtype=float if real else complex)
        current = spectrum
        for j in range(1, self.spec.levels + 1):
            s = n >> j
            h, g = np.conj(self._filters[j][0]), np.conj(self._filters[j][1])
            low_rows = h[:, None] * current
            high_rows = g[:, None] * current

            def fold(a):
                return 0.25 * a.reshape(2, s, 2, s).sum(axis=(0, 2))

            blocks = {
                "LH": fold(low_rows * g),
                "HL": fold(high_rows * h),
                "HH": fold(high_rows * g),
            }
            current = fold(low_rows * h)
            for kind, rows, cols in (
                ("LH", slice(0, s), slice(s, 2 * s)),
                ("HL", slice(s, 2 * s), slice(0, s)),
                ("HH", slice(s, 2 * s), slice(s, 2 * s)),
            ):
                block = sfft.ifft2(blocks[kind])
                out[rows, cols] = block.real if real else block
        s = n >> self.spec.levels
        block = sfft.ifft2(current)
        out[:s, :s] = block.real if real else block
        return out


@lru_cache(maxsize=32)
def filter_bank(spec: WaveletSpec, n: int) -> FourierFilterBank:
    return FourierFilterBank(spec, n)
