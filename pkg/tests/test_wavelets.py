import numpy as np
import pytest

from ksampling.gridops import dwt2, idwt2
from ksampling.wavelets import SYMMLET_FILTERS, WaveletSpec, filter_bank, subbands

from conftest import SHANNON_J3, SYM10_J3, synthesis_matrix


# --- independent spatial-domain oracle --------------------------------------
#
# One synthesis level on a length-m circle:
#   out[t] = sum_k c[k] h[t - 2k] + d[k] g[t - 2k]   (indices mod m)
# with the alternating-flip high-pass g[u] = (-1)^u h[1 - u].


def _highpass_taps(h):
    # (offset u, value) pairs of g
    return [(1 - t, (-1) ** (1 - t) * h[t]) for t in range(len(h))]


def _synth_1d(c, d, h):
    m = 2 * c.shape[-1]
    out = np.zeros(c.shape[:-1] + (m,))
    g = _highpass_taps(h)
    for k in range(c.shape[-1]):
        for t, ht in enumerate(h):
            out[..., (2 * k + t) % m] += c[..., k] * ht
        for u, gu in g:
            out[..., (2 * k + u) % m] += d[..., k] * gu
    return out


def spatial_idwt2(coeffs, h, levels):
    n = coeffs.shape[0]
    s = n >> levels
    ll = coeffs[:s, :s].copy()
    for j in range(levels, 0, -1):
        s = n >> j
        lh, hl, hh = coeffs[:s, s:2 * s], coeffs[s:2 * s, :s], coeffs[s:2 * s, s:2 * s]
        # columns (axis 1) first, then rows (axis 0)
        low = _synth_1d(ll, lh, h)
        high = _synth_1d(hl, hh, h)
        ll = _synth_1d(low.T, high.T, h).T
    return ll


@pytest.mark.parametrize("vm", sorted(SYMMLET_FILTERS))
def test_symmlet_tables_orthonormal(vm):
    h = np.asarray(SYMMLET_FILTERS[vm])
    assert h.size == 2 * vm
    assert np.linalg.norm(h) == pytest.approx(1.0, abs=1e-12)
    assert h.sum() == pytest.approx(np.sqrt(2.0), abs=1e-12)
    for shift in range(1, vm):
        assert abs(np.dot(h[2 * shift:], h[: h.size - 2 * shift])) < 1e-12
    # vanishing moments of the high-pass: sum (-1)^t t^k h[t] = 0
    t = np.arange(h.size)
    for k in range(vm):
        moment = np.sum((-1.0) ** t * (t / h.size) ** k * h)
        assert abs(moment) < 1e-9


@pytest.mark.parametrize("n,levels", [(16, 1), (16, 2), (32, 3)])
def test_matches_spatial_filter_bank(n, levels, rng):
    spec = WaveletSpec("symmlet", levels, 10)
    h = np.asarray(SYMMLET_FILTERS[10])
    coeffs = rng.standard_normal((n, n))
    np.testing.assert_allclose(idwt2(coeffs, spec), spatial_idwt2(coeffs, h, levels), atol=1e-10)


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_matches_pywavelets_atoms():
    pywt = pytest.importorskip("pywt")
    n = 32
    spec = SYM10_J3
    bank = filter_bank(spec, n)
    for band in bank.bands:
        coeffs = pywt.wavedec2(np.zeros((n, n)), "sym10", mode="periodization", level=3)
        arr, slices = pywt.coeffs_to_array(coeffs)
        arr[band.rows.start + 1, band.cols.start + 2] = 1.0
        atom = pywt.waverec2(
            pywt.array_to_coeffs(arr, slices, output_format="wavedec2"),
            "sym10", mode="periodization",
        )
        # atoms of one subband differ only by translation, so Fourier
        # moduli must agree whatever the shift convention
        ours = np.abs(bank.band_response(band))
        theirs = np.abs(np.fft.fft2(atom))
        np.testing.assert_allclose(ours, theirs, atol=1e-10)


@pytest.mark.parametrize("spec,n", [
    (SYM10_J3, 32),
    (SHANNON_J3, 32),
    (WaveletSpec("symmlet", 2, 4), 16),
    (WaveletSpec("shannon", 2), 16),
])
def test_synthesis_matrix_orthogonal(spec, n):
    psi = synthesis_matrix(spec, n)
    np.testing.assert_allclose(psi.T @ psi, np.eye(n * n), atol=1e-10)


def test_shannon_atoms_real():
    # the synthesized image of a real coefficient must itself be real
    bank = filter_bank(SHANNON_J3, 32)
    for band in bank.bands:
        unit = np.zeros((32, 32))
        unit[band.rows.start, band.cols.start] = 1.0
        spectrum = bank.synthesize(unit)
        img = np.fft.ifft2(spectrum)
        assert np.abs(img.imag).max() < 1e-12


def test_subband_layout_tiles_grid():
    n, levels = 64, 3
    cover = np.zeros((n, n), dtype=int)
    for band in subbands(n, levels):
        cover[band.rows, band.cols] += 1
    assert np.all(cover == 1)
    assert subbands(n, levels)[0].kind == "LL"


def test_spec_validation():
    with pytest.raises(ValueError):
        WaveletSpec("haar")
    with pytest.raises(ValueError):
        WaveletSpec("symmlet", 3, 7)
    with pytest.raises(ValueError):
        WaveletSpec(levels=0)
    with pytest.raises(ValueError):
        WaveletSpec(levels=4).validate(16)
    with pytest.raises(ValueError):
        WaveletSpec().validate(48)
    assert WaveletSpec.from_dict(SYM10_J3.to_dict()) == SYM10_J3


@pytest.mark.parametrize("levels", [1, 2, 3])
def test_constant_image(levels):
    n = 32
    spec = WaveletSpec("symmlet", levels, 10)
    c = dwt2(np.ones((n, n)), spec)
    s = n >> levels
    # orthonormal scaling functions: each carries 2^J of a unit constant
    np.testing.assert_allclose(c[:s, :s], 2.0**levels, atol=1e-12)
    detail = c.copy()
    detail[:s, :s] = 0
    assert np.abs(detail).max() < 1e-12
