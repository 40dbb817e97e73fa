import numpy as np
import pytest

from ksampling.formats import (
    ImageFormatError,
    file_digest,
    load_image,
    read_csa1,
    read_csm1,
    save_image,
    save_mask_pgm,
    write_csa1,
    write_csm1,
)


def write_pgm(path, width, height, maxval, pixels: bytes, magic=b"P5"):
    path.write_bytes(magic + b"\n%d %d\n%d\n" % (width, height, maxval) + pixels)
    return path


@pytest.mark.parametrize("dtype", [float, complex])
def test_csa1_roundtrip(tmp_path, rng, dtype):
    a = rng.standard_normal((8, 4)).astype(dtype)
    if dtype is complex:
        a += 1j * rng.standard_normal((8, 4))
    write_csa1(tmp_path / "a.csa", a)
    b = read_csa1(tmp_path / "a.csa")
    assert b.dtype == np.dtype(dtype)
    np.testing.assert_array_equal(a, b)


def test_csa1_layout(tmp_path):
    write_csa1(tmp_path / "a.csa", np.array([[1.5]]))
    data = (tmp_path / "a.csa").read_bytes()
    assert data[:4] == b"CSA1"
    assert data[4:13] == bytes([0, 1, 0, 0, 0, 1, 0, 0, 0])
    assert np.frombuffer(data[13:], "<f8")[0] == 1.5


def test_csa1_errors(tmp_path):
    (tmp_path / "x").write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(ValueError):
        read_csa1(tmp_path / "x")
    write_csa1(tmp_path / "t", np.zeros((2, 2)))
    (tmp_path / "t").write_bytes((tmp_path / "t").read_bytes()[:-1])
    with pytest.raises(ValueError, match="payload"):
        read_csa1(tmp_path / "t")
    with pytest.raises(ValueError):
        write_csa1(tmp_path / "v", np.zeros(3))


def test_csm1_roundtrip_sorted_unique(tmp_path):
    write_csm1(tmp_path / "m.csm", 16, [200, 3, 3, 77])
    n, idx = read_csm1(tmp_path / "m.csm")
    assert n == 16 and idx.tolist() == [3, 77, 200]
    data = (tmp_path / "m.csm").read_bytes()
    assert data[:4] == b"CSM1" and len(data) == 12 + 4 * 3
    with pytest.raises(ValueError):
        write_csm1(tmp_path / "bad.csm", 4, [16])


def test_load_16bit_constant(tmp_path):
    p = write_pgm(tmp_path / "w.pgm", 256, 256, 65535, b"\xff\xff" * 256 * 256)
    img, meta = load_image(p, return_meta=True)
    assert img.shape == (256, 256) and np.all(img == 1.0)
    assert meta == {"maxval": 65535, "bits": 16}


def test_load_8bit_mid_grey(tmp_path):
    px = bytes([255, 128] * 8)
    img = load_image(write_pgm(tmp_path / "g.pgm", 4, 4, 255, px))
    assert set(np.unique(img)) == {1.0, 128 / 255}
    assert img[0, 1] == pytest.approx(0.50196, abs=1e-5)


def test_16bit_roundtrip_byte_identical(tmp_path, rng):
    px = rng.integers(0, 65536, size=32 * 32).astype(">u2").tobytes()
    src = write_pgm(tmp_path / "src.pgm", 32, 32, 65535, px)
    save_image(tmp_path / "out.pgm", load_image(src))
    assert (tmp_path / "out.pgm").read_bytes() == src.read_bytes()
    assert file_digest(src) == file_digest(tmp_path / "out.pgm")


def test_header_comments_are_skipped(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 2\n255\n" + bytes([0, 255, 255, 0]))
    np.testing.assert_array_equal(load_image(p), [[0, 1], [1, 0]])


def test_distinct_error_messages(tmp_path):
    messages = []
    cases = [
        write_pgm(tmp_path / "a.pgm", 4, 4, 255, bytes(16), magic=b"P2"),
        write_pgm(tmp_path / "b.pgm", 4, 8, 255, bytes(32)),
        write_pgm(tmp_path / "c.pgm", 12, 12, 255, bytes(144)),
        write_pgm(tmp_path / "d.pgm", 4, 4, 255, bytes(5)),
    ]
    for path in cases:
        with pytest.raises(ImageFormatError) as info:
            load_image(path)
        messages.append(str(info.value))
    assert "malformed" in messages[0]
    assert "not square" in messages[1]
    assert "power of two" in messages[2]
    assert len(set(messages)) == len(messages)


def test_save_image_scaling(tmp_path):
    save_image(tmp_path / "s.pgm", np.array([[-1.0, 0.5], [2.0, 1.0]]), maxval=255)
    np.testing.assert_allclose(load_image(tmp_path / "s.pgm"), [[0, 128 / 255], [1, 1]])
    save_image(tmp_path / "m.pgm", np.array([[2.0, 4.0], [6.0, 4.0]]), maxval=255, scale="minmax")
    np.testing.assert_allclose(load_image(tmp_path / "m.pgm"), [[0, 128 / 255], [1, 128 / 255]])
    save_mask_pgm(tmp_path / "k.pgm", np.eye(2, dtype=bool))
    np.testing.assert_array_equal(load_image(tmp_path / "k.pgm"), np.eye(2))
    with pytest.raises(ValueError):
        save_image(tmp_path / "z.pgm", np.zeros((2, 2)), scale="log")
