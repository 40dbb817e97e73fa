"""Binary array (CSA1), index set (CSM1) and PGM (P5) files.

CSA1: ``b"CSA1"``, u8 dtype tag (0 = f64 real, 1 = f64 complex interleaved),
u32 rows, u32 cols (little endian), then the row-major payload.

CSM1: ``b"CSM1"``, u32 N, u32 count, then ``count`` sorted u32 indices.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .wavelets import is_power_of_two

__all__ = [
    "ImageFormatError",
    "write_csa1",
    "read_csa1",
    "write_csm1",
    "read_csm1",
    "load_image",
    "save_image",
    "save_mask_pgm",
]

CSA_MAGIC = b"CSA1"
CSM_MAGIC = b"CSM1"


class ImageFormatError(ValueError):
    pass


def write_csa1(path, values: np.ndarray) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("CSA1 stores 2D arrays only")
    complex_ = np.iscomplexobj(values)
    rows, cols = values.shape
    payload = values.astype("<c16" if complex_ else "<f8", copy=False)
    with open(path, "wb") as f:
        f.write(CSA_MAGIC)
        f.write(struct.pack("<BII", 1 if complex_ else 0, rows, cols))
        f.write(np.ascontiguousarray(payload).tobytes())


def read_csa1(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != CSA_MAGIC:
        raise ValueError(f"{path}: not a CSA1 file")
    tag, rows, cols = struct.unpack_from("<BII", data, 4)
    if tag not in (0, 1):
        raise ValueError(f"{path}: unknown dtype tag {tag}")
    dtype = "<c16" if tag == 1 else "<f8"
    expected = rows * cols * np.dtype(dtype).itemsize
    body = data[13:]
    if len(body) != expected:
        raise ValueError(f"{path}: payload has {len(body)} bytes, expected {expected}")
    return np.frombuffer(body, dtype=dtype).reshape(rows, cols).astype(
        complex if tag == 1 else float
    )


def write_csm1(path, n: int, indices) -> None:
    idx = np.unique(np.asarray(indices, dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= n * n):
        raise ValueError("index out of range for CSM1")
    with open(path, "wb") as f:
        f.write(CSM_MAGIC)
        f.write(struct.pack("<II", n, idx.size))
        f.write(idx.astype("<u4").tobytes())


def read_csm1(path) -> tuple[int, np.ndarray]:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != CSM_MAGIC:
        raise ValueError(f"{path}: not a CSM1 file")
    n, count = struct.unpack_from("<II", data, 4)
    body = data[12:]
    if len(body) != 4 * count:
        raise ValueError(f"{path}: expected {count} indices")
    return n, np.frombuffer(body, dtype="<u4").astype(np.int64)


def _pgm_tokens(data: bytes, count: int):
    """First ``count`` whitespace-separated header tokens (``#`` comments
    skipped) and the offset just past the single whitespace that follows."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ImageFormatError("malformed PGM header: truncated")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos + 1


def load_image(path, return_meta: bool = False):
    """Binary PGM (P5, 8 or 16 bit) as reals in ``[0, 1]``."""
    with open(path, "rb") as f:
        data = f.read()
    try:
        tokens, offset = _pgm_tokens(data, 4)
    except ImageFormatError:
        raise
    if tokens[0] != b"P5":
        raise ImageFormatError("malformed PGM header: expected magic P5")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageFormatError("malformed PGM header: non-integer field") from None
    if not 0 < maxval < 65536 or width <= 0 or height <= 0:
        raise ImageFormatError("malformed PGM header: field out of range")
    if width != height:
        raise ImageFormatError(f"PGM image is not square ({width}x{height})")
    if not is_power_of_two(width):
        raise ImageFormatError(f"PGM side {width} is not a power of two")
    dtype = ">u2" if maxval > 255 else "u1"
    need = width * height * np.dtype(dtype).itemsize
    body = data[offset:offset + need]
    if len(body) != need:
        raise ImageFormatError("malformed PGM: pixel data truncated")
    pixels = np.frombuffer(body, dtype=dtype).reshape(height, width)
    values = pixels.astype(float) / maxval
    if return_meta:
        return values, {"maxval": maxval, "bits": 16 if maxval > 255 else 8}
    return values


def save_image(path, values: np.ndarray, maxval: int = 65535, scale: str = "clip") -> None:
    """Write reals as binary PGM.

    ``scale="clip"`` maps ``[0, 1]`` to ``[0, maxval]`` (clipping outside);
    ``scale="minmax"`` stretches the array's own range.
    """
    values = np.real(np.asarray(values, dtype=complex if np.iscomplexobj(values) else float))
    if scale == "minmax":
        lo, hi = float(values.min()), float(values.max())
        values = (values - lo) / (hi - lo) if hi > lo else np.zeros_like(values)
    elif scale != "clip":
        raise ValueError("scale must be 'clip' or 'minmax'")
    pixels = np.rint(np.clip(values, 0.0, 1.0) * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    height, width = values.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        f.write(pixels.astype(dtype).tobytes())


def save_mask_pgm(path, grid: np.ndarray) -> None:
    """0/255 8-bit image of a boolean grid."""
    save_image(path, np.asarray(grid, dtype=float), maxval=255)


def file_digest(path) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return str(path)
