"""Analytic reference images rendered by point-in-ellipse / box tests."""

from __future__ import annotations

import numpy as np

from .wavelets import is_power_of_two

__all__ = ["phantom", "SHEPP_LOGAN_ELLIPSES"]

# (intensity, semi-axis x, semi-axis y, centre x, centre y, rotation deg);
# the contrast-enhanced ("modified") Shepp-Logan set
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def _ellipses(n: int) -> np.ndarray:
    c = (np.arange(n) + 0.5) * (2.0 / n) - 1.0
    x = c[None, :]
    y = -c[:, None]  # row 0 is the top edge
    img = np.zeros((n, n))
    for value, a, b, x0, y0, deg in SHEPP_LOGAN_ELLIPSES:
        t = np.deg2rad(deg)
        dx, dy = x - x0, y - y0
        u = dx * np.cos(t) + dy * np.sin(t)
        v = -dx * np.sin(t) + dy * np.cos(t)
        img[(u / a) ** 2 + (v / b) ** 2 <= 1.0] += value
    return np.clip(img, 0.0, 1.0)


def _blocks(n: int) -> np.ndarray:
    """Nested boxes: background 0, a centred half-width box at 0.5 and a
    quarter-width box at 1.0 in its upper-left quadrant."""
    img = np.zeros((n, n))
    q = n // 4
    img[q:3 * q, q:3 * q] = 0.5
    e = n // 8
    img[q:q + 2 * e, q:q + 2 * e] = 1.0
    return img


def phantom(n: int, variant: str = "ellipses") -> np.ndarray:
    """Deterministic ``n x n`` phantom with values in ``[0, 1]``."""
    if not is_power_of_two(n) or n < 8:
        raise ValueError(f"phantom side {n} must be a power of two >= 8")
    if variant == "ellipses":
        return _ellipses(n)
    if variant == "blocks":
        return _blocks(n)
    raise ValueError(f"unknown phantom variant {variant!r}")
