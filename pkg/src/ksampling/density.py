"""Sampling densities over the centred k-space grid.

The optimal density puts mass on frequency ``i`` proportionally to
``||a_i||_inf**2``, the squared largest modulus on row ``i`` of
``A0 = F* Psi``.  This module computes those row norms, the optimal and
Omega-restricted densities, the coherence ``K(P)``, the polynomial densities
used as a baseline, and a diagnostic evaluation of the uniform-recovery
sample-count bounds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .gridops import a0_apply, frequency_grid
from .wavelets import WaveletSpec, filter_bank

__all__ = [
    "Density",
    "BoundQuery",
    "BoundResult",
    "infnorm_map",
    "optimal_density",
    "k_of_density",
    "restricted_density",
    "polynomial_density",
    "uniform_density",
    "bound_required_m",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Density:
    """Probability mass on an ``N x N`` centred grid.

    ``normalizer`` is ``L`` (or ``L*``) when the density was derived from a
    row-norm map, ``None`` otherwise.
    """

    mass: np.ndarray
    normalizer: Optional[float] = None
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.ndim != 2 or mass.shape[0] != mass.shape[1]:
            raise ValueError("density must be a square 2D array")
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise ValueError("density must be finite and nonnegative")
        total = mass.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"density sums to {total!r}, not 1")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @property
    def side(self) -> int:
        return self.mass.shape[0]

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.mass))

    @classmethod
    def from_weights(cls, weights: np.ndarray, **kwargs) -> "Density":
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if not total > 0:
            raise ValueError("weights have no positive mass")
        return cls(weights / total, **kwargs)


def _omega_indices(omega) -> np.ndarray:
    idx = getattr(omega, "indices", omega)
    return np.asarray(idx, dtype=np.int64).ravel()


def infnorm_map(spec: WaveletSpec, n: int) -> np.ndarray:
    """Row infinity norms ``||a_i||_inf`` of ``A0`` on the centred grid.

    Atoms of one subband are circular translates of each other, so their
    Fourier moduli coincide: one representative per subband is enough.
    """
    spec.validate(n)
    out = np.zeros((n, n))
    unit = np.zeros((n, n))
    for band in filter_bank(spec, n).bands:
        unit[band.rows.start, band.cols.start] = 1.0
        np.maximum(out, np.abs(a0_apply(unit, spec)), out=out)
        unit[band.rows.start, band.cols.start] = 0.0
    return out


def optimal_density(norms: np.ndarray) -> Density:
    """``pi_i = ||a_i||_inf**2 / L`` with ``L = sum ||a_i||_inf**2``."""
    sq = np.asarray(norms, dtype=float) ** 2
    big_l = float(sq.sum())
    return Density(sq / big_l, normalizer=big_l, label="pi")


def k_of_density(norms: np.ndarray, density, return_index: bool = False):
    """Coherence ``K(P) = sup_i ||a_i||_inf / sqrt(P_i)``.

    A zero-mass frequency with a positive row norm gives ``inf``; the
    offending flat index is logged and returned with ``return_index``.
    """
    mass = getattr(density, "mass", density)
    norms = np.asarray(norms, dtype=float).ravel()
    mass = np.asarray(mass, dtype=float).ravel()
    if norms.shape != mass.shape:
        raise ValueError("map and density shapes differ")
    bad = (mass <= 0) & (norms > 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        logger.warning("density has zero mass at frequency index %d; K is infinite", i)
        return (math.inf, i) if return_index else math.inf
    ratio = np.zeros_like(norms)
    pos = mass > 0
    ratio[pos] = norms[pos] / np.sqrt(mass[pos])
    i = int(np.argmax(ratio))
    return (float(ratio[i]), i) if return_index else float(ratio[i])


def restricted_density(norms: np.ndarray, omega) -> Density:
    """``pi*``: optimal density with the centre set Omega removed."""
    sq = np.asarray(norms, dtype=float) ** 2
    n = sq.shape[0]
    idx = _omega_indices(omega)
    if np.unique(idx).size >= n * n:
        raise ValueError("Omega covers every frequency; nothing left to sample")
    flat = sq.ravel().copy()
    flat[idx] = 0.0
    l_star = float(flat.sum())
    if not l_star > 0:
        raise ValueError("no positive row norm outside Omega")
    return Density(
        (flat / l_star).reshape(n, n),
        normalizer=l_star,
        label="pistar",
        meta={"omega_size": int(np.unique(idx).size)},
    )


def polynomial_density(n: int, p: int) -> Density:
    """``(1 - sqrt(2)/N * |k|)**p`` on the centred grid, clamped at 0 and
    normalized over the discrete grid."""
    if p < 0:
        raise ValueError("p must be nonnegative")
    ky, kx = frequency_grid(n)
    base = 1.0 - (np.sqrt(2.0) / n) * np.hypot(kx, ky)
    weights = np.clip(base, 0.0, None) ** p
    return Density.from_weights(weights, label=f"poly{p}")


def uniform_density(n: int) -> Density:
    return Density(np.full((n, n), 1.0 / (n * n)), label="uniform")


@dataclass(frozen=True)
class BoundQuery:
    """Inputs of the uniform-recovery bounds ``m/ln m >= C K^2 s ln^2 s ln n``
    and ``m >= D K^2 s ln(1/eps)``."""

    s: int
    n: int
    k_squared: float
    C: float = 1.0
    D: float = 1.0
    epsilon: float = 0.1

    def __post_init__(self):
        if self.s < 1 or self.n < 2:
            raise ValueError("s must be >= 1 and n >= 2")
        if self.k_squared <= 0:
            raise ValueError("K^2 must be positive")
        if self.C < 0 or self.D < 0:
            raise ValueError("C and D must be nonnegative")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")


@dataclass(frozen=True)
class BoundResult:
    m: int
    vacuous: bool
    log4_n: float
    rhs_first: float
    rhs_second: float

    @property
    def log4_n_rounded(self) -> int:
        return int(round(self.log4_n))


def _m_over_log_m(m: int) -> float:
    # m = 1 has ln(m) = 0; treat it as failing any positive requirement
    return 0.0 if m < 2 else m / math.log(m)


def _bound_satisfied(m: int, rhs1: float, rhs2: float) -> bool:
    first = rhs1 <= 0 or _m_over_log_m(m) >= rhs1
    return first and m >= rhs2


def bound_required_m(q: BoundQuery, search_limit: Optional[int] = None) -> BoundResult:
    """Smallest ``m`` meeting both bounds (diagnostic only).

    ``m / ln m`` increases for ``m >= 3``, so after checking ``m = 1, 2`` a
    bisection over ``[3, limit]`` finds the answer.  ``vacuous`` is set when
    the answer exceeds ``n``, i.e. the bound asks for more samples than exist.
    """
    log_n = math.log(q.n)
    rhs1 = q.C * q.k_squared * q.s * math.log(q.s) ** 2 * log_n
    rhs2 = q.D * q.k_squared * q.s * math.log(1.0 / q.epsilon)
    result = dict(log4_n=log_n**4, rhs_first=rhs1, rhs_second=rhs2)

    for m in (1, 2):
        if _bound_satisfied(m, rhs1, rhs2):
            return BoundResult(m=m, vacuous=m > q.n, **result)

    hi = 3
    limit = search_limit if search_limit is not None else max(q.n, 3) * 2**40
    while not _bound_satisfied(hi, rhs1, rhs2):
        if hi >= limit:
            raise ValueError("no m found below the search limit")
        hi = min(hi * 2, limit)
    lo = max(3, hi // 2)
    if _bound_satisfied(lo, rhs1, rhs2):
        hi = lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _bound_satisfied(mid, rhs1, rhs2):
            hi = mid
        else:
            lo = mid
    return BoundResult(m=hi, vacuous=hi > q.n, **result)
