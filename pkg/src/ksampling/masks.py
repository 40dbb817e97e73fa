"""Sampling masks on the centred k-space grid.

Random schemes draw frequency indices by inverse-CDF sampling from a
:class:`~ksampling.density.Density`; repeats (and, for two-stage masks, draws
landing in Omega) are rejected until the distinct-sample budget is met.
Radial and spiral masks rasterize their trajectories and calibrate the
spoke count or turn spacing against the same budget.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .density import Density

__all__ = [
    "BUDGET_TOLERANCE",
    "RngStream",
    "SamplingMask",
    "draw_iid",
    "draw_distinct",
    "two_stage_mask",
    "distinct_mask",
    "raw_draws",
    "radial_mask",
    "spiral_mask",
    "rasterize_spoke",
]

logger = logging.getLogger(__name__)

BUDGET_TOLERANCE = 0.005


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by ``(seed, stream)``.

    The generator is PCG64 seeded through ``SeedSequence([seed, stream])``;
    distinct stream ids give statistically independent sequences and the same
    pair always gives the same sequence.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence([int(self.seed) & (2**64 - 1), int(self.stream) & (2**64 - 1)])
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class SamplingMask:
    """Measured frequencies, in draw order.

    For two-stage masks the first ``omega_size`` entries are the Omega stage.
    ``multiplicities`` is only set by :func:`draw_iid`.
    """

    side: int
    indices: np.ndarray
    scheme: dict
    seed: Optional[int] = None
    budget_fraction: Optional[float] = None
    multiplicities: Optional[np.ndarray] = None
    draws_total: int = 0
    omega_size: int = 0
    omega_rejections: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).ravel()
        n2 = self.side * self.side
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n2):
            raise ValueError("mask index out of range")

    @property
    def distinct(self) -> int:
        return int(np.unique(self.indices).size)

    @property
    def fraction(self) -> float:
        return self.distinct / float(self.side * self.side)

    @property
    def has_duplicates(self) -> bool:
        return self.distinct != self.indices.size

    @property
    def omega_indices(self) -> np.ndarray:
        return self.indices[: self.omega_size]

    def to_grid(self) -> np.ndarray:
        g = np.zeros(self.side * self.side, dtype=bool)
        g[self.indices] = True
        return g.reshape(self.side, self.side)

    def sidecar(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "budget_fraction": self.budget_fraction,
            "distinct": self.distinct,
            "draws_total": int(self.draws_total),
            "omega_size": int(self.omega_size),
        }


def _target_count(n: int, budget_fraction: float) -> int:
    if not 0 < budget_fraction <= 1:
        raise ValueError("budget fraction must lie in (0, 1]")
    return int(round(budget_fraction * n * n))


def _cdf(density: Density) -> np.ndarray:
    return np.cumsum(density.mass.ravel())


def _invert(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, cdf.size - 1)


def draw_iid(density: Density, draws: int, rng: RngStream) -> SamplingMask:
    """``draws`` independent categorical draws; repeats are kept and counted."""
    if draws < 1:
        raise ValueError("draws must be >= 1")
    gen = rng.generator()
    idx = _invert(_cdf(density), gen.random(draws))
    uniq, first, counts = np.unique(idx, return_index=True, return_counts=True)
    order = np.argsort(first)
    return SamplingMask(
        side=density.side,
        indices=idx,
        scheme={"kind": "iid", "density": density.label},
        seed=rng.seed,
        multiplicities=counts[order],
        draws_total=draws,
        meta={"distinct_indices": uniq[order]},
    )


def _draw_until(cdf, target, gen, visited: np.ndarray):
    """Sequential draws with rejection of visited positions.

    Returns the accepted indices in draw order, the number of draws consumed
    and the number of rejected draws that fell on initially visited cells.
    """
    accepted = []
    need = target
    total = 0
    pre_rejected = 0
    initial = visited.copy()
    batch = max(64, 2 * target)
    while need > 0:
        idx = _invert(cdf, gen.random(batch))
        uniq, first = np.unique(idx, return_index=True)
        fresh = ~visited[uniq]
        cand_pos = np.sort(first[fresh])
        if cand_pos.size >= need:
            cut = cand_pos[need - 1] + 1
            take = idx[cand_pos[:need]]
            consumed = idx[:cut]
        else:
            cut = batch
            take = idx[cand_pos]
            consumed = idx
        pre_rejected += int(np.count_nonzero(initial[consumed]))
        visited[take] = True
        accepted.append(take)
        need -= take.size
        total += cut
        batch = min(batch * 2, 1 << 24)
    out = np.concatenate(accepted) if accepted else np.zeros(0, dtype=np.int64)
    return out, total, pre_rejected


def draw_distinct(
    density: Density,
    target_distinct: int,
    rng: RngStream,
    exclude=None,
) -> SamplingMask:
    """Draw until ``target_distinct`` distinct indices are collected.

    Repeated positions and positions in ``exclude`` are rejected.  The total
    number of draws (accepted plus rejected) is recorded in ``draws_total``.
    """
    n = density.side
    visited = np.zeros(n * n, dtype=bool)
    if exclude is not None:
        visited[np.asarray(getattr(exclude, "indices", exclude), dtype=np.int64)] = True
    available = int(np.count_nonzero((density.mass.ravel() > 0) & ~visited))
    if target_distinct > available:
        raise ValueError(
            f"density supports only {available} admissible positions, "
            f"cannot collect {target_distinct} distinct samples"
        )
    if target_distinct < 0:
        raise ValueError("target must be nonnegative")
    gen = rng.generator()
    if target_distinct == 0:
        idx, total, rejected = np.zeros(0, dtype=np.int64), 0, 0
    else:
        idx, total, rejected = _draw_until(_cdf(density), target_distinct, gen, visited)
    return SamplingMask(
        side=n,
        indices=idx,
        scheme={"kind": "distinct", "density": density.label},
        seed=rng.seed,
        budget_fraction=target_distinct / float(n * n),
        draws_total=total,
        omega_rejections=rejected,
    )


def raw_draws(density: Density, count: int, rng: RngStream) -> np.ndarray:
    """The first ``count`` i.i.d. draws of ``rng`` (repeats kept).

    Matches the sequence consumed by :func:`draw_distinct` on the same stream.
    """
    return _invert(_cdf(density), rng.generator().random(count))


def distinct_mask(density: Density, budget_fraction: float, rng: RngStream) -> SamplingMask:
    """Single-stage variable-density mask at a budget fraction."""
    mask = draw_distinct(density, _target_count(density.side, budget_fraction), rng)
    mask.scheme = {"kind": "iid", "density": density.label}
    mask.budget_fraction = budget_fraction
    return mask


def two_stage_mask(omega, density_high: Density, budget_fraction: float, rng: RngStream) -> SamplingMask:
    """Omega in full, then distinct draws off Omega up to the budget."""
    n = density_high.side
    m = _target_count(n, budget_fraction)
    omega_idx = np.asarray(getattr(omega, "indices", omega), dtype=np.int64)
    omega_idx = np.unique(omega_idx)
    if omega_idx.size > m:
        raise ValueError(
            f"Omega has {omega_idx.size} frequencies but the budget allows only {m}"
        )
    high = draw_distinct(density_high, m - omega_idx.size, rng, exclude=omega_idx)
    return SamplingMask(
        side=n,
        indices=np.concatenate([omega_idx, high.indices]),
        scheme={
            "kind": "two_stage",
            "omega": getattr(omega, "provenance", "custom"),
            "density": density_high.label,
        },
        seed=rng.seed,
        budget_fraction=budget_fraction,
        draws_total=high.draws_total,
        omega_size=int(omega_idx.size),
        omega_rejections=high.omega_rejections,
    )


def _bresenham(x0: int, y0: int, x1: int, y1: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer points of the segment, closed form of Bresenham's algorithm."""
    dx, dy = x1 - x0, y1 - y0
    steep = abs(dy) > abs(dx)
    if steep:
        x0, y0, x1, y1, dx, dy = y0, x0, y1, x1, dy, dx
    if dx == 0:
        xs = np.array([x0])
        ys = np.array([y0])
    else:
        step = 1 if dx > 0 else -1
        i = np.arange(abs(dx) + 1)
        adx, ady = abs(dx), abs(dy)
        off = (2 * i * ady + adx) // (2 * adx)
        xs = x0 + step * i
        ys = y0 + (1 if dy >= 0 else -1) * off
    if steep:
        xs, ys = ys, xs
    return xs, ys


def rasterize_spoke(n: int, angle: float) -> np.ndarray:
    """Linear indices of the diameter through DC at ``angle`` (radians)."""
    r = n / 2.0
    ex = int(round(r * math.cos(angle)))
    ey = int(round(r * math.sin(angle)))
    kx, ky = _bresenham(-ex, -ey, ex, ey)
    keep = (kx >= -n // 2) & (kx < n // 2) & (ky >= -n // 2) & (ky < n // 2)
    return (ky[keep] + n // 2) * n + (kx[keep] + n // 2)


def _spoke_coverage(n: int, angles) -> np.ndarray:
    grid = np.zeros(n * n, dtype=bool)
    for a in angles:
        grid[rasterize_spoke(n, a)] = True
    return grid


def _closest_count(count_of, target: int, lo: int, hi: int) -> int:
    """Smallest ``k`` in ``[lo, hi]`` with ``count_of(k) >= target`` by
    bisection, then the better of ``k - 1`` and ``k``."""
    if count_of(hi) < target:
        raise ValueError("budget exceeds the achievable coverage")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if count_of(mid) >= target:
            hi = mid
        else:
            lo = mid
    best = hi
    if hi - 1 >= 1 and abs(count_of(hi - 1) - target) < abs(count_of(hi) - target):
        best = hi - 1
    return best


def radial_mask(n: int, budget_fraction: float, angle_mode: str = "uniform",
                rng: Optional[RngStream] = None, spokes: Optional[int] = None) -> SamplingMask:
    """Diameters through DC, rasterized, with spoke count calibrated to the
    budget (or fixed by ``spokes``).

    ``uniform`` spaces angles evenly over ``[0, pi)``; ``random`` draws them
    i.i.d. uniform on ``[0, pi)`` from ``rng``.
    """
    if angle_mode not in ("uniform", "random"):
        raise ValueError("angle_mode must be 'uniform' or 'random'")
    if budget_fraction > 1:
        raise ValueError("budget fraction must not exceed 1")
    target = _target_count(n, budget_fraction)
    max_spokes = 8 * n
    if angle_mode == "random":
        if rng is None:
            raise ValueError("random angles need an RngStream")
        pool = rng.generator().random(max_spokes) * math.pi

        def angles(k):
            return pool[:k]
    else:
        def angles(k):
            return np.arange(k) * (math.pi / k)

    cache = {}

    def count_of(k):
        if k not in cache:
            cache[k] = int(_spoke_coverage(n, angles(k)).sum())
        return cache[k]

    if spokes is None:
        spokes = _closest_count(count_of, target, 0, max_spokes)
    grid = _spoke_coverage(n, angles(spokes))
    mask = SamplingMask(
        side=n,
        indices=np.flatnonzero(grid),
        scheme={"kind": "radial", "angle_mode": angle_mode, "spokes": int(spokes)},
        seed=rng.seed if (rng is not None and angle_mode == "random") else None,
        budget_fraction=budget_fraction,
    )
    _check_budget(mask)
    return mask


def _disc(n: int, radius: float) -> np.ndarray:
    k = np.arange(n) - n // 2
    return (k[:, None] ** 2 + k[None, :] ** 2) <= radius * radius


def _spiral_grid(n: int, r0: float, spacing: float) -> np.ndarray:
    grid = _disc(n, r0).ravel()
    r_max = n / 2.0
    # Archimedean arm r = r0 + a*theta sampled every ~0.3 px of arc length
    length = (r_max**2 - r0**2) / (2 * spacing) + (r_max - r0)
    s = np.arange(0.0, length + 0.3, 0.3)
    theta = (-r0 + np.sqrt(r0 * r0 + 2 * spacing * s)) / spacing
    r = r0 + spacing * theta
    keep = r <= r_max
    kx = np.rint(r[keep] * np.cos(theta[keep])).astype(np.int64)
    ky = np.rint(r[keep] * np.sin(theta[keep])).astype(np.int64)
    ok = (kx >= -n // 2) & (kx < n // 2) & (ky >= -n // 2) & (ky < n // 2)
    grid[(ky[ok] + n // 2) * n + (kx[ok] + n // 2)] = True
    return grid


def spiral_mask(n: int, budget_fraction: float, center_fraction: float,
                rng: Optional[RngStream] = None) -> SamplingMask:
    """Fully sampled central disc plus an Archimedean spiral arm.

    The disc holds ``center_fraction * N**2`` frequencies (up to rounding);
    the spacing ``a`` of ``r = r0 + a*theta`` is bisected until the distinct
    fraction matches the budget.  The result does not depend on ``rng``.
    """
    if center_fraction < 0 or center_fraction > budget_fraction:
        raise ValueError(
            f"center fraction {center_fraction} must lie in [0, budget={budget_fraction}]"
        )
    target = _target_count(n, budget_fraction)
    r0 = math.sqrt(center_fraction * n * n / math.pi)
    if math.isclose(center_fraction, budget_fraction):
        grid = _disc(n, r0).ravel()
        spacing = None
    else:
        # the arm per turn advances 2*pi*a in radius
        lo, hi = 1e-3, float(n)
        if _spiral_grid(n, r0, lo).sum() < target:
            raise ValueError("budget exceeds the achievable spiral coverage")
        if _spiral_grid(n, r0, hi).sum() > target:
            raise ValueError("disc alone already exceeds the budget")
        for _ in range(60):
            mid = math.sqrt(lo * hi)
            if _spiral_grid(n, r0, mid).sum() >= target:
                lo = mid
            else:
                hi = mid
            if hi / lo - 1 < 1e-9:
                break
        c_lo = _spiral_grid(n, r0, lo).sum()
        c_hi = _spiral_grid(n, r0, hi).sum()
        spacing = lo if abs(c_lo - target) <= abs(c_hi - target) else hi
        grid = _spiral_grid(n, r0, spacing)
    mask = SamplingMask(
        side=n,
        indices=np.flatnonzero(grid),
        scheme={
            "kind": "spiral",
            "center_fraction": center_fraction,
            "disc_radius": r0,
            "turn_spacing": None if spacing is None else 2 * math.pi * spacing,
        },
        budget_fraction=budget_fraction,
    )
    if spacing is not None:
        _check_budget(mask)
    return mask


def _check_budget(mask: SamplingMask) -> None:
    err = mask.fraction - mask.budget_fraction
    mask.meta["budget_error"] = err
    if abs(err) > BUDGET_TOLERANCE:
        raise ValueError(
            f"{mask.scheme['kind']} mask reaches fraction {mask.fraction:.4f}, "
            f"outside +-{BUDGET_TOLERANCE} of {mask.budget_fraction}"
        )
    logger.debug("%s mask fraction %.5f (target %.5f)", mask.scheme["kind"],
                 mask.fraction, mask.budget_fraction)
