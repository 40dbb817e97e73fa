"""Equality-constrained l1 minimization over masked Fourier measurements.

``basis_pursuit`` solves ``min ||w||_1  s.t.  A w = y`` by Douglas-Rachford
splitting between the l1 prox (complex soft-thresholding) and the projection
onto the affine constraint set.  Rows of ``A`` are rows of the unitary
``A0``, so for a duplicate-free mask ``A A* = I`` and the projection is
``w + A*(y - A w)``, exact up to rounding.  By default iterates live in
complex coefficient space; the real part is returned and the discarded
imaginary norm is reported.  ``domain="real"`` restricts the iterates to real
coefficients instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .gridops import MeasurementOperator, a0_apply, idwt2
from .lowfreq import FrequencySet, low_band_mask, x_omega
from .wavelets import WaveletSpec, filter_bank

__all__ = [
    "SolverOptions",
    "SolveReport",
    "basis_pursuit",
    "reconstruct_two_stage",
    "reconstruct_single_stage",
    "dedup_equivalence_check",
    "soft_threshold",
]

logger = logging.getLogger(__name__)


@dataclass
class SolverOptions:
    """Douglas-Rachford settings.

    ``gamma`` is the prox step, expressed relative to the data scale
    ``max|A* y|``; this makes iterates equivariant under rescaling of ``y``.
    """

    max_iters: int = 2000
    tol: float = 1e-7
    gamma: float = 0.01
    relaxation: float = 1.0
    domain: str = "complex"
    trace_every: int = 10
    verbose: bool = False

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.relaxation < 2:
            raise ValueError("relaxation must lie in (0, 2)")
        if self.domain not in ("real", "complex"):
            raise ValueError("domain must be 'real' or 'complex'")

    def to_dict(self) -> dict:
        return {
            "max_iters": self.max_iters,
            "tol": self.tol,
            "gamma": self.gamma,
            "relaxation": self.relaxation,
            "domain": self.domain,
        }


@dataclass
class SolveReport:
    iterations: int = 0
    rel_change: float = 0.0
    residual: float = 0.0
    converged: bool = False
    imag_norm: float = 0.0
    objective: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "rel_change": self.rel_change,
            "residual": self.residual,
            "converged": self.converged,
            "imag_norm": self.imag_norm,
            "objective": list(self.objective),
        }


def soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    """Complex soft-thresholding ``z * max(0, 1 - t/|z|)``."""
    mag = np.abs(z)
    scale = np.maximum(mag - t, 0.0)
    np.divide(scale, mag, out=scale, where=mag > 0)
    return z * scale


class _Projector:
    """Affine projection onto ``{w : A w = y}`` in the natural DFT layout.

    With ``real=True`` the constraint set is intersected with real
    coefficient arrays; a real image has ``y(-k) = conj(y(k))``, so every
    measured frequency also fixes its mirror and the projection becomes a
    k-space replacement on the conjugate-symmetric closure of the mask.
    """

    def __init__(self, op: MeasurementOperator, y: np.ndarray, real: bool = False):
        n = op.n
        self.n = n
        self.real = real
        self.bank = filter_bank(op.spec, n)
        rows, cols = np.divmod(op.indices, n)
        nat = ((rows + n // 2) % n) * n + (cols + n // 2) % n
        y = np.asarray(y, dtype=complex)
        if op.has_duplicates:
            # pseudo-inverse projection: each distinct row takes the mean of
            # its repeated measurements
            uniq, inv, counts = np.unique(nat, return_inverse=True, return_counts=True)
            target = np.zeros(uniq.size, dtype=complex)
            np.add.at(target, inv, y)
            nat, y = uniq, target / counts
        # measured rows, used for the reported residual
        self.meas_nat = nat
        self.meas_y = y
        if real:
            r, c = np.divmod(nat, n)
            mirror = ((n - r) % n) * n + (n - c) % n
            grid = np.zeros(n * n, dtype=complex)
            grid[mirror] = np.conj(y)
            grid[nat] = y
            known = np.zeros(n * n, dtype=bool)
            known[nat] = True
            known[mirror] = True
            nat = np.flatnonzero(known)
            y = grid[nat]
        self.nat = nat
        self.y = y

    def forward(self, w):
        return self.bank.synthesize(w).ravel()[self.nat] / self.n

    def measured(self, w):
        return self.bank.synthesize(w).ravel()[self.meas_nat] / self.n

    def correction(self, residual):
        grid = np.zeros(self.n * self.n, dtype=complex)
        grid[self.nat] = residual * self.n
        return self.bank.analyze(grid.reshape(self.n, self.n), real=self.real)

    def __call__(self, w):
        return w + self.correction(self.y - self.forward(w))


def basis_pursuit(op: MeasurementOperator, y: np.ndarray, opts: Optional[SolverOptions] = None,
                  allow_duplicates: bool = False):
    """Minimal l1-norm coefficients matching the measurements.

    Parameters
    ----------
    op : MeasurementOperator
        Must be duplicate-free unless ``allow_duplicates``; repeated rows are
        then handled by a pseudo-inverse projection.
    y : ndarray
        Complex measurements in ``op.indices`` order.
    opts : SolverOptions, optional

    Returns
    -------
    w : ndarray
        Real ``N x N`` coefficients.
    report : SolveReport
    """
    opts = opts or SolverOptions()
    y = np.asarray(y, dtype=complex).ravel()
    if y.size != op.indices.size:
        raise ValueError(f"expected {op.indices.size} measurements, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise ValueError("measurements contain non-finite values")
    if op.has_duplicates and not allow_duplicates:
        raise ValueError("mask has duplicate indices; collapse them before solving")

    real = opts.domain == "real"
    project = _Projector(op, y, real=real)
    report = SolveReport()
    n = op.n
    y_norm = float(np.linalg.norm(project.meas_y))
    if y_norm == 0.0:
        report.converged = True
        return np.zeros((n, n)), report

    z = project(np.zeros((n, n), dtype=float if real else complex))
    scale = float(np.abs(z).max())
    thresh = opts.gamma * scale
    lam = opts.relaxation
    x = z
    for it in range(1, opts.max_iters + 1):
        x = project(z)
        v = soft_threshold(2 * x - z, thresh)
        step = lam * (v - x)
        z = z + step
        change = float(np.linalg.norm(step)) / max(float(np.linalg.norm(z)), 1e-300)
        if it % opts.trace_every == 0 or it == 1:
            report.objective.append(float(np.abs(x).sum()))
            if opts.verbose:
                logger.info("iter %d  l1 %.6e  change %.3e", it, report.objective[-1], change)
        report.iterations = it
        report.rel_change = change
        if change < opts.tol:
            report.converged = True
            break
    x = project(z)
    report.residual = float(np.linalg.norm(project.measured(x) - project.meas_y)) / y_norm
    report.imag_norm = float(np.linalg.norm(np.imag(x)))
    if not report.converged:
        logger.warning("basis pursuit stopped at max_iters=%d (change %.2e)",
                       opts.max_iters, report.rel_change)
    return np.real(x).copy(), report


def reconstruct_single_stage(indices, y, spec: WaveletSpec, n: int,
                             opts: Optional[SolverOptions] = None):
    """Basis pursuit on a duplicate-free mask, synthesized to a real image."""
    op = MeasurementOperator(indices, spec, n)
    w, report = basis_pursuit(op, y, opts)
    return idwt2(w, spec), report


def reconstruct_two_stage(mask_indices, y, omega: FrequencySet, spec: WaveletSpec,
                          opts: Optional[SolverOptions] = None,
                          low_band_only: bool = True):
    """Two-stage reconstruction ``Psi (x_Omega + w)``.

    ``x_Omega`` comes from the Omega samples, ``w`` solves basis pursuit on the
    residual data ``y - A x_Omega`` over the whole mask.

    With ``low_band_only`` (the default) ``x_Omega`` is kept only on the
    low-frequency bands that defined Omega.  Outside them the Omega samples
    carry truncation leakage (Symmlet ringing, or the half-band edge shared
    by real Shannon atoms), which would make the residual less sparse.  This
    needs ``omega.low_levels``; sets built by hand fall back to the full
    ``x_Omega``.
    """
    n = omega.side
    op = MeasurementOperator(mask_indices, spec, n)
    y = np.asarray(y, dtype=complex).ravel()
    pos = {int(i): k for k, i in enumerate(op.indices)}
    try:
        where = np.array([pos[int(i)] for i in omega.indices], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"mask is missing Omega frequency {exc.args[0]}") from None
    x_om = x_omega(y[where], omega, spec)
    if low_band_only and omega.low_levels is not None:
        x_om = np.where(low_band_mask(spec, n, omega.low_levels), x_om, 0.0)
    residual = y - op.apply(x_om)
    w, report = basis_pursuit(op, residual, opts)
    return idwt2(x_om + w, spec), report


def dedup_equivalence_check(density, m: int, seed: int, x: np.ndarray, spec: WaveletSpec,
                            opts: Optional[SolverOptions] = None, agree_tol: Optional[float] = None,
                            return_details: bool = False):
    """Solve with the distinct mask and with the raw draw sequence (repeats
    kept); report whether the solutions agree.

    The raw sequence is the ``m + m2`` i.i.d. draws needed to see ``m``
    distinct positions.
    """
    from .masks import RngStream, draw_distinct, raw_draws

    opts = opts or SolverOptions()
    n = density.side
    rng = RngStream(seed)
    distinct = draw_distinct(density, m, rng)
    raw = raw_draws(density, distinct.draws_total, rng)
    a = MeasurementOperator(distinct.indices, spec, n)
    b = MeasurementOperator(raw, spec, n)
    wa, ra = basis_pursuit(a, a.apply(x), opts)
    wb, rb = basis_pursuit(b, b.apply(x), opts, allow_duplicates=True)
    tol = agree_tol if agree_tol is not None else 10 * opts.tol
    diff = float(np.linalg.norm(wa - wb)) / max(float(np.linalg.norm(wa)), 1e-300)
    ok = diff <= tol
    if return_details:
        return ok, {
            "rel_diff": diff,
            "extra_draws": int(distinct.draws_total - m),
            "reports": (ra, rb),
            "solutions": (wa, wb),
        }
    return ok
