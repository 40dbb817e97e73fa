"""PSNR metric and the seeded Monte-Carlo benchmark harness.

Scheme labels
-------------
``pi``                        i.i.d. distinct draws from the optimal density
``poly:p``                    i.i.d. distinct draws from the polynomial density
``uniform``                   i.i.d. distinct draws from the flat density
``pistar``                    Omega in full, then draws from the restricted density
``two_stage:poly:p``          Omega in full, then polynomial draws off Omega
``radial:uniform``            evenly spaced spokes (deterministic)
``radial:random``             spokes at random angles
``spiral``                    central disc plus an Archimedean arm (deterministic)

Schemes that sample Omega are reconstructed with the two-stage path, all
others with plain basis pursuit.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .density import (
    infnorm_map,
    optimal_density,
    polynomial_density,
    restricted_density,
    uniform_density,
)
from .gridops import MeasurementOperator, a0_apply, dwt2
from .lowfreq import FrequencySet, omega_region
from .masks import RngStream, SamplingMask, distinct_mask, radial_mask, spiral_mask, two_stage_mask
from .phantom import phantom
from .solver import SolverOptions, basis_pursuit, reconstruct_two_stage
from .wavelets import WaveletSpec

__all__ = [
    "psnr",
    "ExperimentConfig",
    "ResultRow",
    "GainRow",
    "SchemeContext",
    "parse_scheme",
    "build_mask",
    "load_reference",
    "run_monte_carlo",
    "gain_report",
    "results_csv",
    "trials_csv",
    "table1_config",
    "table2_config",
    "DETERMINISTIC_SCHEMES",
]

logger = logging.getLogger(__name__)

DETERMINISTIC_SCHEMES = ("radial:uniform", "spiral")
PEAK_NOTE = "peak=max|reference|"
STD_NOTE = "std divisor=trials-1"


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB with ``peak = max|reference|``.

    Returns ``inf`` when the images are identical.
    """
    reference = np.asarray(reference)
    test = np.asarray(test)
    if reference.shape != test.shape:
        raise ValueError(f"shape mismatch: {reference.shape} vs {test.shape}")
    peak = float(np.abs(reference).max())
    if peak == 0.0:
        raise ValueError("reference image is identically zero")
    mse = float(np.mean(np.abs(reference - test) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


# ---------------------------------------------------------------------------
# schemes


def parse_scheme(label: str) -> dict:
    """Structured form of a scheme label (see module docstring)."""
    parts = label.split(":")
    kind = parts[0]
    try:
        if label == "pi":
            return {"stage": "single", "density": "pi"}
        if label == "uniform":
            return {"stage": "single", "density": "uniform"}
        if kind == "poly" and len(parts) == 2:
            return {"stage": "single", "density": "poly", "p": int(parts[1])}
        if label in ("pistar", "two_stage:pi"):
            return {"stage": "two", "density": "pistar"}
        if kind == "two_stage" and len(parts) == 3 and parts[1] == "poly":
            return {"stage": "two", "density": "poly", "p": int(parts[2])}
        if kind == "radial" and len(parts) == 2 and parts[1] in ("uniform", "random"):
            return {"stage": "traj", "kind": "radial", "angle_mode": parts[1]}
        if label == "spiral":
            return {"stage": "traj", "kind": "spiral"}
    except ValueError:
        pass
    raise ValueError(f"unknown scheme {label!r}")


class SchemeContext:
    """Everything a mask builder needs that does not depend on the seed.

    The infinity-norm map, Omega and the restricted density are computed
    lazily and reused across trials.
    """

    def __init__(self, n: int, spec: WaveletSpec, tau: float = 0.01, low_levels: int = 0,
                 spiral_center_fraction: Optional[float] = None):
        spec.validate(n)
        self.n = n
        self.spec = spec
        self.tau = tau
        self.low_levels = low_levels
        self._spiral_center_fraction = spiral_center_fraction
        self._norms = None
        self._omega = None

    @property
    def norms(self) -> np.ndarray:
        if self._norms is None:
            self._norms = infnorm_map(self.spec, self.n)
        return self._norms

    @property
    def omega(self) -> FrequencySet:
        if self._omega is None:
            self._omega = omega_region(self.spec, self.n, self.low_levels, self.tau)
        return self._omega

    @property
    def spiral_center_fraction(self) -> float:
        # by default the spiral's disc has the same area as Omega
        if self._spiral_center_fraction is not None:
            return self._spiral_center_fraction
        return len(self.omega) / float(self.n * self.n)

    def density(self, parsed: dict):
        name = parsed["density"]
        if name == "pi":
            return optimal_density(self.norms)
        if name == "pistar":
            return restricted_density(self.norms, self.omega)
        if name == "uniform":
            return uniform_density(self.n)
        return polynomial_density(self.n, parsed["p"])


def build_mask(label: str, ctx: SchemeContext, budget: float, rng: RngStream) -> SamplingMask:
    parsed = parse_scheme(label)
    if parsed["stage"] == "single":
        mask = distinct_mask(ctx.density(parsed), budget, rng)
    elif parsed["stage"] == "two":
        mask = two_stage_mask(ctx.omega, ctx.density(parsed), budget, rng)
    elif parsed["kind"] == "radial":
        mask = radial_mask(ctx.n, budget, parsed["angle_mode"], rng)
    else:
        mask = spiral_mask(ctx.n, budget, ctx.spiral_center_fraction, rng)
    mask.seed = rng.seed
    mask.scheme = dict(mask.scheme, label=label)
    return mask


def reconstruct(mask: SamplingMask, y: np.ndarray, ctx: SchemeContext,
                opts: Optional[SolverOptions] = None):
    """Image and solver report; two-stage when the mask carries Omega."""
    from .gridops import idwt2

    if mask.omega_size:
        return reconstruct_two_stage(mask.indices, y, ctx.omega, ctx.spec, opts)
    op = MeasurementOperator(mask.indices, ctx.spec, ctx.n)
    w, report = basis_pursuit(op, y, opts)
    return idwt2(w, ctx.spec), report


# ---------------------------------------------------------------------------
# configuration and results


def load_reference(source: str, n: Optional[int] = None) -> np.ndarray:
    """``phantom:<variant>`` (rendered at ``n``) or a PGM path."""
    if source.startswith("phantom"):
        variant = source.split(":", 1)[1] if ":" in source else "ellipses"
        if n is None:
            raise ValueError("phantom references need N")
        return phantom(n, variant)
    from .formats import load_image

    img = load_image(source)
    if n is not None and img.shape[0] != n:
        raise ValueError(f"reference {source} has side {img.shape[0]}, config says N={n}")
    return img


@dataclass
class ExperimentConfig:
    """One Monte-Carlo study.

    ``reference`` is ``"phantom:ellipses"``, ``"phantom:blocks"`` or a PGM path.
    Deterministic schemes are run once regardless of ``trials``.
    """

    schemes: list
    reference: str = "phantom:ellipses"
    n: int = 256
    spec: WaveletSpec = field(default_factory=WaveletSpec)
    budget: float = 0.2
    trials: int = 10
    base_seed: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)
    tau: float = 0.01
    low_levels: int = 0
    spiral_center_fraction: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.schemes:
            raise ValueError("scheme list is empty")
        for label in self.schemes:
            parse_scheme(label)
        if not 0 < self.budget <= 1:
            raise ValueError("budget must lie in (0, 1]")
        self.spec.validate(self.n)

    def trials_for(self, label: str) -> int:
        return 1 if label in DETERMINISTIC_SCHEMES else self.trials

    def to_dict(self) -> dict:
        return {
            "schemes": list(self.schemes),
            "reference": self.reference,
            "n": self.n,
            "wavelet": self.spec.to_dict(),
            "budget": self.budget,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "solver": self.solver.to_dict(),
            "tau": self.tau,
            "low_levels": self.low_levels,
            "spiral_center_fraction": self.spiral_center_fraction,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {
            "schemes", "reference", "n", "wavelet", "budget", "trials", "base_seed",
            "solver", "tau", "low_levels", "spiral_center_fraction", "workers",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "wavelet" in d:
            d["spec"] = WaveletSpec.from_dict(d.pop("wavelet"))
        if "solver" in d:
            d["solver"] = SolverOptions(**d["solver"])
        return cls(**d)


@dataclass
class ResultRow:
    label: str
    mean: float
    std: float
    psnrs: list
    seeds: list
    mean_iters: float
    errors: list = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len(self.psnrs)


@dataclass
class GainRow:
    label: str
    single: str
    gain: float
    delta_std: float


# one context per worker process
@lru_cache(maxsize=4)
def _context(n: int, spec: WaveletSpec, tau: float, low_levels: int,
             spiral_center_fraction: Optional[float]) -> SchemeContext:
    return SchemeContext(n, spec, tau, low_levels, spiral_center_fraction)


@lru_cache(maxsize=4)
def _measurement_source(reference: str, n: int, spec: WaveletSpec):
    ref = load_reference(reference, n)
    kspace = a0_apply(dwt2(ref, spec), spec).ravel()
    return ref, kspace


def _run_trial(cfg: ExperimentConfig, label: str, trial: int) -> dict:
    ctx = _context(cfg.n, cfg.spec, cfg.tau, cfg.low_levels, cfg.spiral_center_fraction)
    ref, kspace = _measurement_source(cfg.reference, cfg.n, cfg.spec)
    t0 = time.perf_counter()
    try:
        mask = build_mask(label, ctx, cfg.budget, RngStream(cfg.base_seed, trial))
        image, report = reconstruct(mask, kspace[mask.indices], ctx, cfg.solver)
        value = psnr(ref, np.real(image))
    except Exception as exc:  # recorded on the row, never fatal
        logger.warning("scheme %s trial %d failed: %s", label, trial, exc)
        return {"label": label, "trial": trial, "error": f"{type(exc).__name__}: {exc}"}
    return {
        "label": label,
        "trial": trial,
        "psnr": value,
        "iterations": report.iterations,
        "converged": report.converged,
        "distinct": mask.distinct,
        "seconds": time.perf_counter() - t0,
    }


def _aggregate(label: str, outcomes: list) -> ResultRow:
    outcomes = sorted(outcomes, key=lambda o: o["trial"])
    ok = [o for o in outcomes if "error" not in o]
    values = [o["psnr"] for o in ok]
    if values:
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        iters = float(np.mean([o["iterations"] for o in ok]))
    else:
        mean = std = iters = math.nan
    return ResultRow(
        label=label,
        mean=mean,
        std=std,
        psnrs=values,
        seeds=[o["trial"] for o in ok],
        mean_iters=iters,
        errors=[(o["trial"], o["error"]) for o in outcomes if "error" in o],
    )


def _sort_key(row: ResultRow):
    return (math.isnan(row.mean), -row.mean if not math.isnan(row.mean) else 0.0, row.label)


def run_monte_carlo(cfg: ExperimentConfig, progress=None, return_trials: bool = False):
    """Run every ``(scheme, trial)`` job and aggregate per scheme.

    Trial ``t`` of every scheme draws from ``RngStream(base_seed, t)``.  Rows
    come back sorted by mean PSNR, best first; the result only depends on the
    config, not on ``cfg.workers`` or completion order.

    Parameters
    ----------
    cfg : ExperimentConfig
    progress : callable, optional
        Called with each finished trial's outcome dict.
    return_trials : bool
        Also return the per-trial outcome dicts.
    """
    jobs = [(label, t) for label in cfg.schemes for t in range(cfg.trials_for(label))]
    outcomes = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_trial, cfg, label, t) for label, t in jobs]
            for fut in futures:
                outcomes.append(fut.result())
                if progress:
                    progress(outcomes[-1])
    else:
        for label, t in jobs:
            outcomes.append(_run_trial(cfg, label, t))
            if progress:
                progress(outcomes[-1])
    rows = [
        _aggregate(label, [o for o in outcomes if o["label"] == label])
        for label in dict.fromkeys(cfg.schemes)
    ]
    rows.sort(key=_sort_key)
    if return_trials:
        return rows, outcomes
    return rows


def _single_stage_label(label: str) -> str:
    if label in ("pistar", "two_stage:pi"):
        return "pi"
    if label.startswith("two_stage:"):
        return label[len("two_stage:"):]
    raise ValueError(f"{label!r} is not a two-stage scheme")


def gain_report(single_stage: Sequence[ResultRow], two_stage: Sequence[ResultRow]) -> list:
    """Per-scheme mean and std differences (two-stage minus single-stage).

    Rows are paired by label; two-stage labels such as ``pistar`` or
    ``two_stage:poly:3`` pair with ``pi`` and ``poly:3``.  Identical label
    sets are paired directly.
    """
    singles = {r.label: r for r in single_stage}
    twos = {r.label: r for r in two_stage}
    direct = set(singles) == set(twos)
    gains = []
    for label, row in twos.items():
        partner = label if direct else _single_stage_label(label)
        if partner not in singles:
            raise ValueError(f"no single-stage row {partner!r} for {label!r}")
        base = singles[partner]
        gains.append(GainRow(label, partner, row.mean - base.mean, row.std - base.std))
    if not direct and len(gains) != len(singles):
        missing = set(singles) - {g.single for g in gains}
        raise ValueError(f"single-stage rows without a two-stage partner: {sorted(missing)}")
    return gains


# ---------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.4f}"


def results_csv(rows: Sequence[ResultRow], cfg: ExperimentConfig) -> str:
    """Summary table; ``#`` lines ahead of the header state the conventions."""
    buf = io.StringIO()
    buf.write(f"# {PEAK_NOTE}; {STD_NOTE}; reference={cfg.reference}; n={cfg.n}; "
              f"wavelet={cfg.spec.label}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "mean_psnr_db", "std_db", "trials", "budget", "seed"])
    for r in rows:
        w.writerow([r.label, _fmt(r.mean), _fmt(r.std), r.trials, f"{cfg.budget:g}", cfg.base_seed])
    return buf.getvalue()


def trials_csv(outcomes: Sequence[dict], cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# {PEAK_NOTE}; stream=(seed, trial)\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "trial", "seed", "psnr_db", "iterations", "converged", "error"])
    for o in sorted(outcomes, key=lambda o: (cfg.schemes.index(o["label"]), o["trial"])):
        if "error" in o:
            w.writerow([o["label"], o["trial"], cfg.base_seed, "", "", "", o["error"]])
        else:
            w.writerow([o["label"], o["trial"], cfg.base_seed, _fmt(o["psnr"]),
                        o["iterations"], int(o["converged"]), ""])
    return buf.getvalue()


def read_results_csv(text: str) -> list:
    """Rows of a summary CSV as dicts (comment lines skipped)."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# ---------------------------------------------------------------------------
# the two reference studies: single-stage densities, then two-stage masks
# against trajectory baselines


TABLE1_SCHEMES = ["pi"] + [f"poly:{p}" for p in range(1, 7)]
TABLE2_SCHEMES = (
    ["pistar"]
    + [f"two_stage:poly:{p}" for p in range(1, 7)]
    + ["radial:random", "radial:uniform", "spiral"]
)


def table1_config(**overrides) -> ExperimentConfig:
    """Single-stage i.i.d. densities at 20%, 10 trials."""
    return ExperimentConfig(schemes=list(TABLE1_SCHEMES), **overrides)


def table2_config(**overrides) -> ExperimentConfig:
    """Two-stage densities and the trajectory baselines at 20%, 10 trials."""
    return ExperimentConfig(schemes=list(TABLE2_SCHEMES), **overrides)
