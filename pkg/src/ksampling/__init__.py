"""Variable-density k-space sampling and l1 reconstruction for wavelet-sparse
images.

The measurement system is ``A0 = F* Psi``: an orthogonal periodic wavelet
synthesis followed by the unitary 2D DFT on a centred ``N x N`` grid.
"""

__version__ = "0.1.0"

from .bench import ExperimentConfig, ResultRow, gain_report, psnr, run_monte_carlo
from .density import (
    BoundQuery,
    Density,
    bound_required_m,
    infnorm_map,
    k_of_density,
    optimal_density,
    polynomial_density,
    restricted_density,
)
from .gridops import (
    MeasurementOperator,
    a0_adjoint,
    a0_apply,
    dwt2,
    fft2_unitary,
    idwt2,
    ifft2_unitary,
)
from .lowfreq import FrequencySet, omega_region, sparsify, x_omega
from .masks import (
    RngStream,
    SamplingMask,
    distinct_mask,
    draw_distinct,
    draw_iid,
    radial_mask,
    spiral_mask,
    two_stage_mask,
)
from .phantom import phantom
from .solver import (
    SolverOptions,
    basis_pursuit,
    dedup_equivalence_check,
    reconstruct_two_stage,
)
from .wavelets import WaveletSpec

__all__ = [
    "__version__",
    "BoundQuery",
    "Density",
    "ExperimentConfig",
    "FrequencySet",
    "MeasurementOperator",
    "ResultRow",
    "RngStream",
    "SamplingMask",
    "SolverOptions",
    "WaveletSpec",
    "a0_adjoint",
    "a0_apply",
    "basis_pursuit",
    "bound_required_m",
    "dedup_equivalence_check",
    "distinct_mask",
    "draw_distinct",
    "draw_iid",
    "dwt2",
    "fft2_unitary",
    "gain_report",
    "idwt2",
    "ifft2_unitary",
    "infnorm_map",
    "k_of_density",
    "omega_region",
    "optimal_density",
    "phantom",
    "polynomial_density",
    "psnr",
    "radial_mask",
    "reconstruct_two_stage",
    "restricted_density",
    "run_monte_carlo",
    "sparsify",
    "spiral_mask",
    "two_stage_mask",
    "x_omega",
]
