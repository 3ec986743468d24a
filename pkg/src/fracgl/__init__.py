"""Grünwald-type difference schemes for fractional ODEs and sub-diffusion."""

from .caputo import (
    GridFunction,
    MittagLefflerParams,
    caputo_monomial,
    grunwald_apply,
    interpolate_offgrid,
    l1_apply,
    mittag_leffler,
    shifted_grunwald_apply,
)
from .convergence import ErrorRow, ErrorTable, Preset, get_preset, max_error, presets, refinement_study
from .ode import OdeProblem, OdeScheme, SmoothingData, build_smoothed_rhs, desmooth, solve_ode
from .subdiffusion import (
    Field1D,
    SchemeMatrices,
    SubdiffusionProblem,
    SubdiffusionSolution,
    Variant,
    assemble_matrices,
    build_H,
    eigenvalues_A,
    fourier_ml_reference,
    homogenize,
    solve_subdiffusion,
    spectral_radius_R,
    tridiag_solve,
)
from .weights import (
    FractionalOrder,
    L1WeightTable,
    OmegaCoefficients,
    WeightTable,
    grunwald_weights,
    l1_weights,
    omega_coefficients,
    tail_bounds,
    weight_bounds,
)

__all__ = [name for name in dir() if not name.startswith("_")]
