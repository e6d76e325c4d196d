"""Discrete harmonic functions on lattices.

Explicit Poisson kernels for the cube, a direct Dirichlet oracle,
certified Chebyshev/Lagrange interpolation bounds, nested-cube
propagation-of-smallness estimates, and exact-rational extension of cube
data to discrete harmonic polynomials.
"""

from .interp import (
    ErrorBoundParams,
    LagrangeCoeffs,
    NodeSet,
    chebyshev_nodes,
    coefficient_sum_bound,
    discrete_nodes,
    interpolation_error_bound,
    lagrange_coefficients,
)
from .kernel import (
    ComplexDomain,
    KernelTable,
    STANDARD_DOMAIN,
    basis_eval,
    batch_solve,
    kernel_complex_eval,
    kernel_eval,
    kernel_field,
    kernel_table,
    mode_rate,
    rate_lower_bound,
    represent,
)
from .lattice import (
    BoundaryData,
    Box,
    GridFunction,
    LatticeSpec,
    boundary_from_callable,
    enumerate_boundary,
    face_interior_points,
    is_harmonic,
    laplacian_residual,
    residual_field,
    sup_norm,
)
from .oracle import (
    GrowthReport,
    SolveReport,
    alternating_boundary,
    counterexample_growth,
    growth_rate,
    layerwise_extend,
    solve_dirichlet,
    zero_cube_witness,
)
from .polyext import (
    ExtensionResult,
    MultivarRationalPoly,
    NonHarmonicInputError,
    ResourceLimitError,
    UnivarRationalPoly,
    assemble,
    exact_harmonic_cube,
    extend_from_cube,
    grid_interpolate,
    second_difference_basis,
    solve_coefficient_system,
    vanishing_witness,
)
from .threecubes import (
    EstimateConstants,
    ExperimentConfig,
    ExperimentReport,
    chain_propagate,
    choose_order,
    estimate_constants,
    order_bound,
    run_experiment,
    sample_boundary,
    three_cubes_bound,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
