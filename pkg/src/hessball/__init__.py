"""Radial coupled k-Hessian systems on the unit ball.

Solvers, cone diagnostics, explicit bound constants, and end-to-end
verification for cyclically coupled Hessian-type boundary value problems
under radial symmetry.
"""

from .core import (
    GridFunction,
    NonlinearitySpec,
    PowerSystemSpec,
    SolutionBundle,
    SystemSpec,
    binomial,
    eval_nonlinearity,
    grid_points,
    sup_norm,
)
from .operators import (
    QuadratureTable,
    apply_composite,
    apply_operator,
    hessian_eigenvalue_vector,
    hessian_eigenvalues,
    radial_hessian,
)
from .analysis import (
    BoundCheck,
    ConeReport,
    GrowthClass,
    SublinearityReport,
    ThresholdReport,
    admissibility_check,
    chain_contraction_bound,
    classify_growth,
    cone_check,
    lower_bound_check,
    lower_bound_constant,
    multiplicity_thresholds,
    sublinearity_check,
    upper_bound_check,
    upper_bound_prefactor,
)
from .solver import (
    EigenResult,
    IterationReport,
    IterationStatus,
    LambdaProductCheck,
    NormProfile,
    lambda_product_check,
    lambda_product_exponents,
    lambda_scaled_system,
    lambda_scaling_factors,
    make_bundle,
    norm_profile_scan,
    normalized_power_iteration,
    picard_solve,
    rescale_to_solution,
)
from .verify import (
    RESIDUAL_BOUND_CONSTANT,
    ConvergenceReport,
    VerificationReport,
    constant_forcing_solution,
    ode_residual,
    residual_tolerance,
    richardson_order,
    verify_solution,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCheck",
    "ConeReport",
    "ConvergenceReport",
    "EigenResult",
    "GridFunction",
    "GrowthClass",
    "IterationReport",
    "IterationStatus",
    "LambdaProductCheck",
    "NonlinearitySpec",
    "NormProfile",
    "PowerSystemSpec",
    "QuadratureTable",
    "RESIDUAL_BOUND_CONSTANT",
    "SolutionBundle",
    "SublinearityReport",
    "SystemSpec",
    "ThresholdReport",
    "VerificationReport",
    "admissibility_check",
    "apply_composite",
    "apply_operator",
    "binomial",
    "chain_contraction_bound",
    "classify_growth",
    "cone_check",
    "constant_forcing_solution",
    "eval_nonlinearity",
    "grid_points",
    "hessian_eigenvalue_vector",
    "hessian_eigenvalues",
    "lambda_product_check",
    "lambda_product_exponents",
    "lambda_scaled_system",
    "lambda_scaling_factors",
    "lower_bound_check",
    "lower_bound_constant",
    "make_bundle",
    "multiplicity_thresholds",
    "norm_profile_scan",
    "normalized_power_iteration",
    "ode_residual",
    "picard_solve",
    "radial_hessian",
    "rescale_to_solution",
    "residual_tolerance",
    "richardson_order",
    "sublinearity_check",
    "sup_norm",
    "upper_bound_check",
    "upper_bound_prefactor",
    "verify_solution",
]
