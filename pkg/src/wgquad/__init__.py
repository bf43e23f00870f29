"""Weighted Gaussian quadrature for row-wise assembly of uniform spline matrices."""
from .assembly import (
    AffineMap,
    EvalCounter,
    RuleSet,
    TensorSpace,
    assemble,
    assemble_load,
    assemble_mass_rowwise,
    assemble_standard_gauss,
    assemble_stiffness_rowwise,
    count_ratio,
)
from .exact_oracle import exact_mass_entry, exact_moment_vector, exact_stiffness_entry, oracle_matrix
from .rule_solver import (
    ResidualSystem,
    RuleSolverError,
    WeightedRule,
    cubic_mass_rule,
    cubic_stiffness_rule,
    gaussian_rule,
    newton_cotes_weighted_rule,
    quadratic_mass_rule,
    quadratic_stiffness_rule,
    solve_residual_system,
)
from .spline_core import CardinalPatch, KnotVector, SplineSpace

__all__ = [
    "AffineMap", "CardinalPatch", "EvalCounter", "KnotVector", "ResidualSystem", "RuleSet",
    "RuleSolverError", "SplineSpace", "TensorSpace", "WeightedRule", "assemble", "assemble_load",
    "assemble_mass_rowwise", "assemble_standard_gauss", "assemble_stiffness_rowwise", "count_ratio",
    "cubic_mass_rule", "cubic_stiffness_rule", "exact_mass_entry", "exact_moment_vector",
    "exact_stiffness_entry", "gaussian_rule", "newton_cotes_weighted_rule", "oracle_matrix",
    "quadratic_mass_rule", "quadratic_stiffness_rule", "solve_residual_system",
]
