"""Flatness-deviation functionals, their Euler-Lagrange residuals and a minimizer."""
from .displayed import FormComparison, compare_forms, displayed_residual
from .ids import EL_TABLE, Density, FunctionalId, Gauge, Variable
from .minimize import (
    FamilySpec,
    MinimizeOptions,
    MinimizeResult,
    family_functional,
    formal_inverse_hessian_sample,
    minimize_deviation,
    second_difference,
)
from .oracle import (
    OracleMatch,
    density,
    el_oracle_match,
    functional,
    gateaux_derivative,
    random_bumps,
    relative_mismatch,
    residual_pairing,
)
from .quadrature import BumpPerturbation, GridQuadrature
from .residuals import einstein_constraint_residual, el_residual

__all__ = [
    "EL_TABLE",
    "BumpPerturbation",
    "Density",
    "FamilySpec",
    "FormComparison",
    "MinimizeOptions",
    "MinimizeResult",
    "compare_forms",
    "displayed_residual",
    "family_functional",
    "formal_inverse_hessian_sample",
    "minimize_deviation",
    "second_difference",
    "FunctionalId",
    "Gauge",
    "GridQuadrature",
    "OracleMatch",
    "Variable",
    "density",
    "einstein_constraint_residual",
    "el_oracle_match",
    "el_residual",
    "functional",
    "gateaux_derivative",
    "random_bumps",
    "relative_mismatch",
    "residual_pairing",
]
