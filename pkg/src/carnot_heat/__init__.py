"""Desk-scale laboratory for heat flow on stratified Lie groups.

Exact symbolic layer (group laws, invariant vector fields, sublaplacians)
plus a numerical layer (grids, heat semigroup, fractional Sobolev norms,
mild solutions of semilinear heat equations).
"""

from .poly import Polynomial
from .groups import (
    GroupLaw,
    StrataShape,
    ValidationReport,
    compose,
    dilate,
    hom_norm,
    inverse,
    validate_group_law,
)
from .fields import SublaplacianSymbol, VectorField, bracket, derive_left_invariant_fields, hormander_rank, sublaplacian
from .catalog import GroupSpec, GroupSpecError, builtin, builtin_names, load_group, make_group_spec
from .groupdef import ParseDiagnostic, ParseResult, emit_group, parse_group

__all__ = [
    "Polynomial",
    "StrataShape",
    "GroupLaw",
    "ValidationReport",
    "compose",
    "inverse",
    "dilate",
    "hom_norm",
    "validate_group_law",
    "VectorField",
    "SublaplacianSymbol",
    "bracket",
    "derive_left_invariant_fields",
    "hormander_rank",
    "sublaplacian",
    "GroupSpec",
    "GroupSpecError",
    "builtin",
    "builtin_names",
    "load_group",
    "make_group_spec",
    "ParseDiagnostic",
    "ParseResult",
    "parse_group",
    "emit_group",
]
