"""Conditional symmetries of u_yz = f(y, z, u): determining systems, families, reductions."""
from .detsys import (
    CaseTag,
    case1_from_T,
    case3_construct,
    classify_case,
    generate_determining_system,
    lie_invariance_check,
    verify_conditional_operator,
)
from .dsl import parse, to_text
from .expr import ZeroVerdict, is_zero, simplify
from .jet import ConditionalOperator, prolong
from .reduction import reduced_equation

__version__ = "0.1.0"

__all__ = [
    "CaseTag",
    "ConditionalOperator",
    "ZeroVerdict",
    "case1_from_T",
    "case3_construct",
    "classify_case",
    "generate_determining_system",
    "is_zero",
    "lie_invariance_check",
    "parse",
    "prolong",
    "reduced_equation",
    "simplify",
    "to_text",
    "verify_conditional_operator",
]
