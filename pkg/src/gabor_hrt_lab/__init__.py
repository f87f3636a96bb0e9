"""Numerical linear-independence lab for finite Gabor systems."""

from gabor_hrt_lab.expr import (
    ClassReport,
    Expr,
    ExprSyntaxError,
    TailConfig,
    classify,
    differentiate,
    evaluate,
    parse,
    to_source,
)

__all__ = [
    "ClassReport",
    "Expr",
    "ExprSyntaxError",
    "TailConfig",
    "classify",
    "differentiate",
    "evaluate",
    "parse",
    "to_source",
]

__version__ = "0.1.0"
