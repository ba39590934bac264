"""sflab: lambda-calculus and System F semantics workbench."""

from sflab.terms import (
    App,
    Lam,
    ReductionKind,
    Term,
    Var,
    parse,
    render,
)
from sflab.types import Arrow, Forall, TVar, Ty, parse_type, render_type

__all__ = [
    "Term",
    "Var",
    "Lam",
    "App",
    "ReductionKind",
    "parse",
    "render",
    "Ty",
    "TVar",
    "Arrow",
    "Forall",
    "parse_type",
    "render_type",
]
