"""Vectorizing term-rewriting optimizer for FHE-style arithmetic circuits."""

from .ir import Expr, Program, parse, parse_expr, to_text
from .cost import CostTable, Weights, metrics, total_cost
from .semantics import equiv_prefix, evaluate

__version__ = "0.1.0"

__all__ = ["Expr", "Program", "parse", "parse_expr", "to_text", "CostTable", "Weights",
           "metrics", "total_cost", "equiv_prefix", "evaluate", "__version__"]
