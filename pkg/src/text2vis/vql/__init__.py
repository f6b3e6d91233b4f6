"""VQL grammar, AST, parser/unparser, canonical form, and matching."""

from .ast import (
    AggFn,
    BinSpec,
    BinUnit,
    ChartType,
    ColumnRef,
    ComponentReport,
    DataMatch,
    Join,
    OrderSpec,
    Predicate,
    SemanticError,
    VqlQuery,
    GROUPED_CHARTS,
)
from .canonical import canonicalize, component_match, tree_match
from .parser import Token, VqlSyntaxError, parse_vql, tokenize, unparse_vql

__all__ = [
    "AggFn", "BinSpec", "BinUnit", "ChartType", "ColumnRef", "ComponentReport",
    "DataMatch", "Join", "OrderSpec", "Predicate", "SemanticError", "VqlQuery",
    "GROUPED_CHARTS", "canonicalize", "component_match", "tree_match",
    "Token", "VqlSyntaxError", "parse_vql", "tokenize", "unparse_vql",
]
