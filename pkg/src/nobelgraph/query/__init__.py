"""Read-only Cypher subset: parse, plan, execute."""

from .ast import Query, render, render_literal
from .executor import EdgeValue, NodeValue, ResultTable, execute, explain, match_bindings
from .parser import (
    DEFAULT_ALIASES,
    CypherSemanticError,
    CypherSyntaxError,
    QueryError,
    UnboundVariableError,
    UnknownKeywordError,
    parse,
)


def run(text: str, store) -> ResultTable:
    """Parse and execute in one call."""
    return execute(parse(text), store)


__all__ = [
    "DEFAULT_ALIASES",
    "CypherSemanticError",
    "CypherSyntaxError",
    "EdgeValue",
    "NodeValue",
    "Query",
    "QueryError",
    "ResultTable",
    "UnboundVariableError",
    "UnknownKeywordError",
    "execute",
    "explain",
    "match_bindings",
    "parse",
    "render",
    "render_literal",
    "run",
]
