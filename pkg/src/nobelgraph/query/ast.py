"""Syntax tree for the supported Cypher subset, plus a canonical renderer."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Union

Scalar = Union[str, int, float, bool, None]


@dataclass(frozen=True)
class Literal:
    value: Scalar


@dataclass(frozen=True)
class VarRef:
    var: str


@dataclass(frozen=True)
class PropertyRef:
    var: str
    prop: str


@dataclass(frozen=True)
class CountExpr:
    """``count(*)`` when ``arg`` is None."""

    arg: VarRef | PropertyRef | None
    distinct: bool = False


Operand = Union[Literal, VarRef, PropertyRef]
Expr = Union[VarRef, PropertyRef, CountExpr]


@dataclass(frozen=True)
class NodePattern:
    var: str | None = None
    label: str | None = None
    props: tuple[tuple[str, Scalar], ...] = ()


@dataclass(frozen=True)
class RelPattern:
    var: str | None = None
    rel_type: str | None = None
    direction: str = "out"  # "out" (->), "in" (<-) or "both" (-)
    props: tuple[tuple[str, Scalar], ...] = ()


@dataclass(frozen=True)
class PathPattern:
    nodes: tuple[NodePattern, ...]
    rels: tuple[RelPattern, ...] = ()

    @property
    def hops(self) -> int:
        return len(self.rels)


@dataclass(frozen=True)
class MatchClause:
    patterns: tuple[PathPattern, ...]


@dataclass(frozen=True)
class Comparison:
    left: Operand
    op: str  # =, <>, <, >, <=, >=, CONTAINS
    right: Operand


@dataclass(frozen=True)
class Projection:
    expr: Expr
    alias: str | None = None

    @property
    def column(self) -> str:
        return self.alias or render_expr(self.expr)


@dataclass(frozen=True)
class SortKey:
    expr: Expr
    descending: bool = False


@dataclass(frozen=True)
class Query:
    matches: tuple[MatchClause, ...]
    where: tuple[Comparison, ...] = ()
    returns: tuple[Projection, ...] = ()
    distinct: bool = False
    order_by: tuple[SortKey, ...] = ()
    limit: int | None = None

    @property
    def columns(self) -> list[str]:
        return [p.column for p in self.returns]

    @property
    def hop_count(self) -> int:
        return sum(p.hops for m in self.matches for p in m.patterns)

    def node_vars(self) -> list[str]:
        out: list[str] = []
        for m in self.matches:
            for p in m.patterns:
                for n in p.nodes:
                    if n.var and n.var not in out:
                        out.append(n.var)
        return out

    def rel_vars(self) -> list[str]:
        out: list[str] = []
        for m in self.matches:
            for p in m.patterns:
                for r in p.rels:
                    if r.var and r.var not in out:
                        out.append(r.var)
        return out


# -- rendering ---------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def render_ident(name: str) -> str:
    from .parser import KEYWORDS

    if _IDENT.match(name) and name.upper() not in KEYWORDS:
        return name
    return "`" + name.replace("`", "``") + "`"


def render_literal(value: Scalar) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_props(props: tuple[tuple[str, Scalar], ...]) -> str:
    if not props:
        return ""
    inner = ", ".join(f"{render_ident(k)}: {render_literal(v)}" for k, v in props)
    return " {" + inner + "}"


def render_node(n: NodePattern) -> str:
    text = render_ident(n.var) if n.var else ""
    if n.label:
        text += ":" + render_ident(n.label)
    return "(" + (text + _render_props(n.props)).strip() + ")"


def render_rel(r: RelPattern) -> str:
    body = render_ident(r.var) if r.var else ""
    if r.rel_type:
        body += ":" + render_ident(r.rel_type)
    body = (body + _render_props(r.props)).strip()
    left = "<-" if r.direction == "in" else "-"
    right = "->" if r.direction == "out" else "-"
    return f"{left}[{body}]{right}"


def render_pattern(p: PathPattern) -> str:
    parts = [render_node(p.nodes[0])]
    for rel, node in zip(p.rels, p.nodes[1:]):
        parts.append(render_rel(rel))
        parts.append(render_node(node))
    return "".join(parts)


def render_operand(o: Operand) -> str:
    if isinstance(o, Literal):
        return render_literal(o.value)
    return render_expr(o)


def render_expr(e: Expr) -> str:
    if isinstance(e, VarRef):
        return render_ident(e.var)
    if isinstance(e, PropertyRef):
        return f"{render_ident(e.var)}.{render_ident(e.prop)}"
    if isinstance(e, CountExpr):
        if e.arg is None:
            return "count(*)"
        return f"count({'DISTINCT ' if e.distinct else ''}{render_expr(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def render(q: Query) -> str:
    """Canonical query text; ``parse(render(q)) == q``."""
    lines = [
        "MATCH " + ", ".join(render_pattern(p) for p in m.patterns) for m in q.matches
    ]
    if q.where:
        lines.append(
            "WHERE " + " AND ".join(
                f"{render_operand(c.left)} {c.op} {render_operand(c.right)}" for c in q.where
            )
        )
    items = []
    for p in q.returns:
        text = render_expr(p.expr)
        if p.alias:
            text += f" AS {render_ident(p.alias)}"
        items.append(text)
    lines.append("RETURN " + ("DISTINCT " if q.distinct else "") + ", ".join(items))
    if q.order_by:
        lines.append(
            "ORDER BY " + ", ".join(
                render_expr(k.expr) + (" DESC" if k.descending else "") for k in q.order_by
            )
        )
    if q.limit is not None:
        lines.append(f"LIMIT {q.limit}")
    return "\n".join(lines)
