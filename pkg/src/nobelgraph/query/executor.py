"""Backtracking pattern matcher over a PropertyGraph.

Plan: per MATCH clause, seed on the most selective unbound node pattern,
then expand along relationship patterns in pattern order. Later clauses
join on variables bound earlier. WHERE conditions run as soon as all of
their variables are bound. Matching is homomorphic: distinct variables may
bind the same node.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

from ..store import Edge, PropertyGraph
from .ast import (
    Comparison,
    CountExpr,
    Literal,
    NodePattern,
    PropertyRef,
    Query,
    RelPattern,
    VarRef,
    render_node,
    render_rel,
)


@dataclass(frozen=True, order=True)
class NodeValue:
    name: str
    label: str
    id: int

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class EdgeValue:
    rel_type: str
    src: int
    dst: int

    def __str__(self) -> str:
        return self.rel_type


_RANK = {bool: 0, int: 1, float: 1, str: 2, NodeValue: 3, EdgeValue: 4}


def sort_key(value: Any) -> tuple:
    """Total order across mixed result types; nulls sort last."""
    if value is None:
        return (9, 0)
    return (_RANK.get(type(value), 5), value)


def json_value(value: Any) -> Any:
    if isinstance(value, NodeValue):
        return {"id": value.id, "label": value.label, "name": value.name}
    if isinstance(value, EdgeValue):
        return {"type": value.rel_type, "src": value.src, "dst": value.dst}
    return value


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def values(self) -> list[Any]:
        """Every cell, row-major."""
        return [v for row in self.rows for v in row]

    def format_table(self) -> str:
        cells = [[_cell(v) for v in row] for row in self.rows]
        widths = [len(c) for c in self.columns]
        for row in cells:
            widths = [max(w, len(c)) for w, c in zip(widths, row)]
        line = " | ".join(c.ljust(w) for c, w in zip(self.columns, widths))
        out = [line, "-+-".join("-" * w for w in widths)]
        out += [" | ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
        out.append(f"({self.row_count} row{'s' if self.row_count != 1 else ''})")
        return "\n".join(out) + "\n"

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(dict(zip(self.columns, map(json_value, row))), ensure_ascii=False) + "\n"
            for row in self.rows
        )


def _cell(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# -- planning ----------------------------------------------------------------


@dataclass
class _NodeSpec:
    var: str
    labels: set[str] = field(default_factory=set)
    props: dict[str, list[Any]] = field(default_factory=dict)


@dataclass
class _RelSpec:
    var: str | None
    src: str
    dst: str
    rel_type: str | None
    direction: str  # "out" (src -> dst) or "both"
    props: tuple
    text: str


@dataclass
class Step:
    kind: str  # "seed", "expand", "check", "join"
    var: str | None = None
    rel: _RelSpec | None = None
    frm: str | None = None
    estimate: int | None = None
    note: str = ""
    filters: list[Comparison] = field(default_factory=list)


@dataclass
class Plan:
    nodes: dict[str, _NodeSpec]
    steps: list[Step]
    prefilters: list[Comparison]


def _vars_of(c: Comparison) -> set[str]:
    return {o.var for o in (c.left, c.right) if isinstance(o, (VarRef, PropertyRef))}


def _estimate(spec: _NodeSpec, store: PropertyGraph | None) -> int | None:
    if store is None:
        return None
    if len(spec.labels) > 1:
        return 0
    label = next(iter(spec.labels), None)
    names = spec.props.get("name") or spec.props.get("canonical_name")
    if label is not None and names:
        return 1
    return store.label_count(label) if label is not None else store.node_count


def plan(q: Query, store: PropertyGraph | None = None) -> Plan:
    nodes: dict[str, _NodeSpec] = {}
    clauses: list[tuple[list[str], list[_RelSpec]]] = []
    anon = 0

    def node_var(n: NodePattern) -> str:
        nonlocal anon
        var = n.var
        if var is None:
            var = f" n{anon}"  # a space never occurs in a parsed identifier
            anon += 1
        spec = nodes.setdefault(var, _NodeSpec(var))
        if n.label:
            spec.labels.add(n.label)
        for k, v in n.props:
            spec.props.setdefault(k, []).append(v)
        return var

    for m in q.matches:
        cvars: list[str] = []
        crels: list[_RelSpec] = []
        for p in m.patterns:
            pvars = [node_var(n) for n in p.nodes]
            for v in pvars:
                if v not in cvars:
                    cvars.append(v)
            for k, r in enumerate(p.rels):
                a, b = pvars[k], pvars[k + 1]
                if r.direction == "in":
                    a, b = b, a
                text = render_node(p.nodes[k]) + render_rel(r) + render_node(p.nodes[k + 1])
                crels.append(_RelSpec(r.var, a, b, r.rel_type,
                                      "both" if r.direction == "both" else "out", r.props, text))
        clauses.append((cvars, crels))

    steps: list[Step] = []
    bound: set[str] = set()
    for ci, (cvars, crels) in enumerate(clauses):
        shared = [v for v in cvars if v in bound]
        if ci > 0:
            steps.append(Step("join", note=f"MATCH #{ci + 1} on "
                              + (", ".join(v.strip() for v in shared) if shared else "nothing (cartesian)")))
        pending = list(crels)
        while True:
            nxt = next((r for r in pending if r.src in bound or r.dst in bound), None)
            if nxt is not None:
                pending.remove(nxt)
                if nxt.src in bound and nxt.dst in bound:
                    steps.append(Step("check", rel=nxt))
                else:
                    frm, to = (nxt.src, nxt.dst) if nxt.src in bound else (nxt.dst, nxt.src)
                    steps.append(Step("expand", var=to, rel=nxt, frm=frm,
                                      estimate=_estimate(nodes[to], store)))
                    bound.add(to)
                continue
            unbound = [v for v in cvars if v not in bound]
            if pending:
                unbound = [v for v in unbound
                           if any(v in (r.src, r.dst) for r in pending)] or unbound
            if not unbound:
                break
            est = {v: _estimate(nodes[v], store) for v in unbound}
            seed = min(unbound, key=lambda v: (est[v] if est[v] is not None else 0,
                                               -len(nodes[v].props), cvars.index(v)))
            steps.append(Step("seed", var=seed, estimate=est[seed]))
            bound.add(seed)

    # attach each WHERE condition to the first step after which it can run
    prefilters: list[Comparison] = []
    seen: set[str] = set()
    remaining = list(q.where)
    for c in list(remaining):
        if not _vars_of(c):
            prefilters.append(c)
            remaining.remove(c)
    for step in steps:
        if step.var:
            seen.add(step.var)
        if step.rel is not None and step.rel.var:
            seen.add(step.rel.var)
        for c in list(remaining):
            if _vars_of(c) <= seen:
                step.filters.append(c)
                remaining.remove(c)
    if remaining:  # only possible for a query that was never validated
        raise ValueError("WHERE references variables the plan never binds")
    return Plan(nodes, steps, prefilters)


def explain(q: Query, store: PropertyGraph | None = None) -> str:
    """Readable plan: seed choice, expansions, joins, estimated candidate counts."""
    p = plan(q, store)
    lines = []
    for i, step in enumerate(p.steps, 1):
        est = "" if step.estimate is None else f" (est. {step.estimate} candidates)"
        if step.kind == "seed":
            spec = p.nodes[step.var]
            label = "".join(f":{lab}" for lab in sorted(spec.labels))
            keys = f" {{{', '.join(sorted(spec.props))}}}" if spec.props else ""
            lines.append(f"{i}. seed ({step.var.strip()}{label}{keys}){est}")
        elif step.kind == "expand":
            lines.append(f"{i}. expand {step.frm.strip()} -> {step.var.strip()} via {step.rel.text}{est}")
        elif step.kind == "check":
            lines.append(f"{i}. check {step.rel.text}")
        else:
            lines.append(f"{i}. join {step.note}")
        if step.filters:
            lines.append(f"   filter: {len(step.filters)} condition(s)")
    return "\n".join(lines) + "\n"


# -- evaluation --------------------------------------------------------------


def _prop(value: Any, key: str, store: PropertyGraph) -> Any:
    if isinstance(value, int) and not isinstance(value, bool):
        props = store.node(value).properties
        if key == "name" and "name" not in props:
            return props["canonical_name"]
        return props.get(key)
    if isinstance(value, Edge):
        return value.properties.get(key)
    return None


def _eq(a: Any, b: Any) -> bool:
    if a is None or b is None:
        return False
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    if isinstance(a, str) != isinstance(b, str):
        return False
    return a == b


def compare(a: Any, op: str, b: Any) -> bool:
    """Comparison semantics shared with the brute-force checker: nulls never match."""
    if op == "=":
        return _eq(a, b)
    if op == "<>":
        if a is None or b is None:
            return False
        return not _eq(a, b)
    if op == "CONTAINS":
        return isinstance(a, str) and isinstance(b, str) and b in a
    nums = all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in (a, b))
    strs = isinstance(a, str) and isinstance(b, str)
    if not (nums or strs):
        return False
    return {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op]


def _operand(o, binding: dict, store: PropertyGraph) -> Any:
    if isinstance(o, Literal):
        return o.value
    value = binding[o.var]
    if isinstance(o, PropertyRef):
        return _prop(value, o.prop, store)
    return ("edge", value.triple) if isinstance(value, Edge) else ("node", value)


def _passes(conds: Sequence[Comparison], binding: dict, store: PropertyGraph) -> bool:
    for c in conds:
        if not compare(_operand(c.left, binding, store), c.op, _operand(c.right, binding, store)):
            return False
    return True


def node_matches(store: PropertyGraph, node_id: int, labels: set[str], props: dict) -> bool:
    node = store.node(node_id)
    if labels and (len(labels) > 1 or node.label not in labels):
        return False
    for key, wanted in props.items():
        actual = _prop(node_id, key, store)
        if not all(_eq(actual, w) for w in wanted):
            return False
    return True


def _edge_props_ok(edge: Edge, props: tuple) -> bool:
    return all(_eq(edge.properties.get(k), v) for k, v in props)


def _seed_candidates(spec: _NodeSpec, store: PropertyGraph) -> Iterator[int]:
    if len(spec.labels) > 1:
        return
    label = next(iter(spec.labels), None)
    names = spec.props.get("name") or spec.props.get("canonical_name")
    if label is not None and names and isinstance(names[0], str) and not store.has_name_property:
        # identity index; the caller still checks exact (case-sensitive) equality
        node = store.find(label, names[0])
        if node is not None:
            yield node.id
        return
    for node in store.nodes(label):
        yield node.id


def _edges_between(store: PropertyGraph, rel: _RelSpec, a: int, b: int) -> list[Edge]:
    out = []
    if rel.rel_type is not None:
        e = store.get_edge(a, b, rel.rel_type)
        if e is not None:
            out.append(e)
        if rel.direction == "both" and a != b:
            e = store.get_edge(b, a, rel.rel_type)
            if e is not None:
                out.append(e)
    else:
        out += [e for e in store.out_edges(a) if e.dst == b]
        if rel.direction == "both" and a != b:
            out += [e for e in store.out_edges(b) if e.dst == a]
    return [e for e in out if _edge_props_ok(e, rel.props)]


def _expand(store: PropertyGraph, rel: _RelSpec, frm_var: str, node: int) -> Iterator[tuple[Edge, int]]:
    forward = frm_var == rel.src
    if rel.direction == "both":
        for e in store.out_edges(node):
            if rel.rel_type is None or e.rel_type == rel.rel_type:
                yield e, e.dst
        for e in store.in_edges(node):
            if e.src == e.dst:
                continue  # self-loop already produced above
            if rel.rel_type is None or e.rel_type == rel.rel_type:
                yield e, e.src
    elif forward:
        for e in store.out_edges(node):
            if rel.rel_type is None or e.rel_type == rel.rel_type:
                yield e, e.dst
    else:
        for e in store.in_edges(node):
            if rel.rel_type is None or e.rel_type == rel.rel_type:
                yield e, e.src


def match_bindings(q: Query, store: PropertyGraph) -> Iterator[dict]:
    """Every variable binding satisfying the MATCH patterns and WHERE conditions."""
    p = plan(q, store)
    if not _passes(p.prefilters, {}, store):
        return
    steps = p.steps

    def bind_node(spec: _NodeSpec, node_id: int) -> bool:
        return node_matches(store, node_id, spec.labels, spec.props)

    def run(i: int, binding: dict) -> Iterator[dict]:
        if i == len(steps):
            yield dict(binding)
            return
        step = steps[i]
        if step.kind == "join":
            yield from run(i + 1, binding)
        elif step.kind == "seed":
            spec = p.nodes[step.var]
            for nid in _seed_candidates(spec, store):
                if bind_node(spec, nid):
                    binding[step.var] = nid
                    if _passes(step.filters, binding, store):
                        yield from run(i + 1, binding)
                    del binding[step.var]
        elif step.kind == "expand":
            rel = step.rel
            spec = p.nodes[step.var]
            for edge, other in _expand(store, rel, step.frm, binding[step.frm]):
                if not _edge_props_ok(edge, rel.props) or not bind_node(spec, other):
                    continue
                binding[step.var] = other
                if rel.var:
                    binding[rel.var] = edge
                if _passes(step.filters, binding, store):
                    yield from run(i + 1, binding)
                if rel.var:
                    del binding[rel.var]
                del binding[step.var]
        else:  # check
            rel = step.rel
            for edge in _edges_between(store, rel, binding[rel.src], binding[rel.dst]):
                if rel.var:
                    binding[rel.var] = edge
                if _passes(step.filters, binding, store):
                    yield from run(i + 1, binding)
                if rel.var:
                    del binding[rel.var]

    yield from run(0, {})


def _value(expr, binding: dict, store: PropertyGraph) -> Any:
    if isinstance(expr, PropertyRef):
        return _prop(binding[expr.var], expr.prop, store)
    value = binding[expr.var]
    if isinstance(value, Edge):
        return EdgeValue(value.rel_type, value.src, value.dst)
    node = store.node(value)
    return NodeValue(node.name, node.label, node.id)


def project(q: Query, bindings: Sequence[dict], store: PropertyGraph) -> ResultTable:
    """RETURN / DISTINCT / ORDER BY / LIMIT over raw bindings."""
    exprs = [p.expr for p in q.returns]
    counts = [i for i, e in enumerate(exprs) if isinstance(e, CountExpr)]
    if counts:
        keys = [i for i in range(len(exprs)) if i not in counts]
        groups: dict[tuple, list[dict]] = {}
        for b in bindings:
            groups.setdefault(tuple(_value(exprs[i], b, store) for i in keys), []).append(b)
        if not groups and not keys:
            groups[()] = []
        rows = []
        for key, members in groups.items():
            row: list[Any] = [None] * len(exprs)
            for k, i in enumerate(keys):
                row[i] = key[k]
            for i in counts:
                e = exprs[i]
                if e.arg is None:
                    row[i] = len(members)
                else:
                    vals = [_value(e.arg, b, store) for b in members]
                    vals = [v for v in vals if v is not None]
                    row[i] = len(set(vals)) if e.distinct else len(vals)
            rows.append(tuple(row))
    else:
        rows = [tuple(_value(e, b, store) for e in exprs) for b in bindings]
    if q.distinct:
        rows = list(dict.fromkeys(rows))
    rows.sort(key=lambda r: tuple(sort_key(v) for v in r))
    if q.order_by:
        index = {p.column: i for i, p in enumerate(q.returns)}
        for i, p in enumerate(q.returns):
            index.setdefault(p.expr, i)
        for key in reversed(q.order_by):
            col = index.get(key.expr.var) if isinstance(key.expr, VarRef) and key.expr.var in index \
                else index[key.expr]
            rows.sort(key=lambda r, c=col: sort_key(r[c]), reverse=key.descending)
    if q.limit is not None:
        rows = rows[: q.limit]
    return ResultTable(q.columns, rows)


def execute(q: Query, store: PropertyGraph) -> ResultTable:
    """Run a parsed query. Rows are sorted by all columns unless ORDER BY is given."""
    return project(q, list(match_bindings(q, store)), store)
