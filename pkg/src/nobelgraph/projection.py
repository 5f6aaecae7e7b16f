"""Undirected weighted laureate/organization graph built from shared attributes.

The weight of a pair is the number of attribute categories in which the two
vertices' value sets intersect. Vertices are Person nodes plus Organization
nodes that received an award.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Hashable, Iterable, Sequence

from .store import Node, PropertyGraph

AttributeFn = Callable[[PropertyGraph, Node], "frozenset[Hashable]"]


@dataclass(frozen=True)
class Attribute:
    """A named category mapping a vertex to its set of values."""

    name: str
    extract: AttributeFn

    def __call__(self, store: PropertyGraph, node: Node) -> frozenset:
        return frozenset(self.extract(store, node))


def _targets(*rel_types: str) -> AttributeFn:
    def extract(store: PropertyGraph, node: Node) -> frozenset:
        return frozenset(e.dst for e in store.out_edges(node.id) if e.rel_type in rel_types)

    return extract


def _organization(store: PropertyGraph, node: Node) -> frozenset:
    values = set(_targets("EMPLOYED_BY", "EDUCATED_AT")(store, node))
    if node.label == "Organization":
        values.add(node.id)
    return frozenset(values)


_WS = re.compile(r"\s+")


def _statement(prop: str) -> AttributeFn:
    def extract(store: PropertyGraph, node: Node) -> frozenset:
        out = set()
        for e in store.out_edges(node.id):
            text = e.properties.get(prop) if e.rel_type == "RECEIVED" else None
            if isinstance(text, str) and text.strip():
                out.add(_WS.sub(" ", text).strip().casefold())
        return frozenset(out)

    return extract


def default_attributes(statement_property: str = "motivation") -> list[Attribute]:
    """Organization, Field, Country and award statement, in that order."""
    return [
        Attribute("organization", _organization),
        Attribute("field", _targets("WORKS_IN_FIELD")),
        Attribute("country", _targets("IS_CITIZEN_OF")),
        Attribute("award_statement", _statement(statement_property)),
    ]


ATTRIBUTE_NAMES = tuple(a.name for a in default_attributes())


def attributes_by_name(names: Iterable[str], statement_property: str = "motivation") -> list[Attribute]:
    table = {a.name: a for a in default_attributes(statement_property)}
    try:
        return [table[n] for n in names]
    except KeyError as exc:
        raise ValueError(f"unknown attribute {exc.args[0]!r}; choose from {sorted(table)}") from None


@dataclass
class ProjectionGraph:
    """Simple undirected graph on vertices ``0..n-1`` with integer weights.

    ``ids[i]`` is the store NodeId of vertex ``i``; ``edges`` maps ``(i, j)``
    with ``i < j`` to the weight.
    """

    ids: list[int]
    names: list[str]
    edges: dict[tuple[int, int], int]
    attributes: tuple[str, ...] = ()
    _adj: list[dict[int, int]] | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int] | tuple[int, int, int]],
        names: Sequence[str] | None = None,
        ids: Sequence[int] | None = None,
    ) -> ProjectionGraph:
        table: dict[tuple[int, int], int] = {}
        for e in edges:
            i, j = int(e[0]), int(e[1])
            w = int(e[2]) if len(e) > 2 else 1
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            table[(min(i, j), max(i, j))] = w
        return cls(
            ids=list(ids) if ids is not None else list(range(n)),
            names=list(names) if names is not None else [str(i) for i in range(n)],
            edges=table,
        )

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return len(self.edges)

    def weighted_adjacency(self) -> list[dict[int, int]]:
        if self._adj is None:
            adj: list[dict[int, int]] = [{} for _ in range(self.n)]
            for (i, j), w in self.edges.items():
                adj[i][j] = w
                adj[j][i] = w
            self._adj = adj
        return self._adj

    def adjacency(self) -> list[set[int]]:
        return [set(nbrs) for nbrs in self.weighted_adjacency()]

    def degree(self, i: int) -> int:
        return len(self.weighted_adjacency()[i])

    def weight(self, i: int, j: int) -> int:
        return self.edges.get((min(i, j), max(i, j)), 0)

    def subgraph(self, vertices: Iterable[int]) -> ProjectionGraph:
        keep = sorted(set(vertices))
        index = {v: k for k, v in enumerate(keep)}
        edges = {
            (index[i], index[j]): w
            for (i, j), w in self.edges.items()
            if i in index and j in index
        }
        return ProjectionGraph(
            [self.ids[v] for v in keep], [self.names[v] for v in keep], edges, self.attributes
        )

    def edge_list_text(self) -> str:
        """``name_i<TAB>name_j<TAB>w`` lines, names sorted within and lines sorted."""
        rows = []
        for (i, j), w in self.edges.items():
            a, b = sorted((self.names[i], self.names[j]))
            rows.append(f"{a}\t{b}\t{w}")
        rows.sort()
        return "".join(r + "\n" for r in rows)


def projection_vertices(store: PropertyGraph) -> list[Node]:
    """Person nodes and award-receiving Organization nodes, ordered by NodeId."""
    out = list(store.nodes("Person"))
    for org in store.nodes("Organization"):
        if any(e.rel_type == "RECEIVED" for e in store.out_edges(org.id)):
            out.append(org)
    out.sort(key=lambda n: n.id)
    return out


def build_projection(store: PropertyGraph, attributes: Sequence[Attribute] | None = None) -> ProjectionGraph:
    """Weighted projection via one inverted index per attribute category."""
    attributes = default_attributes() if attributes is None else list(attributes)
    if not attributes:
        raise ValueError("at least one attribute category is required")
    vertices = projection_vertices(store)
    shared: dict[tuple[int, int], set[int]] = {}
    for k, attr in enumerate(attributes):
        buckets: dict[Hashable, list[int]] = {}
        for idx, node in enumerate(vertices):
            for value in attr(store, node):
                buckets.setdefault(value, []).append(idx)
        for members in buckets.values():
            for i, j in combinations(members, 2):
                shared.setdefault((i, j), set()).add(k)
    edges = {pair: len(cats) for pair, cats in sorted(shared.items())}
    return ProjectionGraph(
        ids=[v.id for v in vertices],
        names=[v.name for v in vertices],
        edges=edges,
        attributes=tuple(a.name for a in attributes),
    )


def connected_components(g: ProjectionGraph) -> list[list[int]]:
    """Components as sorted vertex lists, largest first, ties by smallest NodeId."""
    adj = g.weighted_adjacency()
    seen = [False] * g.n
    comps = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        comp, queue = [start], deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: (-len(c), min(g.ids[v] for v in c)))
    return comps


def largest_component(g: ProjectionGraph) -> ProjectionGraph:
    if g.n == 0:
        return g.subgraph([])
    return g.subgraph(connected_components(g)[0])
