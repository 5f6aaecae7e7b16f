"""In-memory property graph with identity constraints and text snapshots.

Nodes are keyed by ``(label, casefolded canonical_name)`` and, when present,
by ``qid``. Edges are unique per ``(src, dst, rel_type)``. Every mutation is
additive: nodes and edges are never deleted and existing property values are
never overwritten.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping
from urllib.parse import quote, unquote

from .errors import IdentityConflict, InvalidName, ReferentialError, SnapshotError
from .schema import SchemaRegistry, default_schema, validate_label, validate_relation

SNAPSHOT_HEADER = "#nobelgraph v1"
SOURCES = ("original", "enriched")

Scalar = str | int | float | bool | None


@dataclass(slots=True)
class Node:
    id: int
    label: str
    properties: dict[str, Scalar]
    # (property, rejected incoming value) pairs from merge conflicts
    provenance: list[tuple[str, Scalar]] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.properties["canonical_name"]  # type: ignore[return-value]

    @property
    def key(self) -> str:
        return f"{self.label}/{self.name}"


@dataclass(slots=True)
class Edge:
    src: int
    dst: int
    rel_type: str
    properties: dict[str, Scalar] = field(default_factory=dict)

    @property
    def triple(self) -> tuple[int, int, str]:
        return (self.src, self.dst, self.rel_type)


def identity_key(label: str, name: str) -> tuple[str, str]:
    return (label, name.casefold())


class PropertyGraph:
    """Multi-label node / typed edge store.

    Single writer. Readers may share an instance across threads as long as
    nobody mutates it.
    """

    def __init__(self, schema: SchemaRegistry | None = None):
        self.schema = schema or default_schema()
        self._nodes: dict[int, Node] = {}
        self._edges: dict[tuple[int, int, str], Edge] = {}
        self._by_key: dict[tuple[str, str], int] = {}
        self._by_qid: dict[str, int] = {}
        self._by_label: dict[str, list[int]] = {}
        self._out: dict[int, list[Edge]] = {}
        self._in: dict[int, list[Edge]] = {}
        self._next_id = 1
        # set once any node stores a literal "name" property, which then shadows
        # canonical_name in queries and disables identity-index seeding
        self.has_name_property = False

    # -- reads -------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def node(self, node_id: int) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise ReferentialError(f"no node with id {node_id}") from None

    def has_node(self, node_id: int) -> bool:
        return node_id in self._nodes

    def nodes(self, label: str | None = None) -> Iterator[Node]:
        if label is None:
            yield from self._nodes.values()
        else:
            for nid in self._by_label.get(label, ()):
                yield self._nodes[nid]

    def label_count(self, label: str) -> int:
        return len(self._by_label.get(label, ()))

    def edges(self) -> Iterator[Edge]:
        yield from self._edges.values()

    def out_edges(self, node_id: int) -> list[Edge]:
        return self._out.get(node_id, [])

    def in_edges(self, node_id: int) -> list[Edge]:
        return self._in.get(node_id, [])

    def get_edge(self, src: int, dst: int, rel_type: str) -> Edge | None:
        return self._edges.get((src, dst, rel_type))

    def find(self, label: str, name: str) -> Node | None:
        nid = self._by_key.get(identity_key(label, name))
        return None if nid is None else self._nodes[nid]

    def find_qid(self, qid: str) -> Node | None:
        nid = self._by_qid.get(qid)
        return None if nid is None else self._nodes[nid]

    def resolve(self, label: str, name: str, qid: str | None = None) -> int | None:
        """Node id an upsert with these identity fields would update, or None.

        Raises IdentityConflict when the qid and the name point at different nodes.
        """
        by_name = self._by_key.get(identity_key(label, name))
        by_qid = self._by_qid.get(qid) if qid else None
        if by_qid is not None and by_name is not None and by_qid != by_name:
            raise IdentityConflict(label, name, qid or "", by_qid, by_name)
        return by_qid if by_qid is not None else by_name

    # -- writes ------------------------------------------------------------

    def upsert_node(
        self, label: str, canonical_name: str, props: Mapping[str, Scalar] | None = None
    ) -> int:
        """Create a node or merge missing properties into the matching one.

        ``source`` defaults to ``"original"`` for new nodes.
        """
        label = validate_label(label).value
        if not canonical_name or not canonical_name.strip():
            raise InvalidName("canonical_name must be non-empty")
        props = dict(props or {})
        props.pop("canonical_name", None)
        if "name" in props:
            self.has_name_property = True
        qid = props.get("qid")
        if qid is not None:
            qid = str(qid)
            props["qid"] = qid
        existing = self.resolve(label, canonical_name, qid)
        if existing is not None:
            node = self._nodes[existing]
            for key, value in props.items():
                if key not in node.properties:
                    node.properties[key] = value
                    if key == "qid" and value not in self._by_qid:
                        self._by_qid[value] = node.id  # type: ignore[index]
                elif node.properties[key] != value and key != "source":
                    node.provenance.append((key, value))
            return existing

        props.setdefault("source", "original")
        if props["source"] not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {props['source']!r}")
        nid = self._next_id
        self._next_id += 1
        node = Node(nid, label, {"canonical_name": canonical_name, **props})
        self._nodes[nid] = node
        self._by_key[identity_key(label, canonical_name)] = nid
        if qid is not None:
            self._by_qid[qid] = nid
        self._by_label.setdefault(label, []).append(nid)
        return nid

    def upsert_edge(
        self, src: int, dst: int, rel_type: str, props: Mapping[str, Scalar] | None = None
    ) -> bool:
        """Insert the edge unless the ``(src, dst, rel_type)`` triple exists."""
        rel_type = validate_relation(rel_type).value
        for nid in (src, dst):
            if nid not in self._nodes:
                raise ReferentialError(f"no node with id {nid}")
        triple = (src, dst, rel_type)
        if triple in self._edges:
            return False
        props = dict(props or {})
        props.setdefault("source", "original")
        edge = Edge(src, dst, rel_type, props)
        self._edges[triple] = edge
        self._out.setdefault(src, []).append(edge)
        self._in.setdefault(dst, []).append(edge)
        return True

    # -- comparison --------------------------------------------------------

    def canonical(self) -> tuple[tuple, tuple]:
        """Id-free structural form used for graph equality."""
        nodes = tuple(
            sorted(
                (n.label, n.name, tuple(sorted(_prop_items(n.properties))), tuple(n.provenance))
                for n in self._nodes.values()
            )
        )
        edges = tuple(
            sorted(
                (
                    self._nodes[e.src].key,
                    e.rel_type,
                    self._nodes[e.dst].key,
                    tuple(sorted(_prop_items(e.properties))),
                )
                for e in self._edges.values()
            )
        )
        return nodes, edges

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PropertyGraph):
            return NotImplemented
        return self.canonical() == other.canonical()

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"PropertyGraph(nodes={self.node_count}, edges={self.edge_count})"


def _prop_items(props: Mapping[str, Scalar]) -> Iterable[tuple[str, str]]:
    # json text keeps 1 and True and "1" distinct while staying sortable
    return ((k, json.dumps(v)) for k, v in props.items())


# -- statistics --------------------------------------------------------------


def stats(graph: PropertyGraph) -> dict[str, Any]:
    nodes_by_label = Counter(n.label for n in graph.nodes())
    edges_by_type = Counter(e.rel_type for e in graph.edges())
    nodes_by_source = Counter(n.properties.get("source", "original") for n in graph.nodes())
    edges_by_source = Counter(e.properties.get("source", "original") for e in graph.edges())
    return {
        "nodes_total": graph.node_count,
        "edges_total": graph.edge_count,
        "nodes_by_label": {k: nodes_by_label[k] for k in sorted(nodes_by_label)},
        "edges_by_type": {k: edges_by_type[k] for k in sorted(edges_by_type)},
        "nodes_by_source": {s: nodes_by_source.get(s, 0) for s in SOURCES},
        "edges_by_source": {s: edges_by_source.get(s, 0) for s in SOURCES},
    }


def growth_rows(summary: Mapping[str, Any]) -> list[dict[str, Any]]:
    """Original / Added / Final / Growth rows for nodes and edges."""
    rows = []
    for metric, key in (("Nodes", "nodes_by_source"), ("Edges", "edges_by_source")):
        original = summary[key]["original"]
        added = summary[key]["enriched"]
        growth = 100.0 * added / original if original else None
        rows.append(
            {"metric": metric, "original": original, "added": added,
             "final": original + added, "growth_pct": growth}
        )
    return rows


def format_growth_table(summary: Mapping[str, Any]) -> str:
    header = f"{'Metric':<8}{'Original':>12}{'Added':>12}{'Final':>12}{'Growth (%)':>13}"
    lines = [header, "-" * len(header)]
    for row in growth_rows(summary):
        growth = "n/a" if row["growth_pct"] is None else f"+{row['growth_pct']:.1f}%"
        lines.append(
            f"{row['metric']:<8}{row['original']:>12,}{row['added']:>12,}"
            f"{row['final']:>12,}{growth:>13}"
        )
    return "\n".join(lines) + "\n"


# -- snapshots ---------------------------------------------------------------


def _encode_props(props: Mapping[str, Scalar]) -> str:
    return "&".join(
        f"{quote(k, safe='')}={quote(json.dumps(v, ensure_ascii=False), safe='')}"
        for k, v in sorted(props.items())
    )


def _decode_props(text: str) -> dict[str, Scalar]:
    props: dict[str, Scalar] = {}
    if not text:
        return props
    for part in text.split("&"):
        key, eq, value = part.partition("=")
        if not eq:
            raise ValueError(f"malformed property {part!r}")
        props[unquote(key)] = json.loads(unquote(value))
    return props


def dumps_snapshot(graph: PropertyGraph) -> str:
    lines = [SNAPSHOT_HEADER]
    for node in sorted(graph.nodes(), key=lambda n: (n.label, n.name)):
        props = {k: v for k, v in node.properties.items() if k != "canonical_name"}
        if node.provenance:
            props["@provenance"] = json.dumps(node.provenance, ensure_ascii=False)
        lines.append(f"N\t{node.label}\t{node.name}\t{_encode_props(props)}")
    edges = sorted(
        graph.edges(),
        key=lambda e: (graph.node(e.src).key, e.rel_type, graph.node(e.dst).key),
    )
    for edge in edges:
        lines.append(
            f"E\t{graph.node(edge.src).key}\t{edge.rel_type}\t{graph.node(edge.dst).key}"
            f"\t{_encode_props(edge.properties)}"
        )
    return "\n".join(lines) + "\n"


def loads_snapshot(text: str, schema: SchemaRegistry | None = None) -> PropertyGraph:
    """Parse snapshot text. Raises SnapshotError; never returns a partial graph."""
    graph = PropertyGraph(schema)
    if not text.endswith("\n"):
        lines_so_far = text.count("\n") + 1
        raise SnapshotError("truncated file (missing final newline)", lines_so_far,
                            len(text.encode("utf-8")))
    offset = 0
    seen_edges = False
    by_key: dict[str, int] = {}
    for lineno, line in enumerate(text.split("\n")[:-1], 1):
        line_offset = offset
        offset += len(line.encode("utf-8")) + 1
        if lineno == 1:
            if line != SNAPSHOT_HEADER:
                raise SnapshotError(f"expected header {SNAPSHOT_HEADER!r}", 1, 0)
            continue
        fields = line.split("\t")
        try:
            if fields[0] == "N" and len(fields) == 4:
                if seen_edges:
                    raise ValueError("node record after edge records")
                _, label, name, encoded = fields
                props = _decode_props(encoded)
                provenance = props.pop("@provenance", None)
                if f"{label}/{name}" in by_key:
                    raise ValueError(f"duplicate node {label}/{name}")
                before = graph.node_count
                nid = graph.upsert_node(label, name, props)
                if graph.node_count == before:
                    raise ValueError(f"node {label}/{name} collides with an earlier qid")
                if provenance:
                    graph.node(nid).provenance = [tuple(p) for p in json.loads(provenance)]
                by_key[f"{label}/{name}"] = nid
            elif fields[0] == "E" and len(fields) in (4, 5):
                seen_edges = True
                src_key, rel, dst_key = fields[1:4]
                props = _decode_props(fields[4]) if len(fields) == 5 else {}
                if src_key not in by_key or dst_key not in by_key:
                    raise ValueError("edge references an unknown node")
                if not graph.upsert_edge(by_key[src_key], by_key[dst_key], rel, props):
                    raise ValueError("duplicate edge")
            else:
                raise ValueError(f"unrecognised record {line[:40]!r}")
        except SnapshotError:
            raise
        except Exception as exc:
            raise SnapshotError(str(exc), lineno, line_offset) from exc
    if offset == 0:
        raise SnapshotError("empty file", 1, 0)
    return graph


def snapshot_write(graph: PropertyGraph, path: str | os.PathLike) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_snapshot(graph), encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def snapshot_read(path: str | os.PathLike, schema: SchemaRegistry | None = None) -> PropertyGraph:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise SnapshotError("invalid UTF-8", line, exc.start) from exc
    return loads_snapshot(text, schema)
