"""JSONL record parsing, name normalization and additive ingestion.

Each input line looks like::

    {"name": "Albert Einstein", "text": "...",
     "entities": [["Albert Einstein", "Person"], {"mention": "Germany", "label": "Country"}],
     "relations": [{"head": "Albert Einstein", "rel_type": "IS_CITIZEN_OF", "tail": "Germany"}]}

Entities may be ``[mention, label]`` pairs or objects (``mention``/``label``,
optionally ``qid`` and ``properties``). Relations may be ``[head, type, tail]``
triples or objects (``head``/``rel_type``/``tail``, optionally ``properties``).
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

from .errors import IdentityConflict, InvalidName, SchemaViolation
from .schema import validate_label, validate_relation
from .store import PropertyGraph, Scalar

log = logging.getLogger(__name__)

MAX_LINE_BYTES = 64 * 1024

_PARENS = re.compile(r"\([^()]*\)")
_SPACE = re.compile(r"\s+")


def normalize_name(raw: str) -> str:
    """Strip parenthetical descriptors, collapse whitespace, NFC-compose.

    Case is preserved; identity matching casefolds separately.
    """
    text = unicodedata.normalize("NFC", str(raw))
    prev = None
    while prev != text:  # innermost first, so nested parentheses go too
        prev = text
        text = _PARENS.sub(" ", text)
    text = _SPACE.sub(" ", text).strip()
    if not text:
        raise InvalidName(f"name {raw!r} is empty after normalization")
    return text


def match_key(name: str) -> str:
    return normalize_name(name).casefold()


class RecordRejected(ValueError):
    """A JSONL line that cannot be ingested. ``kind`` names the failed check."""

    KINDS = ("parse", "schema", "dangling", "invalid_name", "oversize")

    def __init__(self, kind: str, reason: str):
        self.kind = kind
        self.reason = reason
        super().__init__(f"{kind}: {reason}")


@dataclass
class EntityMention:
    mention: str
    label: str
    qid: str | None = None
    properties: dict[str, Scalar] = field(default_factory=dict)


@dataclass
class RelationMention:
    head: str
    rel_type: str
    tail: str
    properties: dict[str, Scalar] = field(default_factory=dict)


@dataclass
class EntityRecord:
    name: str
    text: str
    entities: list[EntityMention]
    relations: list[RelationMention]


def _scalar_map(value: Any, where: str) -> dict[str, Scalar]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise RecordRejected("parse", f"{where} must be an object")
    for k, v in value.items():
        if v is not None and not isinstance(v, (str, int, float, bool)):
            raise RecordRejected("parse", f"{where}.{k} is not a scalar")
    return dict(value)


def _entity(raw: Any, i: int) -> EntityMention:
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        mention, label = raw
        qid, props = None, {}
    elif isinstance(raw, dict):
        mention = raw.get("mention", raw.get("name"))
        label = raw.get("label", raw.get("type"))
        qid = raw.get("qid")
        props = _scalar_map(raw.get("properties"), f"entities[{i}].properties")
    else:
        raise RecordRejected("parse", f"entities[{i}] must be a [mention, label] pair or object")
    if not isinstance(mention, str) or not isinstance(label, str):
        raise RecordRejected("parse", f"entities[{i}] needs string mention and label")
    if qid is not None and not isinstance(qid, str):
        raise RecordRejected("parse", f"entities[{i}].qid must be a string")
    try:
        validate_label(label)
    except SchemaViolation:
        raise RecordRejected("schema", f"unknown entity label {label!r}") from None
    try:
        mention = normalize_name(mention)
    except InvalidName as exc:
        raise RecordRejected("invalid_name", str(exc)) from None
    return EntityMention(mention, label, qid, props)


def _relation(raw: Any, i: int) -> RelationMention:
    if isinstance(raw, (list, tuple)) and len(raw) == 3:
        head, rel, tail = raw
        props = {}
    elif isinstance(raw, dict):
        head = raw.get("head")
        rel = raw.get("rel_type", raw.get("relation", raw.get("type")))
        tail = raw.get("tail")
        props = _scalar_map(raw.get("properties"), f"relations[{i}].properties")
    else:
        raise RecordRejected("parse", f"relations[{i}] must be a [head, type, tail] triple or object")
    if not all(isinstance(x, str) for x in (head, rel, tail)):
        raise RecordRejected("parse", f"relations[{i}] needs string head, rel_type and tail")
    try:
        validate_relation(rel)
    except SchemaViolation:
        raise RecordRejected("schema", f"unknown relation type {rel!r}") from None
    try:
        head, tail = normalize_name(head), normalize_name(tail)
    except InvalidName as exc:
        raise RecordRejected("invalid_name", str(exc)) from None
    return RelationMention(head, rel, tail, props)


def parse_record(line: str) -> EntityRecord:
    """Parse and schema-check one JSONL line; raise RecordRejected on the first problem."""
    if len(line.encode("utf-8")) > MAX_LINE_BYTES:
        raise RecordRejected("oversize", f"line exceeds {MAX_LINE_BYTES} bytes")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordRejected("parse", f"invalid JSON: {exc.msg} at column {exc.colno}") from None
    if not isinstance(obj, dict):
        raise RecordRejected("parse", "record must be a JSON object")
    missing = [k for k in ("name", "entities", "relations") if k not in obj]
    if missing:
        raise RecordRejected("parse", f"missing field(s) {missing}")
    name, text = obj["name"], obj.get("text", "")
    if not isinstance(name, str) or not isinstance(text, str):
        raise RecordRejected("parse", "name and text must be strings")
    if not isinstance(obj["entities"], list) or not isinstance(obj["relations"], list):
        raise RecordRejected("parse", "entities and relations must be arrays")
    try:
        name = normalize_name(name)
    except InvalidName as exc:
        raise RecordRejected("invalid_name", f"subject: {exc}") from None

    entities = [_entity(e, i) for i, e in enumerate(obj["entities"])]
    relations = [_relation(r, i) for i, r in enumerate(obj["relations"])]

    known = {e.mention.casefold() for e in entities} | {name.casefold()}
    for i, rel in enumerate(relations):
        for end in (rel.head, rel.tail):
            if end.casefold() not in known:
                raise RecordRejected("dangling", f"relations[{i}] endpoint {end!r} is not a listed entity")
    return EntityRecord(name, text, entities, relations)


@dataclass
class IngestReport:
    records_ok: int = 0
    records_rejected: int = 0
    rejections: list[dict[str, Any]] = field(default_factory=list)
    nodes_created: int = 0
    nodes_updated: int = 0
    edges_created: int = 0
    edges_skipped_duplicate: int = 0
    # relations whose endpoint could not be bound to a node (an unlisted
    # subject, or an endpoint lost to an identity conflict)
    relations_unresolved: int = 0
    identity_conflicts: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)

    def format_text(self) -> str:
        lines = [
            f"records ok:               {self.records_ok}",
            f"records rejected:         {self.records_rejected}",
            f"nodes created:            {self.nodes_created}",
            f"nodes updated:            {self.nodes_updated}",
            f"edges created:            {self.edges_created}",
            f"edges skipped (dup):      {self.edges_skipped_duplicate}",
            f"relations unresolved:     {self.relations_unresolved}",
            f"identity conflicts:       {len(self.identity_conflicts)}",
        ]
        for rej in self.rejections[:20]:
            lines.append(f"  line {rej['line']}: {rej['kind']}: {rej['reason']}")
        if len(self.rejections) > 20:
            lines.append(f"  ... {len(self.rejections) - 20} more rejections")
        for c in self.identity_conflicts[:20]:
            lines.append(f"  line {c['line']}: {c['message']}")
        return "\n".join(lines) + "\n"


class IngestError(Exception):
    """Raised in strict mode on the first rejected record or identity conflict."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _apply_record(
    record: EntityRecord, store: PropertyGraph, report: IngestReport, lineno: int,
    source: str, strict: bool,
) -> None:
    # resolve every mention first so an identity conflict leaves the rest usable
    bound: dict[str, list[tuple[str, int]]] = {}
    for ent in record.entities:
        props = dict(ent.properties)
        if ent.qid:
            props["qid"] = ent.qid
        props["source"] = source
        try:
            before = store.node_count
            nid = store.upsert_node(ent.label, ent.mention, props)
        except IdentityConflict as exc:
            if strict:
                raise IngestError(str(exc), lineno) from exc
            report.identity_conflicts.append({"line": lineno, "message": str(exc)})
            continue
        if store.node_count > before:
            report.nodes_created += 1
        else:
            report.nodes_updated += 1
        bound.setdefault(ent.mention.casefold(), []).append((ent.label, nid))

    # an unlisted subject is neither inserted nor looked up in the store: binding
    # it to whatever already exists would make re-ingestion and record order
    # change the result, so relations through it count as unresolved
    schema = store.schema
    for rel in record.relations:
        heads = bound.get(rel.head.casefold())
        tails = bound.get(rel.tail.casefold())
        if not heads or not tails:
            report.relations_unresolved += 1
            continue
        src, dst = _pick_endpoints(schema, rel.rel_type, heads, tails)
        props = dict(rel.properties)
        props["source"] = source
        if store.upsert_edge(src, dst, rel.rel_type, props):
            report.edges_created += 1
        else:
            report.edges_skipped_duplicate += 1


def _pick_endpoints(schema, rel_type, heads, tails) -> tuple[int, int]:
    # same-name mentions under different labels: prefer the signature-compatible pair
    for h_label, h in heads:
        for t_label, t in tails:
            if schema.allows(rel_type, h_label, t_label):
                return h, t
    return heads[0][1], tails[0][1]


def ingest_stream(
    lines: Iterable[str],
    store: PropertyGraph,
    *,
    source: str = "enriched",
    strict: bool = False,
) -> IngestReport:
    """Validate and merge JSONL records into ``store``.

    Rejected records contribute nothing. In strict mode the first rejection
    or identity conflict raises IngestError.
    """
    report = IngestReport()
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        try:
            record = parse_record(line)
        except RecordRejected as exc:
            if strict:
                raise IngestError(str(exc), lineno) from exc
            report.records_rejected += 1
            report.rejections.append({"line": lineno, "kind": exc.kind, "reason": exc.reason})
            log.debug("line %d rejected: %s", lineno, exc)
            continue
        _apply_record(record, store, report, lineno, source, strict)
        report.records_ok += 1
    return report
