"""Closed entity/relation schema and its text renderings."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import SchemaViolation


class EntityLabel(str, Enum):
    PERSON = "Person"
    PERSON_NON_LAUREATE = "Person_Non_Laureate"
    ORGANIZATION = "Organization"
    POSITION = "Position"
    OCCUPATION = "Occupation"
    FIELD = "Field"
    COUNTRY = "Country"
    LOCATION = "Location"
    AWARD = "Award"
    NOTABLE_WORK = "Notable_Work"
    EVENT = "Event"

    def __str__(self) -> str:
        return self.value


class RelationType(str, Enum):
    RECEIVED = "RECEIVED"
    WORKS_AS = "WORKS_AS"
    WORKS_IN_FIELD = "WORKS_IN_FIELD"
    EMPLOYED_BY = "EMPLOYED_BY"
    EDUCATED_AT = "EDUCATED_AT"
    IS_CITIZEN_OF = "IS_CITIZEN_OF"
    HOLDS_POSITION = "HOLDS_POSITION"
    FOUNDED = "FOUNDED"
    CO_FOUNDED = "CO_FOUNDED"
    CO_DISCOVERED_WITH = "CO_DISCOVERED_WITH"
    PARTICIPATED_IN = "PARTICIPATED_IN"
    IS_SPOUSE_OF = "IS_SPOUSE_OF"
    DEVELOPED = "DEVELOPED"

    def __str__(self) -> str:
        return self.value


ENTITY_LABELS: tuple[str, ...] = tuple(e.value for e in EntityLabel)
RELATION_TYPES: tuple[str, ...] = tuple(r.value for r in RelationType)

Signature = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class SchemaRegistry:
    """The 11 entity labels, 13 relation types and optional domain/range pairs.

    ``relation_signatures`` maps each relation type to the allowed
    ``(src_label, dst_label)`` pairs. ``None`` disables signatures, in which
    case renderings list names only.
    """

    entity_labels: tuple[str, ...] = ENTITY_LABELS
    relation_types: tuple[str, ...] = RELATION_TYPES
    relation_signatures: Mapping[str, Signature] | None = None

    def __post_init__(self):
        if tuple(sorted(self.entity_labels)) != tuple(sorted(ENTITY_LABELS)):
            raise ValueError("registry must declare exactly the 11 schema entity labels")
        if tuple(sorted(self.relation_types)) != tuple(sorted(RELATION_TYPES)):
            raise ValueError("registry must declare exactly the 13 schema relation types")
        if self.relation_signatures is not None:
            missing = set(self.relation_types) - set(self.relation_signatures)
            if missing:
                raise ValueError(f"relation signatures missing for {sorted(missing)}")
            for rel, pairs in self.relation_signatures.items():
                validate(rel)
                for src, dst in pairs:
                    validate(src)
                    validate(dst)

    def is_entity(self, name: str) -> bool:
        return name in self.entity_labels

    def is_relation(self, name: str) -> bool:
        return name in self.relation_types

    def allows(self, rel_type: str, src_label: str, dst_label: str) -> bool:
        """True when the signature table permits the triple (always, if disabled)."""
        if self.relation_signatures is None:
            return True
        return (src_label, dst_label) in self.relation_signatures[rel_type]

    def without_signatures(self) -> SchemaRegistry:
        return SchemaRegistry(self.entity_labels, self.relation_types, None)


def validate(name: str) -> EntityLabel | RelationType:
    """Exact, case-sensitive membership test against the closed schema."""
    if name in ENTITY_LABELS:
        return EntityLabel(name)
    if name in RELATION_TYPES:
        return RelationType(name)
    raise SchemaViolation(str(name), "schema name")


def validate_label(name: str) -> EntityLabel:
    if name in ENTITY_LABELS:
        return EntityLabel(name)
    raise SchemaViolation(str(name), "entity label")


def validate_relation(name: str) -> RelationType:
    if name in RELATION_TYPES:
        return RelationType(name)
    raise SchemaViolation(str(name), "relation type")


def parse_schema_text(text: str) -> SchemaRegistry:
    """Parse ``ENTITY X`` / ``RELATION T A|B -> C`` declarations.

    A file without any signature clauses yields a registry with signatures
    disabled.
    """
    labels: list[str] = []
    rels: list[str] = []
    sigs: dict[str, list[tuple[str, str]]] = {}
    any_sig = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 2)
        kind = parts[0]
        if kind == "ENTITY" and len(parts) == 2:
            labels.append(validate_label(parts[1]).value)
        elif kind == "RELATION" and len(parts) >= 2:
            rel = validate_relation(parts[1]).value
            rels.append(rel)
            pairs = sigs.setdefault(rel, [])
            if len(parts) == 3:
                any_sig = True
                lhs, arrow, rhs = parts[2].partition("->")
                if not arrow:
                    raise ValueError(f"schema line {lineno}: expected '->' in {raw!r}")
                srcs = [validate_label(s.strip()).value for s in lhs.split("|")]
                dsts = [validate_label(s.strip()).value for s in rhs.split("|")]
                pairs.extend((s, d) for s in srcs for d in dsts)
        else:
            raise ValueError(f"schema line {lineno}: cannot parse {raw!r}")
    signatures = {r: tuple(p) for r, p in sigs.items()} if any_sig else None
    return SchemaRegistry(tuple(labels), tuple(rels), signatures)


def load_schema(path: str | Path | None = None) -> SchemaRegistry:
    """Load a schema file; ``None`` loads the bundled default."""
    if path is None:
        text = resources.files("nobelgraph").joinpath("data/schema.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_schema_text(text)


_DEFAULT: SchemaRegistry | None = None


def default_schema() -> SchemaRegistry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_schema()
    return _DEFAULT


def render_schema_text(registry: SchemaRegistry | None = None) -> str:
    """Deterministic schema text for prompts: node types, relationship types, patterns."""
    registry = registry or default_schema()
    lines = ["Node types:"]
    lines += [f"  :{label}" for label in registry.entity_labels]
    if registry.relation_signatures is None:
        lines.append("Relationship types:")
        lines += [f"  :{rel}" for rel in registry.relation_types]
    else:
        # one line per relation when the pairs form a full product, so each
        # relation name is printed once
        lines.append("Relationship patterns:")
        for rel in registry.relation_types:
            pairs = registry.relation_signatures[rel]
            srcs = list(dict.fromkeys(s for s, _ in pairs))
            dsts = list(dict.fromkeys(d for _, d in pairs))
            if not pairs:
                lines.append(f"()-[:{rel}]->()")
            elif len(pairs) == len(set(pairs)) == len(srcs) * len(dsts):
                lines.append(f"(:{'|'.join(srcs)})-[:{rel}]->(:{'|'.join(dsts)})")
            else:
                lines += [f"(:{s})-[:{rel}]->(:{d})" for s, d in pairs]
    return "\n".join(lines) + "\n"
