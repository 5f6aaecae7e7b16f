"""Laureate knowledge graph: storage, ingestion, network analysis and QA."""

__version__ = "0.1.0"

from .errors import (
    IdentityConflict,
    InvalidName,
    NobelGraphError,
    ReferentialError,
    SchemaViolation,
    SnapshotError,
)
from .ingest import IngestReport, ingest_stream, normalize_name, parse_record
from .schema import default_schema, load_schema, render_schema_text
from .store import PropertyGraph, snapshot_read, snapshot_write, stats

__all__ = [
    "IdentityConflict",
    "IngestReport",
    "InvalidName",
    "NobelGraphError",
    "PropertyGraph",
    "ReferentialError",
    "SchemaViolation",
    "SnapshotError",
    "default_schema",
    "ingest_stream",
    "load_schema",
    "normalize_name",
    "parse_record",
    "render_schema_text",
    "snapshot_read",
    "snapshot_write",
    "stats",
]
