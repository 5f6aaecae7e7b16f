"""Exception hierarchy shared across nobelgraph modules."""

from __future__ import annotations


class NobelGraphError(Exception):
    """Base class for every error raised by this package."""


class SchemaViolation(NobelGraphError, ValueError):
    """A label or relation type outside the closed schema."""

    def __init__(self, token: str, kind: str = "name"):
        self.token = token
        self.kind = kind
        super().__init__(f"unknown {kind} {token!r}")


class InvalidName(NobelGraphError, ValueError):
    """An entity name that is empty after normalization."""


class ReferentialError(NobelGraphError, KeyError):
    """An edge endpoint that does not reference an existing node."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "dangling node reference"


class IdentityConflict(NobelGraphError):
    """The qid and the (label, name) key resolve to two different nodes."""

    def __init__(self, label: str, name: str, qid: str, by_qid: int, by_name: int):
        self.label = label
        self.name = name
        self.qid = qid
        self.by_qid = by_qid
        self.by_name = by_name
        super().__init__(
            f"identity conflict for {label}/{name}: qid {qid} -> node {by_qid}, "
            f"name -> node {by_name}"
        )


class SnapshotError(NobelGraphError):
    """Corrupt or truncated snapshot file."""

    def __init__(self, message: str, line: int, offset: int):
        self.line = line
        self.offset = offset
        super().__init__(f"line {line} (byte offset {offset}): {message}")
