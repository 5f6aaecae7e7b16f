"""Tokenizer and recursive-descent parser for the Cypher subset.

Grammar (keywords case-insensitive)::

    query      := match+ [WHERE cond (AND cond)*] RETURN [DISTINCT] item (, item)*
                  [ORDER BY key (, key)*] [LIMIT int] [;]
    match      := MATCH path (, path)* [WHERE cond (AND cond)*]
    path       := node (rel node)*
    node       := ( [var] [:Label] [{k: lit, ...}] )
    rel        := -[...]-> | <-[...]- | -[...]- | --> | <-- | --
    cond       := operand (= | <> | < | > | <= | >= | CONTAINS) operand
    item       := (var | var.prop | count(* | [DISTINCT] var[.prop])) [AS alias]
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from ..errors import NobelGraphError
from ..schema import SchemaRegistry, validate_label, validate_relation
from .ast import (
    Comparison,
    CountExpr,
    Literal,
    MatchClause,
    NodePattern,
    PathPattern,
    Projection,
    PropertyRef,
    Query,
    RelPattern,
    SortKey,
    VarRef,
)

KEYWORDS = frozenset(
    "MATCH WHERE AND RETURN DISTINCT AS ORDER BY ASC DESC ASCENDING DESCENDING LIMIT "
    "COUNT CONTAINS TRUE FALSE NULL".split()
)
DEFAULT_ALIASES: Mapping[str, str] = {"WON_AWARD": "RECEIVED"}


class QueryError(NobelGraphError):
    """Base class for query parse/plan failures."""


class CypherSyntaxError(QueryError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset  # byte offset into the UTF-8 query text
        self.expected = expected
        detail = f"; expected one of {sorted(expected)}" if expected else ""
        super().__init__(f"{message} at byte {offset}{detail}")


class UnknownKeywordError(CypherSyntaxError):
    def __init__(self, keyword: str, offset: int, expected: frozenset[str] = frozenset()):
        self.keyword = keyword
        super().__init__(f"unknown or unsupported keyword {keyword!r}", offset, expected)


class UnboundVariableError(QueryError):
    def __init__(self, var: str):
        self.variable = var
        super().__init__(f"variable {var!r} is not bound by any MATCH pattern")


class CypherSemanticError(QueryError):
    """Well-formed text with an invalid meaning (e.g. a variable reused as node and relationship)."""


@dataclass
class Token:
    kind: str  # IDENT, QIDENT, STRING, NUMBER, PUNCT, EOF
    text: str
    value: object
    pos: int


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<number>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<qident>`(?:[^`]|``)*`)
  | (?P<string>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<punct><>|<=|>=|[()\[\]{}:,.\-<>=*;])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f", "\\": "\\",
            "'": "'", '"': '"', "/": "/"}


def _unescape(body: str, pos: int, text: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt == "u" and re.fullmatch(r"[0-9a-fA-F]{4}", body[i + 2:i + 6] or ""):
                out.append(chr(int(body[i + 2:i + 6], 16)))
                i += 6
                continue
            if nxt not in _ESCAPES:
                raise CypherSyntaxError(f"bad escape \\{nxt}", _byte_offset(text, pos + i + 1))
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise CypherSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "number":
            value: object = float(lexeme) if any(c in lexeme for c in ".eE") else int(lexeme)
            tokens.append(Token("NUMBER", lexeme, value, pos))
        elif kind == "ident":
            tokens.append(Token("IDENT", lexeme, lexeme, pos))
        elif kind == "qident":
            tokens.append(Token("QIDENT", lexeme, lexeme[1:-1].replace("``", "`"), pos))
        elif kind == "string":
            tokens.append(Token("STRING", lexeme, _unescape(lexeme[1:-1], pos + 1, text), pos))
        elif kind == "punct":
            tokens.append(Token("PUNCT", lexeme, lexeme, pos))
        pos = m.end()
    tokens.append(Token("EOF", "", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, message: str, expected: set[str] | frozenset[str] = frozenset(),
              tok: Token | None = None) -> CypherSyntaxError:
        tok = tok or self.tok
        return CypherSyntaxError(message, _byte_offset(self.text, tok.pos), frozenset(expected))

    def is_kw(self, *words: str, tok: Token | None = None) -> bool:
        tok = tok or self.tok
        return tok.kind == "IDENT" and tok.text.upper() in words

    def is_punct(self, *symbols: str) -> bool:
        return self.tok.kind == "PUNCT" and self.tok.text in symbols

    def advance(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def expect_kw(self, word: str) -> Token:
        if not self.is_kw(word):
            raise self.error(f"unexpected {self._describe()}", {word})
        return self.advance()

    def expect_punct(self, symbol: str) -> Token:
        if not self.is_punct(symbol):
            raise self.error(f"unexpected {self._describe()}", {symbol})
        return self.advance()

    def _describe(self) -> str:
        return "end of input" if self.tok.kind == "EOF" else repr(self.tok.text)

    def ident(self, what: str = "identifier") -> str:
        tok = self.tok
        if tok.kind == "QIDENT":
            self.advance()
            return tok.value  # type: ignore[return-value]
        if tok.kind == "IDENT" and tok.text.upper() not in KEYWORDS:
            self.advance()
            return tok.text
        raise self.error(f"unexpected {self._describe()}", {what})

    def at_ident(self) -> bool:
        return self.tok.kind == "QIDENT" or (
            self.tok.kind == "IDENT" and self.tok.text.upper() not in KEYWORDS
        )

    # -- grammar -------------------------------------------------------------

    def query(self) -> Query:
        matches: list[MatchClause] = []
        where: list[Comparison] = []
        if not self.is_kw("MATCH"):
            raise self._clause_error({"MATCH"})
        while self.is_kw("MATCH"):
            self.advance()
            patterns = [self.path()]
            while self.is_punct(","):
                self.advance()
                patterns.append(self.path())
            matches.append(MatchClause(tuple(patterns)))
            if self.is_kw("WHERE"):
                self.advance()
                where.extend(self.conditions())
            if not self.is_kw("MATCH", "RETURN"):
                raise self._clause_error({"MATCH", "WHERE", "RETURN", ","})
        self.expect_kw("RETURN")
        distinct = False
        if self.is_kw("DISTINCT"):
            self.advance()
            distinct = True
        returns = [self.projection()]
        while self.is_punct(","):
            self.advance()
            returns.append(self.projection())
        order: list[SortKey] = []
        if self.is_kw("ORDER"):
            self.advance()
            self.expect_kw("BY")
            order.append(self.sort_key())
            while self.is_punct(","):
                self.advance()
                order.append(self.sort_key())
        limit = None
        if self.is_kw("LIMIT"):
            self.advance()
            if self.tok.kind != "NUMBER" or not isinstance(self.tok.value, int):
                raise self.error("LIMIT needs a non-negative integer", {"integer"})
            limit = self.advance().value
        if self.is_punct(";"):
            self.advance()
        if self.tok.kind != "EOF":
            expected = {"end of input"}
            if not order and limit is None:
                expected |= {"ORDER", "LIMIT", ","}
            raise self._clause_error(expected)
        return Query(tuple(matches), tuple(where), tuple(returns), distinct, tuple(order), limit)

    def _clause_error(self, expected: set[str]) -> CypherSyntaxError:
        tok = self.tok
        if tok.kind == "IDENT" and tok.text.upper() not in KEYWORDS:
            return UnknownKeywordError(tok.text, _byte_offset(self.text, tok.pos), frozenset(expected))
        return self.error(f"unexpected {self._describe()}", expected)

    def path(self) -> PathPattern:
        nodes = [self.node()]
        rels = []
        while self.is_punct("-", "<"):
            rels.append(self.rel())
            nodes.append(self.node())
        return PathPattern(tuple(nodes), tuple(rels))

    def node(self) -> NodePattern:
        self.expect_punct("(")
        var = self.ident("variable") if self.at_ident() else None
        label = None
        if self.is_punct(":"):
            self.advance()
            label = self.ident("label")
        props = self.props() if self.is_punct("{") else ()
        if not self.is_punct(")"):
            expected = {")"} | ({"{"} if not props else set()) | ({":"} if label is None else set())
            raise self.error(f"unexpected {self._describe()}", expected)
        self.advance()
        return NodePattern(var, label, props)

    def rel(self) -> RelPattern:
        left_arrow = False
        if self.is_punct("<"):
            self.advance()
            left_arrow = True
        self.expect_punct("-")
        var = rel_type = None
        props: tuple = ()
        if self.is_punct("["):
            self.advance()
            if self.at_ident():
                var = self.ident("variable")
            if self.is_punct(":"):
                self.advance()
                rel_type = self.ident("relationship type")
            if self.is_punct("{"):
                props = self.props()
            if self.is_punct("*"):
                raise self.error("variable-length relationships are not supported")
            self.expect_punct("]")
        self.expect_punct("-")
        right_arrow = False
        if self.is_punct(">"):
            self.advance()
            right_arrow = True
        if left_arrow and right_arrow:
            raise self.error("relationship cannot point both ways", tok=self.tokens[self.i - 1])
        direction = "in" if left_arrow else "out" if right_arrow else "both"
        return RelPattern(var, rel_type, direction, props)

    def props(self) -> tuple:
        self.expect_punct("{")
        items: list[tuple[str, object]] = []
        if not self.is_punct("}"):
            while True:
                key = self.ident("property key")
                self.expect_punct(":")
                items.append((key, self.literal()))
                if self.is_punct(","):
                    self.advance()
                    continue
                break
        self.expect_punct("}")
        return tuple(items)

    def literal(self) -> object:
        tok = self.tok
        if tok.kind == "STRING":
            self.advance()
            return tok.value
        if tok.kind == "NUMBER":
            self.advance()
            return tok.value
        if self.is_punct("-") and self.peek().kind == "NUMBER":
            self.advance()
            return -self.advance().value  # type: ignore[operator]
        if self.is_kw("TRUE"):
            self.advance()
            return True
        if self.is_kw("FALSE"):
            self.advance()
            return False
        if self.is_kw("NULL"):
            self.advance()
            return None
        raise self.error(f"unexpected {self._describe()}", {"string", "number", "true", "false", "null"})

    def conditions(self) -> list[Comparison]:
        conds = [self.comparison()]
        while self.is_kw("AND"):
            self.advance()
            conds.append(self.comparison())
        if self.is_kw("OR", "NOT", "XOR"):
            raise UnknownKeywordError(self.tok.text, _byte_offset(self.text, self.tok.pos),
                                      frozenset({"AND", "RETURN", "MATCH"}))
        return conds

    def comparison(self) -> Comparison:
        left = self.operand()
        if self.is_kw("CONTAINS"):
            self.advance()
            op = "CONTAINS"
        elif self.is_punct("=", "<>", "<", ">", "<=", ">="):
            op = self.advance().text
        else:
            raise self.error(f"unexpected {self._describe()}",
                             {"=", "<>", "<", ">", "<=", ">=", "CONTAINS"})
        return Comparison(left, op, self.operand())

    def operand(self):
        if self.at_ident():
            var = self.ident()
            if self.is_punct("."):
                self.advance()
                return PropertyRef(var, self.ident("property key"))
            return VarRef(var)
        return Literal(self.literal())

    def expression(self):
        if self.is_kw("COUNT") and self.peek().kind == "PUNCT" and self.peek().text == "(":
            self.advance()
            self.advance()
            if self.is_punct("*"):
                self.advance()
                self.expect_punct(")")
                return CountExpr(None)
            distinct = False
            if self.is_kw("DISTINCT"):
                self.advance()
                distinct = True
            arg = self.operand()
            if isinstance(arg, Literal):
                raise self.error("count() needs a variable or property", {"variable"})
            self.expect_punct(")")
            return CountExpr(arg, distinct)
        if not self.at_ident():
            raise self.error(f"unexpected {self._describe()}", {"variable", "count"})
        var = self.ident()
        if self.is_punct("."):
            self.advance()
            return PropertyRef(var, self.ident("property key"))
        return VarRef(var)

    def projection(self) -> Projection:
        expr = self.expression()
        alias = None
        if self.is_kw("AS"):
            self.advance()
            alias = self.ident("alias")
        return Projection(expr, alias)

    def sort_key(self) -> SortKey:
        expr = self.expression()
        descending = False
        if self.is_kw("DESC", "DESCENDING"):
            self.advance()
            descending = True
        elif self.is_kw("ASC", "ASCENDING"):
            self.advance()
        return SortKey(expr, descending)


def _check(q: Query, schema: SchemaRegistry | None, aliases: Mapping[str, str]) -> Query:
    """Apply relation aliases, validate schema names and variable bindings."""
    node_vars: set[str] = set()
    rel_vars: list[str] = []
    matches = []
    for m in q.matches:
        patterns = []
        for p in m.patterns:
            nodes = []
            for n in p.nodes:
                if n.label is not None:
                    validate_label(n.label)
                if n.var:
                    node_vars.add(n.var)
                nodes.append(n)
            rels = []
            for r in p.rels:
                if r.rel_type is not None:
                    rel_type = aliases.get(r.rel_type, r.rel_type)
                    validate_relation(rel_type)
                    r = RelPattern(r.var, rel_type, r.direction, r.props)
                if r.var:
                    rel_vars.append(r.var)
                rels.append(r)
            patterns.append(PathPattern(tuple(nodes), tuple(rels)))
        matches.append(MatchClause(tuple(patterns)))
    if len(rel_vars) != len(set(rel_vars)):
        raise CypherSemanticError("a relationship variable may be bound only once")
    clash = node_vars & set(rel_vars)
    if clash:
        raise CypherSemanticError(f"variable {sorted(clash)[0]!r} used for both a node and a relationship")
    bound = node_vars | set(rel_vars)

    def need(expr) -> None:
        if isinstance(expr, (VarRef, PropertyRef)) and expr.var not in bound:
            raise UnboundVariableError(expr.var)
        if isinstance(expr, CountExpr) and expr.arg is not None:
            need(expr.arg)

    for c in q.where:
        need(c.left)
        need(c.right)
    columns = set()
    for p in q.returns:
        need(p.expr)
        columns.add(p.column)
    aliases_seen = {p.alias for p in q.returns if p.alias}
    exprs = {p.expr for p in q.returns}
    for k in q.order_by:
        if isinstance(k.expr, VarRef) and k.expr.var in aliases_seen:
            continue
        need(k.expr)
        if k.expr not in exprs:
            raise CypherSemanticError("ORDER BY keys must be returned columns")
    return Query(tuple(matches), q.where, q.returns, q.distinct, q.order_by, q.limit)


def parse(
    text: str,
    schema: SchemaRegistry | None = None,
    aliases: Mapping[str, str] | None = None,
) -> Query:
    """Parse and validate one query.

    Raises CypherSyntaxError (with byte offset and expected tokens),
    UnknownKeywordError, UnboundVariableError, CypherSemanticError or
    SchemaViolation. Relation names in ``aliases`` (default WON_AWARD ->
    RECEIVED) are rewritten before validation.
    """
    if not isinstance(text, str):
        raise CypherSyntaxError("query must be text", 0)
    q = _Parser(text).query()
    return _check(q, schema, DEFAULT_ALIASES if aliases is None else aliases)
