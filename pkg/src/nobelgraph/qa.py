"""Question answering over the store: translate, parse, execute, select.

Translators turn a question plus schema text into Cypher. Nothing a
translator returns is executed unless it parses and schema-validates.
"""

from __future__ import annotations

import json
import os
import re
import shlex
import subprocess
import sys
import urllib.request
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence, TextIO

from .errors import InvalidName, SchemaViolation
from .ingest import normalize_name
from .qagen import DEFAULT_TEMPLATES, FINETUNE_PROMPT, McqItem, QaTemplate, load_mcq
from .query import QueryError, execute, parse
from .schema import SchemaRegistry, render_schema_text
from .store import PropertyGraph

ENDPOINT_ENV = "NOBELGRAPH_TRANSLATOR_ENDPOINT"


class TranslationError(Exception):
    pass


class Translator:
    """translate(question, schema_text) -> cypher text, or TranslationError."""

    name = "translator"

    def translate(self, question: str, schema_text: str) -> str:
        raise NotImplementedError


class TemplateTranslator(Translator):
    """Slot-matches the question against template surface variants.

    Variants with more literal text are tried first so a longer template
    wins over a shorter one whose pattern it happens to contain.
    """

    name = "template"

    def __init__(self, templates: Sequence[QaTemplate] = DEFAULT_TEMPLATES):
        rules = []
        for t in templates:
            for v in t.variants:
                head, _, tail = v.partition("{anchor}")
                rx = re.compile(re.escape(head) + r"(?P<anchor>.+?)" + re.escape(tail) + r"\Z")
                rules.append((len(head) + len(tail), t.id, rx, t))
        rules.sort(key=lambda r: (-r[0], r[1]))
        self._rules = [(rx, t) for _, _, rx, t in rules]

    def translate(self, question: str, schema_text: str = "") -> str:
        q = " ".join(question.split())
        for rx, t in self._rules:
            m = rx.match(q)
            if m:
                return t.cypher(m.group("anchor").strip())
        raise TranslationError("question matches no template")


class OracleTranslator(Translator):
    """Looks up the gold query; only meaningful on a generated dataset."""

    name = "oracle"

    def __init__(self, gold: Mapping[str, str]):
        self._gold = dict(gold)

    @classmethod
    def from_items(cls, items: Iterable[McqItem]) -> "OracleTranslator":
        return cls({i.question: i.gold_cypher for i in items})

    def translate(self, question: str, schema_text: str = "") -> str:
        try:
            return self._gold[question]
        except KeyError:
            raise TranslationError("question not in the gold table") from None


class AbstainTranslator(Translator):
    name = "abstain"

    def translate(self, question: str, schema_text: str = "") -> str:
        raise TranslationError("abstained")


_FENCE = re.compile(r"```[A-Za-z]*\s*\n?(.*?)```", re.S)


def strip_fences(text: str) -> str:
    m = _FENCE.search(text)
    return (m.group(1) if m else text).strip()


class ExternalTranslator(Translator):
    """Delegates to an HTTP endpoint or a local command.

    The request body is the full fine-tuning prompt (schema text plus
    question) as UTF-8 text; the response body is Cypher text. A value
    starting with ``http://`` or ``https://`` is POSTed to; anything else is
    run as a command with the prompt on stdin.
    """

    name = "external"

    def __init__(
        self, endpoint: str | None = None, env_var: str = ENDPOINT_ENV,
        timeout: float = 30.0, retries: int = 1,
    ):
        endpoint = endpoint or os.environ.get(env_var)
        if not endpoint:
            raise ValueError(f"no translator endpoint: set ${env_var}")
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries

    def _call(self, prompt: str) -> str:
        if self.endpoint.startswith(("http://", "https://")):
            req = urllib.request.Request(
                self.endpoint, data=prompt.encode("utf-8"),
                headers={"Content-Type": "text/plain; charset=utf-8"}, method="POST",
            )
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.read().decode("utf-8")
        proc = subprocess.run(
            shlex.split(self.endpoint), input=prompt, capture_output=True,
            text=True, timeout=self.timeout, check=True,
        )
        return proc.stdout

    def translate(self, question: str, schema_text: str = "") -> str:
        schema_text = (schema_text or render_schema_text()).rstrip("\n")
        prompt = FINETUNE_PROMPT.format(schema=schema_text, question=question)
        last: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                text = strip_fences(self._call(prompt))
            except (OSError, subprocess.SubprocessError) as exc:
                last = exc
                continue
            if not text:
                raise TranslationError("empty response")
            return text
        raise TranslationError(f"endpoint failed: {last}")


TRANSLATORS = ("template", "oracle", "external", "abstain")


# -- answering ---------------------------------------------------------------


def normalize_value(value: Any) -> str:
    text = str(value)
    try:
        text = normalize_name(text)
    except InvalidName:
        text = " ".join(text.split())
    return text.casefold()


@dataclass
class AnswerTrace:
    question: str
    hops: int | None = None
    cypher: str | None = None
    outcome: str = "pending"  # answered | translation | parse | execution | empty | no_match | ambiguous
    reason: str = ""
    values: list[str] = field(default_factory=list)
    matches: list[int] = field(default_factory=list)
    chosen: int | None = None
    gold: int | None = None

    @property
    def correct(self) -> bool:
        return self.chosen is not None and self.chosen == self.gold

    def to_dict(self) -> dict[str, Any]:
        return {
            "question": self.question, "hops": self.hops, "cypher": self.cypher,
            "outcome": self.outcome, "reason": self.reason, "values": self.values,
            "matches": self.matches, "chosen": self.chosen, "gold": self.gold,
            "correct": self.correct,
        }


def ask(
    question: str, translator: Translator, store: PropertyGraph,
    schema: SchemaRegistry | None = None,
):
    """Translate and run a question. Returns (ResultTable or None, trace)."""
    schema = schema or store.schema
    trace = AnswerTrace(question)
    try:
        trace.cypher = translator.translate(question, render_schema_text(schema))
    except TranslationError as exc:
        trace.outcome, trace.reason = "translation", str(exc)
        return None, trace
    if not isinstance(trace.cypher, str):
        trace.outcome, trace.reason = "translation", "translator returned non-text"
        return None, trace
    try:
        q = parse(trace.cypher, schema)
    except (QueryError, SchemaViolation) as exc:
        trace.outcome, trace.reason = "parse", str(exc)
        return None, trace
    try:
        table = execute(q, store)
    except Exception as exc:  # executor bugs must not abort an evaluation run
        trace.outcome, trace.reason = "execution", f"{type(exc).__name__}: {exc}"
        return None, trace
    trace.values = [str(v) for v in table.values() if v is not None]
    trace.outcome = "answered"
    return table, trace


def answer_mcq(
    item: McqItem, translator: Translator, store: PropertyGraph,
    schema: SchemaRegistry | None = None,
) -> tuple[int | None, AnswerTrace]:
    """Pick the single choice matching a result value, else abstain (None)."""
    _, trace = ask(item.question, translator, store, schema)
    trace.hops, trace.gold = item.hops, item.answer
    if trace.outcome != "answered":
        return None, trace
    if not trace.values:
        trace.outcome, trace.reason = "empty", "query returned no values"
        return None, trace
    found = {normalize_value(v) for v in trace.values}
    trace.matches = [i for i, c in enumerate(item.choices) if normalize_value(c) in found]
    if len(trace.matches) != 1:
        trace.outcome = "no_match" if not trace.matches else "ambiguous"
        trace.reason = f"{len(trace.matches)} choices match the result"
        return None, trace
    trace.chosen = trace.matches[0]
    return trace.chosen, trace


# -- evaluation --------------------------------------------------------------

HOP_LEVELS = (1, 2, 3, 4)


@dataclass
class EvalReport:
    translator: str
    total: int = 0
    correct: int = 0
    per_hop: dict[int, list[int]] = field(default_factory=dict)  # hop -> [correct, total]
    translation_failures: int = 0
    parse_failures: int = 0
    execution_failures: int = 0
    execution_empty: int = 0
    abstentions: int = 0
    malformed_lines: int = 0
    traces: list[AnswerTrace] = field(default_factory=list)

    @staticmethod
    def _pct(correct: int, total: int) -> float | None:
        return 100.0 * correct / total if total else None

    @property
    def accuracy(self) -> float | None:
        return self._pct(self.correct, self.total)

    def hop_accuracy(self, hop: int) -> float | None:
        c, t = self.per_hop.get(hop, (0, 0))
        return self._pct(c, t)

    def add(self, trace: AnswerTrace) -> None:
        self.traces.append(trace)
        self.total += 1
        slot = self.per_hop.setdefault(trace.hops, [0, 0])
        slot[1] += 1
        if trace.correct:
            self.correct += 1
            slot[0] += 1
        if trace.chosen is None:
            self.abstentions += 1
        if trace.outcome == "translation":
            self.translation_failures += 1
        elif trace.outcome == "parse":
            self.parse_failures += 1
        elif trace.outcome == "execution":
            self.execution_failures += 1
        elif trace.outcome == "empty":
            self.execution_empty += 1

    def rows(self) -> list[tuple[str, float | None]]:
        hops = sorted(set(HOP_LEVELS) | set(self.per_hop))
        return [("Accuracy (%)", self.accuracy)] + [
            (f"Accuracy ({h}-hop) (%)", self.hop_accuracy(h)) for h in hops
        ]

    def format_table(self) -> str:
        rows = [(m, "-" if v is None else f"{v:.2f}") for m, v in self.rows()]
        w0 = max(len("Metric"), *(len(m) for m, _ in rows))
        w1 = max(len(self.translator), *(len(v) for _, v in rows))
        out = [f"{'Metric'.ljust(w0)}  {self.translator.rjust(w1)}", "-" * (w0 + 2 + w1)]
        out += [f"{m.ljust(w0)}  {v.rjust(w1)}" for m, v in rows]
        out.append("")
        out.append(
            f"items {self.total}, correct {self.correct}, abstained {self.abstentions} "
            f"(translation {self.translation_failures}, parse {self.parse_failures}, "
            f"execution {self.execution_failures}, empty {self.execution_empty}), "
            f"malformed lines {self.malformed_lines}"
        )
        return "\n".join(out) + "\n"

    def summary(self) -> dict[str, Any]:
        return {
            "translator": self.translator,
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "per_hop": {
                str(h): {"correct": c, "total": t, "accuracy": self._pct(c, t)}
                for h, (c, t) in sorted(self.per_hop.items())
            },
            "translation_failures": self.translation_failures,
            "parse_failures": self.parse_failures,
            "execution_failures": self.execution_failures,
            "execution_empty": self.execution_empty,
            "abstentions": self.abstentions,
            "malformed_lines": self.malformed_lines,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps({"kind": "summary", **self.summary()}, ensure_ascii=False)]
        for i, t in enumerate(self.traces):
            lines.append(json.dumps({"kind": "item", "index": i, **t.to_dict()}, ensure_ascii=False))
        return "\n".join(lines) + "\n"


def evaluate_items(
    items: Sequence[McqItem], translator: Translator, store: PropertyGraph,
    malformed: int = 0,
) -> EvalReport:
    report = EvalReport(translator.name, malformed_lines=malformed)
    for item in items:
        _, trace = answer_mcq(item, translator, store)
        report.add(trace)
    return report


def evaluate(dataset_path, translator: Translator, store: PropertyGraph) -> EvalReport:
    """Score every well-formed dataset line; malformed lines are counted and skipped."""
    items, bad = load_mcq(dataset_path)
    return evaluate_items(items, translator, store, bad)


# -- interactive -------------------------------------------------------------


def repl(
    store: PropertyGraph, translator: Translator,
    stdin: TextIO | None = None, stdout: TextIO | None = None, prompt: str = "? ",
) -> None:
    """One question per turn; ``:quit`` or end of input exits."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    while True:
        stdout.write(prompt)
        stdout.flush()
        line = stdin.readline()
        if not line:
            break
        question = line.strip()
        if not question:
            continue
        if question in (":quit", ":q", ":exit"):
            break
        table, trace = ask(question, translator, store)
        if trace.cypher:
            stdout.write(trace.cypher + "\n")
        if table is None:
            stdout.write(f"error ({trace.outcome}): {trace.reason}\n")
            continue
        stdout.write(table.format_table())
        answers = sorted({normalize_value(v): v.strip() for v in trace.values}.values())
        stdout.write("answer: " + (", ".join(answers) if answers else "(no result)") + "\n")


def make_translator(kind: str, *, dataset=None, endpoint_env: str = ENDPOINT_ENV) -> Translator:
    if kind == "template":
        return TemplateTranslator()
    if kind == "abstain":
        return AbstainTranslator()
    if kind == "oracle":
        if dataset is None:
            raise ValueError("the oracle translator needs a dataset")
        items, _ = load_mcq(dataset)
        return OracleTranslator.from_items(items)
    if kind == "external":
        return ExternalTranslator(env_var=endpoint_env)
    raise ValueError(f"unknown translator {kind!r}; choose from {', '.join(TRANSLATORS)}")
