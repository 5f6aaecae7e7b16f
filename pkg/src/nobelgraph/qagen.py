"""Hop-stratified question generation from sampled store paths.

Every template is a chain anchored at a named start node; the answer is the
name of the node at the far end. Questions come from hand-written surface
variants, and each item carries a gold Cypher query that is executed against
the store before the item is accepted.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .query.ast import (
    MatchClause,
    NodePattern,
    PathPattern,
    Projection,
    PropertyRef,
    Query,
    RelPattern,
    VarRef,
    render,
)
from .query.executor import execute
from .ingest import match_key
from .schema import SchemaRegistry, default_schema, render_schema_text
from .store import PropertyGraph

log = logging.getLogger(__name__)

FINETUNE_PROMPT = (
    "You are an expert system that converts natural language questions into Cypher queries.\n"
    "Use only the schema provided below.\n"
    "Do not invent new node types or relationships.\n"
    "\n"
    "[Graph Schema]\n"
    "{schema}\n"
    "\n"
    "[Question]\n"
    "{question}\n"
    "\n"
    "[Cypher Query]\n"
)

DEFAULT_MIX = {(1, 2): 0.6, (3, 4): 0.4}


@dataclass(frozen=True)
class QaTemplate:
    """A chain ``labels[0] -steps[0]- labels[1] ... labels[-1]``.

    ``steps`` holds ``(rel_type, direction)`` pairs with direction ``"out"``
    or ``"in"`` relative to reading order. Variants contain an ``{anchor}``
    slot that receives the start node's name.
    """

    id: str
    labels: tuple[str, ...]
    steps: tuple[tuple[str, str], ...]
    variants: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.steps) + 1:
            raise ValueError(f"{self.id}: need one more label than steps")
        if not 1 <= len(self.steps) <= 4:
            raise ValueError(f"{self.id}: hop count must be 1..4")
        if len(self.variants) < 3 or any("{anchor}" not in v for v in self.variants):
            raise ValueError(f"{self.id}: need 3+ variants, each with an {{anchor}} slot")

    @property
    def hop_count(self) -> int:
        return len(self.steps)

    @property
    def signature(self) -> tuple[tuple[str, str, str], ...]:
        return tuple((self.labels[i], rel, d) for i, (rel, d) in enumerate(self.steps))

    @property
    def anchor_label(self) -> str:
        return self.labels[0]

    @property
    def answer_label(self) -> str:
        return self.labels[-1]

    def variables(self) -> list[str]:
        return [f"{label[0].lower()}{i}" for i, label in enumerate(self.labels)]

    def pattern(self, anchor: str | None = None, rel_vars: bool = False) -> PathPattern:
        names = self.variables()
        nodes = []
        for i, label in enumerate(self.labels):
            props = (("name", anchor),) if i == 0 and anchor is not None else ()
            nodes.append(NodePattern(names[i], label, props))
        rels = tuple(
            RelPattern(f"r{i}" if rel_vars else None, rel, d) for i, (rel, d) in enumerate(self.steps)
        )
        return PathPattern(tuple(nodes), rels)

    def query(self, anchor: str) -> Query:
        end = self.variables()[-1]
        return Query(
            matches=(MatchClause((self.pattern(anchor),)),),
            returns=(Projection(PropertyRef(end, "name")),),
            distinct=True,
        )

    def cypher(self, anchor: str) -> str:
        return render(self.query(anchor))

    def question(self, anchor: str, variant: int = 0) -> str:
        return self.variants[variant].replace("{anchor}", anchor)


def _t(id, labels, steps, *variants) -> QaTemplate:
    return QaTemplate(id, tuple(labels), tuple(steps), tuple(variants))


P, C, F, O, W, A = "Person", "Country", "Field", "Organization", "Notable_Work", "Award"
CIT = ("IS_CITIZEN_OF", "out")
FLD = ("WORKS_IN_FIELD", "out")
SPO = ("IS_SPOUSE_OF", "out")
COD = ("CO_DISCOVERED_WITH", "out")
EMP = ("EMPLOYED_BY", "out")
DEV_BY = ("DEVELOPED", "in")
FOUNDED_BY = ("FOUNDED", "in")

DEFAULT_TEMPLATES: tuple[QaTemplate, ...] = (
    _t("citizen", [P, C], [CIT],
       "Which country is {anchor} a citizen of?",
       "{anchor} holds citizenship of which country?",
       "What is the country of citizenship of {anchor}?"),
    _t("field", [P, F], [FLD],
       "In which field did {anchor} work?",
       "What field is {anchor} known for working in?",
       "{anchor} was active in which field?"),
    _t("award", [P, A], [("RECEIVED", "out")],
       "Which award did {anchor} receive?",
       "What prize was awarded to {anchor}?",
       "{anchor} is a recipient of which award?"),
    _t("employer", [P, O], [EMP],
       "Which organization employed {anchor}?",
       "Where was {anchor} employed?",
       "{anchor} worked for which organization?"),
    _t("developer", [W, P], [DEV_BY],
       "Who developed {anchor}?",
       "Which person is credited with developing {anchor}?",
       "{anchor} was developed by whom?"),
    _t("founder", [O, P], [FOUNDED_BY],
       "Who founded {anchor}?",
       "Which person established {anchor}?",
       "{anchor} was founded by which person?"),
    _t("spouse", [P, P], [SPO],
       "Who is the spouse of {anchor}?",
       "Whom did {anchor} marry?",
       "{anchor} is married to whom?"),
    _t("spouse_country", [P, P, C], [SPO, CIT],
       "Which country is the spouse of {anchor} a citizen of?",
       "What is the citizenship of the person married to {anchor}?",
       "{anchor}'s spouse holds citizenship of which country?"),
    _t("developer_country", [W, P, C], [DEV_BY, CIT],
       "Which country is the developer of {anchor} a citizen of?",
       "The person who developed {anchor} holds citizenship of which country?",
       "What is the country of citizenship of whoever developed {anchor}?"),
    _t("founder_field", [O, P, F], [FOUNDED_BY, FLD],
       "In which field did the founder of {anchor} work?",
       "What field was the person who founded {anchor} active in?",
       "{anchor} was founded by someone working in which field?"),
    _t("codiscoverer_employer", [P, P, O], [COD, EMP],
       "Which organization employed the co-discoverer of {anchor}?",
       "Where did the person who co-discovered with {anchor} work?",
       "{anchor}'s co-discoverer was employed by which organization?"),
    _t("work_spouse_country", [W, P, P, C], [DEV_BY, SPO, CIT],
       "Which country is the spouse of the developer of {anchor} a citizen of?",
       "The person married to whoever developed {anchor} holds citizenship of which country?",
       "What is the country of citizenship of the spouse of the person who developed {anchor}?"),
    _t("spouse_codiscoverer_field", [P, P, P, F], [SPO, COD, FLD],
       "In which field did the co-discoverer of {anchor}'s spouse work?",
       "What field was the person who co-discovered with the spouse of {anchor} active in?",
       "The spouse of {anchor} co-discovered with someone working in which field?"),
    _t("employer_founder_country", [P, O, P, C], [EMP, FOUNDED_BY, CIT],
       "Which country is the founder of {anchor}'s employer a citizen of?",
       "The person who founded the organization employing {anchor} holds citizenship of which country?",
       "What is the citizenship of whoever founded the employer of {anchor}?"),
    _t("work_codiscoverer_spouse_country", [W, P, P, P, C], [DEV_BY, COD, SPO, CIT],
       "Which country is the spouse of the co-discoverer of {anchor}'s developer a citizen of?",
       "The developer of {anchor} co-discovered with someone whose spouse holds citizenship of which country?",
       "What is the country of citizenship of the spouse of the co-discoverer of the person who developed {anchor}?"),
    _t("founder_spouse_codiscoverer_field", [O, P, P, P, F], [FOUNDED_BY, SPO, COD, FLD],
       "In which field did the co-discoverer of the spouse of {anchor}'s founder work?",
       "The founder of {anchor} is married to someone whose co-discoverer works in which field?",
       "What field was the co-discoverer of the spouse of the person who founded {anchor} active in?"),
    _t("employer_founder_spouse_country", [P, O, P, P, C], [EMP, FOUNDED_BY, SPO, CIT],
       "Which country is the spouse of the founder of {anchor}'s employer a citizen of?",
       "The organization employing {anchor} was founded by someone whose spouse holds citizenship of which country?",
       "What is the citizenship of the spouse of whoever founded the employer of {anchor}?"),
)


def templates_by_hop(templates: Iterable[QaTemplate]) -> dict[int, list[QaTemplate]]:
    out: dict[int, list[QaTemplate]] = {}
    for t in templates:
        out.setdefault(t.hop_count, []).append(t)
    return out


# -- path sampling -----------------------------------------------------------


def enumerate_paths(store: PropertyGraph, template: QaTemplate) -> list[tuple[int, ...]]:
    """All node-id chains matching the template, sorted."""
    pattern = template.pattern()
    q = Query(
        matches=(MatchClause((pattern,)),),
        returns=tuple(Projection(VarRef(v)) for v in template.variables()),
    )
    return sorted(tuple(cell.id for cell in row) for row in execute(q, store).rows)


def sample_path(
    store: PropertyGraph,
    template: QaTemplate,
    rng: random.Random,
    paths: Sequence[tuple[int, ...]] | None = None,
) -> tuple[int, ...] | None:
    """Uniform choice among matching chains, or None when there are none."""
    if paths is None:
        paths = enumerate_paths(store, template)
    if not paths:
        return None
    return paths[rng.randrange(len(paths))]


# -- multiple choice ---------------------------------------------------------


@dataclass
class McqItem:
    question: str
    choices: list[str]
    answer: int
    hops: int
    gold_cypher: str
    template: str = ""
    path: list[str] = field(default_factory=list)
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "question": self.question,
                "choices": self.choices,
                "answer": self.answer,
                "hops": self.hops,
                "gold_cypher": self.gold_cypher,
                "template": self.template,
                "path": self.path,
                "seed": self.seed,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_dict(cls, obj: Mapping) -> "McqItem":
        choices = obj["choices"]
        answer = obj["answer"]
        if not isinstance(obj["question"], str) or not isinstance(obj["gold_cypher"], str):
            raise ValueError("question and gold_cypher must be strings")
        if not isinstance(choices, list) or len(choices) != 4 or not all(isinstance(c, str) for c in choices):
            raise ValueError("choices must be an array of 4 strings")
        if not isinstance(answer, int) or isinstance(answer, bool) or not 0 <= answer < 4:
            raise ValueError("answer must be an index in 0..3")
        hops = obj["hops"]
        if not isinstance(hops, int) or isinstance(hops, bool):
            raise ValueError("hops must be an integer")
        return cls(
            obj["question"], list(choices), answer, hops, obj["gold_cypher"],
            obj.get("template", ""), list(obj.get("path", [])), obj.get("seed"),
        )


def _neighbours(store: PropertyGraph, node_id: int) -> set[int]:
    return {e.dst for e in store.out_edges(node_id)} | {e.src for e in store.in_edges(node_id)}


def pick_distractors(
    store: PropertyGraph, answer_id: int, excluded: set[str], rng: random.Random, k: int = 3
) -> list[str] | None:
    """``k`` same-label names outside ``excluded`` (match keys), hard negatives first."""
    answer = store.node(answer_id)
    pool = sorted(
        {n.name for n in store.nodes(answer.label) if match_key(n.name) not in excluded},
        key=lambda s: (match_key(s), s),
    )
    # one name per match key so no two choices normalize alike
    seen: set[str] = set()
    pool = [s for s in pool if not (match_key(s) in seen or seen.add(match_key(s)))]
    if len(pool) < k:
        return None
    near = _neighbours(store, answer_id)
    hard_names = {
        store.node(n).name
        for m in near
        for n in _neighbours(store, m)
        if n != answer_id and store.node(n).label == answer.label
    }
    hard = [s for s in pool if s in hard_names]
    soft = [s for s in pool if s not in hard_names]
    picked = rng.sample(hard, min(k, len(hard)))
    picked += rng.sample(soft, k - len(picked))
    return picked


def _item_rng(seed: int, tag: object, i: int, attempt: int) -> random.Random:
    return random.Random(f"{seed}:{tag}:{i}:{attempt}")


def generate_mcq(
    store: PropertyGraph,
    templates: Sequence[QaTemplate] = DEFAULT_TEMPLATES,
    counts: Mapping[int, int] | None = None,
    seed: int = 0,
    skipped: list[dict] | None = None,
    max_attempts: int = 50,
) -> list[McqItem]:
    """Gold-verified multiple-choice items, ``counts[hop]`` per hop where achievable."""
    counts = dict(counts or {1: 10, 2: 10, 3: 10, 4: 10})
    by_hop = templates_by_hop(templates)
    path_cache: dict[str, list[tuple[int, ...]]] = {}
    items: list[McqItem] = []
    for hop in sorted(counts):
        pool = by_hop.get(hop, [])
        made = 0
        for i in range(counts[hop]):
            item, reason = None, "no templates for this hop"
            for attempt in range(max_attempts if pool else 0):
                rng = _item_rng(seed, hop, i, attempt)
                t = pool[rng.randrange(len(pool))]
                if t.id not in path_cache:
                    path_cache[t.id] = enumerate_paths(store, t)
                item, reason = _build_item(store, t, rng, path_cache[t.id], seed)
                if item is not None:
                    break
            if item is None:
                if skipped is not None:
                    skipped.append({"hops": hop, "index": i, "reason": reason})
                continue
            items.append(item)
            made += 1
        if made < counts[hop]:
            log.warning("hop %d: generated %d of %d requested items", hop, made, counts[hop])
    return items


def _build_item(store, t: QaTemplate, rng: random.Random, paths, seed) -> tuple[McqItem | None, str]:
    path = sample_path(store, t, rng, paths)
    if path is None:
        return None, f"no path matches template {t.id}"
    anchor = store.node(path[0]).name
    gold = t.cypher(anchor)
    rows = execute(t.query(anchor), store).rows
    if len(rows) != 1:
        return None, f"gold query returned {len(rows)} rows"
    answer_name = rows[0][0]
    answer = store.find(t.answer_label, answer_name)
    excluded = {match_key(answer_name)}
    distractors = pick_distractors(store, answer.id, excluded, rng)
    if distractors is None:
        return None, f"fewer than 3 distractors with label {t.answer_label}"
    pos = rng.randrange(4)
    choices = list(distractors)
    choices.insert(pos, answer_name)
    question = t.question(anchor, rng.randrange(len(t.variants)))
    names = [store.node(n).name for n in path]
    return McqItem(question, choices, pos, t.hop_count, gold, t.id, names, seed), ""


def verify_item(item: McqItem, store: PropertyGraph) -> bool:
    """True when gold_cypher returns exactly the answer choice and no distractor."""
    from .query import parse

    values = {
        match_key(str(v)) for v in execute(parse(item.gold_cypher), store).values() if v is not None
    }
    hits = [i for i, c in enumerate(item.choices) if match_key(c) in values]
    return hits == [item.answer]


# -- fine-tuning pairs -------------------------------------------------------


def largest_remainder(total: int, weights: Mapping) -> dict:
    """Split ``total`` into integer parts proportional to ``weights``."""
    s = sum(weights.values())
    if s <= 0:
        raise ValueError("weights must have a positive sum")
    exact = {k: total * w / s for k, w in weights.items()}
    out = {k: int(v) for k, v in exact.items()}
    rest = total - sum(out.values())
    order = sorted(weights, key=lambda k: (-(exact[k] - out[k]), list(weights).index(k)))
    for k in order[:rest]:
        out[k] += 1
    return out


def finetune_prompt(question: str, schema: SchemaRegistry | None = None) -> str:
    return FINETUNE_PROMPT.format(schema=render_schema_text(schema).rstrip("\n"), question=question)


def generate_finetune_pairs(
    store: PropertyGraph,
    templates: Sequence[QaTemplate] = DEFAULT_TEMPLATES,
    mix: Mapping[tuple[int, ...], float] | None = None,
    n: int = 1000,
    seed: int = 0,
    schema: SchemaRegistry | None = None,
    max_attempts: int = 50,
) -> list[dict]:
    """``n`` prompt/completion pairs with hop groups split per ``mix``.

    Within a group the count is spread evenly across its hop levels.
    """
    mix = dict(mix or DEFAULT_MIX)
    if abs(sum(mix.values()) - 1.0) > 1e-9:
        raise ValueError("mix fractions must sum to 1")
    schema = schema or default_schema()
    schema_text = render_schema_text(schema).rstrip("\n")
    by_hop = templates_by_hop(templates)
    path_cache: dict[str, list[tuple[int, ...]]] = {}
    pairs: list[dict] = []
    group_counts = largest_remainder(n, mix)
    for group, group_n in group_counts.items():
        per_hop = largest_remainder(group_n, {h: 1 for h in group})
        for hop, hop_n in per_hop.items():
            pool = [t for t in by_hop.get(hop, []) if _has_paths(store, t, path_cache)]
            if not pool and hop_n:
                raise ValueError(f"store has no paths for any {hop}-hop template")
            for i in range(hop_n):
                rng = _item_rng(seed, f"ft{hop}", i, 0)
                t = pool[rng.randrange(len(pool))]
                path = sample_path(store, t, rng, path_cache[t.id])
                anchor = store.node(path[0]).name
                question = t.question(anchor, rng.randrange(len(t.variants)))
                pairs.append({
                    "prompt": FINETUNE_PROMPT.format(schema=schema_text, question=question),
                    "completion": t.cypher(anchor),
                    "hops": hop,
                    "seed": seed,
                })
    return pairs


def _has_paths(store, t: QaTemplate, cache: dict) -> bool:
    if t.id not in cache:
        cache[t.id] = enumerate_paths(store, t)
    return bool(cache[t.id])


def write_jsonl(path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def load_mcq(path) -> tuple[list[McqItem], int]:
    """Items plus the count of malformed lines skipped."""
    items, bad = [], 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                items.append(McqItem.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError):
                bad += 1
    return items, bad
