"""Deterministic synthetic laureate corpora in the ingestion JSONL format.

Relations are mostly functional (one citizenship, one field, one employer,
at most one spouse and co-discoverer, one developer per work, at most one
founder per organization) so chained questions tend to have single answers.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .ingest import ingest_stream
from .store import PropertyGraph

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "tr", "gr"]
_VOWELS = ["a", "e", "i", "o", "u", "ei", "ou", "ia"]
_AWARDS = [
    "Nobel Prize in Physics", "Nobel Prize in Chemistry", "Nobel Prize in Physiology or Medicine",
    "Nobel Prize in Literature", "Nobel Peace Prize", "Nobel Memorial Prize in Economic Sciences",
]
_TOPICS = [
    "radiation", "crystal lattices", "enzymes", "nuclear decay", "quantum states", "cell membranes",
    "market equilibria", "poetic form", "disarmament", "catalysis", "immunity", "superconductivity",
]
_ORG_KINDS = ["University of {}", "{} Institute", "{} Laboratory", "{} Academy", "{} Foundation"]
_WORK_KINDS = ["Theory of {}", "{} Equation", "{} Effect", "{} Method", "{} Principle"]


def _word(rng: random.Random, syllables: int) -> str:
    return "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(syllables)).capitalize()


def _unique(rng: random.Random, n: int, make) -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    while len(out) < n:
        s = make()
        if s.casefold() not in seen:
            seen.add(s.casefold())
            out.append(s)
    return out


@dataclass
class SyntheticConfig:
    persons: int = 120
    countries: int = 40
    fields: int = 20
    organizations: int | None = None
    spouse_rate: float = 0.6
    codiscoverer_rate: float = 0.6
    founder_rate: float = 0.85
    works_per_person: float = 0.8
    shared_prize_rate: float = 0.2


def synthetic_records(seed: int = 0, config: SyntheticConfig | None = None) -> list[dict]:
    """One record per person, each listing the person and all related entities."""
    cfg = config or SyntheticConfig()
    rng = random.Random(seed)
    n_orgs = cfg.organizations or max(4, cfg.persons // 4)
    persons = _unique(rng, cfg.persons, lambda: f"{_word(rng, 2)} {_word(rng, 3)}")
    countries = _unique(rng, cfg.countries, lambda: _word(rng, 2) + "ia")
    fields = _unique(rng, cfg.fields, lambda: _word(rng, 2) + "ics")
    orgs = _unique(rng, n_orgs, lambda: rng.choice(_ORG_KINDS).format(_word(rng, 2)))

    facts: dict[str, dict] = {
        p: {"country": rng.choice(countries), "field": rng.choice(fields), "employer": rng.choice(orgs),
            "school": rng.choice(orgs), "award": rng.choice(_AWARDS), "works": [], "founded": []}
        for p in persons
    }
    for year, p in enumerate(persons, 1901):
        facts[p]["motivation"] = f"for discoveries concerning {rng.choice(_TOPICS)} in {year}"
    # shared prizes copy one laureate's award and motivation onto another
    for p in persons:
        if rng.random() < cfg.shared_prize_rate:
            q = rng.choice(persons)
            if q != p:
                facts[q]["award"] = facts[p]["award"]
                facts[q]["motivation"] = facts[p]["motivation"]
    for p in persons:
        if rng.random() < cfg.spouse_rate:
            s = rng.choice(persons)
            if s != p:
                facts[p]["spouse"] = s
        if rng.random() < cfg.codiscoverer_rate:
            c = rng.choice(persons)
            if c != p:
                facts[p]["codiscoverer"] = c
    n_works = int(round(cfg.persons * cfg.works_per_person))
    works = _unique(rng, n_works, lambda: rng.choice(_WORK_KINDS).format(_word(rng, 2)))
    for w in works:
        facts[rng.choice(persons)]["works"].append(w)
    for o in orgs:
        if rng.random() < cfg.founder_rate:
            facts[rng.choice(persons)]["founded"].append(o)

    records = []
    for p in persons:
        f = facts[p]
        ents = [[p, "Person"], [f["country"], "Country"], [f["field"], "Field"],
                [f["employer"], "Organization"], [f["award"], "Award"]]
        rels = [[p, "IS_CITIZEN_OF", f["country"]], [p, "WORKS_IN_FIELD", f["field"]],
                [p, "EMPLOYED_BY", f["employer"]],
                {"head": p, "type": "RECEIVED", "tail": f["award"],
                 "properties": {"motivation": f["motivation"]}}]
        if f["school"] != f["employer"]:
            ents.append([f["school"], "Organization"])
        rels.append([p, "EDUCATED_AT", f["school"]])
        for key, rel in (("spouse", "IS_SPOUSE_OF"), ("codiscoverer", "CO_DISCOVERED_WITH")):
            if key in f:
                if [f[key], "Person"] not in ents:
                    ents.append([f[key], "Person"])
                rels.append([p, rel, f[key]])
        for w in f["works"]:
            ents.append([w, "Notable_Work"])
            rels.append([p, "DEVELOPED", w])
        for o in f["founded"]:
            if [o, "Organization"] not in ents:
                ents.append([o, "Organization"])
            rels.append([p, "FOUNDED", o])
        text = f"{p} is a laureate from {f['country']} working in {f['field']}."
        records.append({"name": p, "text": text, "entities": ents, "relations": rels})
    return records


def synthetic_jsonl(seed: int = 0, config: SyntheticConfig | None = None) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in synthetic_records(seed, config))


def synthetic_store(
    seed: int = 0, config: SyntheticConfig | None = None, original_fraction: float = 1.0
) -> PropertyGraph:
    """Ingest a synthetic corpus; the first ``original_fraction`` of records count as original."""
    records = synthetic_records(seed, config)
    cut = int(round(len(records) * original_fraction))
    store = PropertyGraph()
    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    ingest_stream(lines[:cut], store, source="original")
    ingest_stream(lines[cut:], store, source="enriched")
    return store
