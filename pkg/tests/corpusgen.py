"""Random JSONL ingestion corpora with near-duplicate names, bad labels and broken lines."""

import json
import random


def rec(name, entities, relations, text=""):
    return json.dumps({"name": name, "text": text, "entities": entities, "relations": relations})


NAMES = ["Marie Curie", "marie curie", "Marie Curie (chemist)", "Pierre Curie", "Paris", "France",
         "Sorbonne", "Physics", "Chemistry", "Nobel Prize", "Radium", "(ghost)"]
GEN_LABELS = ["Person", "Country", "Organization", "Field", "Award", "Notable_Work", "Location"]
GEN_RELS = ["RECEIVED", "IS_CITIZEN_OF", "EMPLOYED_BY", "WORKS_IN_FIELD", "IS_SPOUSE_OF", "DEVELOPED"]


def random_line(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.05:
        return "{broken"
    ents = [[rng.choice(NAMES), rng.choice(GEN_LABELS + (["Planet"] if roll < 0.1 else []))]
            for _ in range(rng.randint(0, 4))]
    names = [e[0] for e in ents] or ["Marie Curie"]
    subject = rng.choice(NAMES[:6])
    rels = [[rng.choice(names + [subject]), rng.choice(GEN_RELS), rng.choice(names + ["Nowhere"] * (roll < 0.15))]
            for _ in range(rng.randint(0, 3))]
    return rec(subject, ents, rels)


def corpus(seed, n):
    rng = random.Random(seed)
    return [random_line(rng) for _ in range(n)]
