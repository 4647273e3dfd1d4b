#!/usr/bin/env python3
"""Writes data/demo_corpus.csv: a small synthetic VA-annotated corpus.

Points follow the usual U-shaped valence/arousal relation (arousal rises
towards both valence extremes). Texts are templated from the demo lexicon.
Every SAM cell gets at least two English rows so exemplar retrieval never
starves on the demo data. Texts are unique.
"""
import csv
import pathlib
import random

root = pathlib.Path(__file__).resolve().parent.parent
lex = list(csv.DictReader(open(root / "data" / "demo_lexicon.csv")))
TEMPLATES = [
    "I feel {w} right now.",
    "Honestly, today was {w}.",
    "That whole thing left me {w}.",
    "Everything about this is {w}.",
    "I am so {w} about what happened.",
    "It was a {w} afternoon, to be fair.",
]
CONTEXTS = ["", " at work", " after the call", " this morning", " with my sister", " on the bus",
            " at the party", " before dinner", " in the meeting", " at the station", " over the weekend",
            " back home"]
LANGS = ["es", "de", "fr", "pt"]
seen = set()


def utterance(word):
    for _ in range(1000):
        text = rng.choice(TEMPLATES).format(w=word)
        ctx = rng.choice(CONTEXTS)
        if ctx:
            text = text[:-1] + ctx + text[-1]
        if text not in seen:
            seen.add(text)
            return text
    raise RuntimeError("ran out of distinct texts for " + word)


def nearest(v, a):
    return min(lex, key=lambda r: (float(r["valence"]) - v) ** 2 + (float(r["arousal"]) - a) ** 2)["token"]


def clamp(x):
    return min(1.0, max(0.0, x))


rng = random.Random(20250223)
rows = []
for _ in range(360):
    v = clamp(rng.betavariate(2.2, 2.0))
    a = clamp(0.2 + 1.7 * (v - 0.5) ** 2 + rng.gauss(0.0, 0.12))
    lang = "en" if rng.random() < 0.85 else rng.choice(LANGS)
    rows.append((utterance(nearest(v, a)), round(v, 4), round(a, 4), lang))
for vi in range(5):
    for ai in range(5):
        for _ in range(2):
            v = round(0.2 * vi + rng.uniform(0.02, 0.18), 4)
            a = round(0.2 * ai + rng.uniform(0.02, 0.18), 4)
            rows.append((utterance(nearest(v, a)), v, a, "en"))

with open(root / "data" / "demo_corpus.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["text", "valence", "arousal", "language"])
    w.writerows(rows)
