"""Seeded templated ASTE corpus for desk-scale training runs.

Sentences pairing two different aspects with two different opinions always
use two different polarities: a pair head that sums a row score and a column
score cannot reject the cross pairs when both triplets share a polarity.
"""

from __future__ import annotations

import random
from typing import List, Tuple

from .corpus import Dataset, Polarity, Sentence, Span, Split, Triplet

ASPECTS = [
    "food", "service", "staff", "pasta", "pizza", "wine", "decor", "waiter",
    "fish tacos", "wine list", "sushi rolls",
]
OPINIONS = {
    Polarity.POS: ["great", "delicious", "friendly", "amazing", "excellent", "really good"],
    Polarity.NEG: ["slow", "rude", "bland", "awful", "overpriced", "too salty"],
    Polarity.NEU: ["okay", "average", "just fine"],
}

TEMPLATE_WEIGHTS = {
    "copula": 30,
    "prenominal": 15,
    "contrast": 20,
    "two_opinions": 15,
    "two_aspects": 10,
    "no_triplet": 10,
}

DEFAULT_SEED = 20240601


class _Builder:
    def __init__(self):
        self.tokens: List[str] = []
        self.marks = {}

    def add(self, text: str, key: str | None = None):
        words = text.split()
        start = len(self.tokens)
        self.tokens.extend(words)
        if key is not None:
            self.marks[key] = Span(start, start + len(words) - 1)
        return self


def _pick_opinion(rng: random.Random, polarity: Polarity | None = None, exclude=()) -> Tuple[str, Polarity]:
    if polarity is None:
        polarity = rng.choice([Polarity.POS, Polarity.POS, Polarity.NEG, Polarity.NEG, Polarity.NEU])
    word = rng.choice([w for w in OPINIONS[polarity] if w not in exclude])
    return word, polarity


def _sentence(rng: random.Random, template: str):
    b = _Builder()
    trip = []
    if template == "copula":
        a = rng.choice(ASPECTS)
        o, pol = _pick_opinion(rng)
        verb = "were" if a.endswith("s") else "was"
        b.add("the").add(a, "a").add(verb).add(o, "o").add(".")
        trip.append(("a", "o", pol))
    elif template == "prenominal":
        a = rng.choice(ASPECTS)
        o, pol = _pick_opinion(rng)
        b.add(o, "o").add(a, "a").add("!")
        trip.append(("a", "o", pol))
    elif template == "contrast":
        a1, a2 = rng.sample(ASPECTS, 2)
        p1, p2 = rng.sample([Polarity.POS, Polarity.NEG, Polarity.NEU], 2)
        o1, _ = _pick_opinion(rng, p1)
        o2, _ = _pick_opinion(rng, p2)
        b.add("the").add(a1, "a1").add("was").add(o1, "o1")
        b.add("but").add("the").add(a2, "a2").add("was").add(o2, "o2").add(".")
        trip += [("a1", "o1", p1), ("a2", "o2", p2)]
    elif template == "two_opinions":
        a = rng.choice(ASPECTS)
        o1, p1 = _pick_opinion(rng)
        o2, p2 = _pick_opinion(rng, exclude=(o1,))
        b.add("the").add(a, "a").add("was").add(o1, "o1").add("and").add(o2, "o2").add(".")
        trip += [("a", "o1", p1), ("a", "o2", p2)]
    elif template == "two_aspects":
        a1, a2 = rng.sample(ASPECTS, 2)
        o, pol = _pick_opinion(rng)
        b.add("the").add(a1, "a1").add("and").add("the").add(a2, "a2").add("were").add(o, "o").add(".")
        trip += [("a1", "o", pol), ("a2", "o", pol)]
    elif template == "no_triplet":
        b.add("we").add("ordered").add("the").add(rng.choice(ASPECTS)).add(".")
    else:
        raise ValueError(f"unknown template {template!r}")
    gold = frozenset(Triplet(b.marks[a], b.marks[o], p) for a, o, p in trip)
    return b.tokens, gold


def generate_corpus(seed: int = DEFAULT_SEED, size: int = 50, name: str = "synthetic") -> Dataset:
    """Deterministic templated dataset; identical for identical ``(seed, size)``."""
    rng = random.Random(seed)
    names, weights = zip(*TEMPLATE_WEIGHTS.items())
    sentences = []
    seen = set()
    while len(sentences) < size:
        tokens, gold = _sentence(rng, rng.choices(names, weights)[0])
        text = " ".join(tokens)
        if text in seen:
            continue
        seen.add(text)
        sentences.append(Sentence(str(len(sentences)), text, tuple(tokens), gold))
    return Dataset(name, Split.TRAIN, tuple(sentences))
