"""Exact-match precision/recall/F1 for triplets, element combinations and subtasks."""

from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping

from .corpus import Dataset, PredictionSet, Triplet


@dataclass(frozen=True)
class MatchCounts:
    num_gold: int
    num_pred: int
    num_matched: int

    def __post_init__(self):
        if self.num_matched > min(self.num_gold, self.num_pred):
            raise ValueError(f"inconsistent counts {self}")

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(
            self.num_gold + other.num_gold,
            self.num_pred + other.num_pred,
            self.num_matched + other.num_matched,
        )


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    counts: MatchCounts | None = None

    def as_tuple(self):
        return (self.precision, self.recall, self.f1)

    def to_dict(self) -> dict:
        out = {"precision": self.precision, "recall": self.recall, "f1": self.f1}
        if self.counts is not None:
            out.update(
                num_gold=self.counts.num_gold,
                num_pred=self.counts.num_pred,
                num_matched=self.counts.num_matched,
            )
        return out


class ElementCombo(enum.Enum):
    AOS = "AOS"
    AO = "AO"
    AS = "AS"
    OS = "OS"
    A = "A"
    O = "O"
    S = "S"

    def project(self, t: Triplet):
        parts = {"A": t.aspect, "O": t.opinion, "S": t.polarity}
        return tuple(parts[c] for c in self.value)


class Subtask(enum.Enum):
    AE = "AE"
    OE = "OE"
    AOPE = "AOPE"


SUBTASK_COMBO = {Subtask.AE: ElementCombo.A, Subtask.OE: ElementCombo.O, Subtask.AOPE: ElementCombo.AO}


def match_exact(gold: Iterable, pred: Iterable) -> MatchCounts:
    gold, pred = set(gold), set(pred)
    return MatchCounts(len(gold), len(pred), len(gold & pred))


def prf1(c: MatchCounts) -> Metrics:
    p = c.num_matched / c.num_pred if c.num_pred else 0.0
    r = c.num_matched / c.num_gold if c.num_gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return Metrics(p, r, f, c)


def _check_aligned(gold: Dataset, pred: Mapping[str, Iterable[Triplet]]) -> None:
    ids = {s.id for s in gold}
    extra = sorted(set(pred) - ids)
    if extra:
        raise ValueError(f"predictions reference unknown sentence ids: {extra[:5]}")


def combo_counts(
    gold: Dataset, pred: PredictionSet, combo: ElementCombo, parallel: bool = False
) -> MatchCounts:
    """Counts micro-summed over sentences after projecting and de-duplicating each side."""
    _check_aligned(gold, pred)

    def one(s):
        g = {combo.project(t) for t in s.gold}
        p = {combo.project(t) for t in pred.get(s.id, ())}
        return match_exact(g, p)

    if parallel:
        with ThreadPoolExecutor() as pool:
            per_sentence = list(pool.map(one, gold.sentences))
    else:
        per_sentence = [one(s) for s in gold.sentences]
    total = MatchCounts(0, 0, 0)
    for c in per_sentence:
        total = total + c
    return total


def combo_metrics(
    gold: Dataset, pred: PredictionSet, combo: ElementCombo, parallel: bool = False
) -> Metrics:
    return prf1(combo_counts(gold, pred, combo, parallel))


def triplet_metrics(gold: Dataset, pred: PredictionSet) -> Metrics:
    _check_aligned(gold, pred)
    total = MatchCounts(0, 0, 0)
    for s in gold:
        total = total + match_exact(s.gold, pred.get(s.id, ()))
    return prf1(total)


def subtask_metrics(
    gold: Dataset, pred: PredictionSet, subtask: Subtask, parallel: bool = False
) -> Metrics:
    return combo_metrics(gold, pred, SUBTASK_COMBO[Subtask(subtask)], parallel)


def metrics_report(
    gold: Dataset,
    pred: PredictionSet,
    combos: Iterable[ElementCombo] = tuple(ElementCombo),
    subtasks: Iterable[Subtask] = tuple(Subtask),
    parallel: bool = False,
) -> Dict[str, dict]:
    return {
        "triplet": triplet_metrics(gold, pred).to_dict(),
        "combos": {c.value: combo_metrics(gold, pred, c, parallel).to_dict() for c in combos},
        "subtasks": {t.value: subtask_metrics(gold, pred, t, parallel).to_dict() for t in subtasks},
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
