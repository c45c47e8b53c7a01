"""ASTE dataset model, the ``sentence####[...]`` reader/writer, and corpus statistics."""

from __future__ import annotations

import ast
import enum
import json
import warnings
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Tuple


class CorpusError(ValueError):
    """Raised for malformed dataset or prediction content."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Polarity(enum.Enum):
    POS = "POS"
    NEU = "NEU"
    NEG = "NEG"


class Split(enum.Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid span ({self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start + 1

    def __iter__(self):
        return iter(range(self.start, self.end + 1))

    def overlaps(self, other: "Span") -> bool:
        return self.start <= other.end and other.start <= self.end


_POLARITY_ORDER = {Polarity.POS: 0, Polarity.NEU: 1, Polarity.NEG: 2}


@dataclass(frozen=True)
class Triplet:
    aspect: Span
    opinion: Span
    polarity: Polarity

    def sort_key(self):
        return (self.aspect, self.opinion, _POLARITY_ORDER[self.polarity])

    def fits(self, n: int) -> bool:
        return self.aspect.end < n and self.opinion.end < n


def triplet(aspect, opinion, polarity) -> Triplet:
    """Shorthand constructor: ``triplet((0, 1), 4, "POS")``; an int is a one-token span."""

    def span(x):
        return Span(x, x) if isinstance(x, int) else Span(*x)

    return Triplet(span(aspect), span(opinion), Polarity(polarity))


@dataclass(frozen=True)
class Sentence:
    id: str
    text: str
    tokens: Tuple[str, ...]
    gold: FrozenSet[Triplet] = frozenset()

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")
        for t in self.gold:
            if not t.fits(len(self.tokens)):
                raise ValueError(f"sentence {self.id!r}: triplet {t} out of range")

    @property
    def n(self) -> int:
        return len(self.tokens)

    def sorted_gold(self) -> List[Triplet]:
        return sorted(self.gold, key=Triplet.sort_key)


@dataclass(frozen=True)
class Dataset:
    name: str
    split: Split
    sentences: Tuple[Sentence, ...] = ()

    def __post_init__(self):
        seen = set()
        for s in self.sentences:
            if s.id in seen:
                raise ValueError(f"duplicate sentence id {s.id!r}")
            seen.add(s.id)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def by_id(self) -> Dict[str, Sentence]:
        return {s.id: s for s in self.sentences}


@dataclass(frozen=True)
class DatasetStats:
    num_sentences: int = 0
    num_aspects: int = 0
    num_opinions: int = 0
    num_pos: int = 0
    num_neu: int = 0
    num_neg: int = 0
    num_triplets: int = 0

    def __add__(self, other: "DatasetStats") -> "DatasetStats":
        return DatasetStats(
            **{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)}
        )

    def to_dict(self) -> Dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# sentence id -> predicted triplets
PredictionSet = Dict[str, FrozenSet[Triplet]]


def tokenize(text: str) -> List[str]:
    return text.split()


def _parse_index_list(value, what: str, n: int, lineno: int) -> Span:
    if not isinstance(value, (list, tuple)) or not value:
        raise CorpusError(f"{what} index list must be a non-empty list", lineno)
    if not all(isinstance(i, int) and not isinstance(i, bool) for i in value):
        raise CorpusError(f"{what} index list must contain integers", lineno)
    for a, b in zip(value, value[1:]):
        if b != a + 1:
            raise CorpusError(f"{what} index list {list(value)} is not contiguous", lineno)
    if value[0] < 0 or value[-1] >= n:
        raise CorpusError(
            f"{what} index list {list(value)} out of range for {n} tokens", lineno
        )
    return Span(value[0], value[-1])


def parse_annotations(raw: str, n: int, lineno: int) -> FrozenSet[Triplet]:
    """Parse ``[([a..], [o..], 'POS'), ...]`` against a sentence of ``n`` tokens."""
    try:
        value = ast.literal_eval(raw.strip())
    except (ValueError, SyntaxError) as exc:
        raise CorpusError(f"malformed annotation list: {exc}", lineno) from None
    if not isinstance(value, list):
        raise CorpusError("annotation part must be a list", lineno)
    out: List[Triplet] = []
    for ann in value:
        if not isinstance(ann, tuple) or len(ann) != 3:
            raise CorpusError(f"annotation {ann!r} is not a 3-tuple", lineno)
        aspect = _parse_index_list(ann[0], "aspect", n, lineno)
        opinion = _parse_index_list(ann[1], "opinion", n, lineno)
        try:
            polarity = Polarity(ann[2])
        except ValueError:
            raise CorpusError(f"unknown polarity {ann[2]!r}", lineno) from None
        if aspect.overlaps(opinion):
            raise CorpusError(
                f"aspect {list(aspect)} overlaps opinion {list(opinion)}", lineno
            )
        out.append(Triplet(aspect, opinion, polarity))
    unique = frozenset(out)
    if len(unique) != len(out):
        warnings.warn(f"line {lineno}: duplicate triplets collapsed", stacklevel=3)
    return unique


def parse_aste_file(content: str, name: str = "", split: Split = Split.TRAIN) -> Dataset:
    """Read a ``sentence####[annotations]`` file.

    Sentence ids are the 0-based positions of the non-empty lines.
    """
    sentences = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        text, sep, raw = line.rpartition("####")
        if not sep:
            raise CorpusError("missing '####' separator", lineno)
        tokens = tokenize(text)
        if not tokens:
            raise CorpusError("empty sentence", lineno)
        gold = parse_annotations(raw, len(tokens), lineno)
        sentences.append(
            Sentence(str(len(sentences)), text.strip(), tuple(tokens), gold)
        )
    return Dataset(name, split, tuple(sentences))


def format_annotations(triplets: Iterable[Triplet]) -> str:
    parts = []
    for t in sorted(triplets, key=Triplet.sort_key):
        parts.append(f"({list(t.aspect)}, {list(t.opinion)}, '{t.polarity.value}')")
    return "[" + ", ".join(parts) + "]"


def serialize(d: Dataset) -> str:
    """Inverse of :func:`parse_aste_file` (up to annotation order)."""
    return "".join(
        f"{s.text}####{format_annotations(s.gold)}\n" for s in d.sentences
    )


def dataset_stats(d: Dataset) -> DatasetStats:
    counts = {p: 0 for p in Polarity}
    aspects = opinions = 0
    for s in d.sentences:
        aspects += len({t.aspect for t in s.gold})
        opinions += len({t.opinion for t in s.gold})
        for t in s.gold:
            counts[t.polarity] += 1
    return DatasetStats(
        num_sentences=len(d.sentences),
        num_aspects=aspects,
        num_opinions=opinions,
        num_pos=counts[Polarity.POS],
        num_neu=counts[Polarity.NEU],
        num_neg=counts[Polarity.NEG],
        num_triplets=sum(counts.values()),
    )


def load_predictions(content: str, d: Dataset) -> PredictionSet:
    """Read ``id<TAB>annotations`` lines; ids missing from the file predict nothing."""
    index = d.by_id()
    preds: PredictionSet = {s.id: frozenset() for s in d.sentences}
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        sid, sep, raw = line.partition("\t")
        if not sep:
            raise CorpusError("expected 'id<TAB>annotations'", lineno)
        sid = sid.strip()
        if sid not in index:
            raise CorpusError(f"unknown sentence id {sid!r}", lineno)
        preds[sid] = parse_annotations(raw, index[sid].n, lineno)
    return preds


def format_predictions(preds: PredictionSet) -> str:
    return "".join(f"{sid}\t{format_annotations(ts)}\n" for sid, ts in preds.items())


def read_dataset(path, split: Split = Split.TRAIN) -> Dataset:
    p = Path(path)
    return parse_aste_file(p.read_text(encoding="utf-8"), name=p.stem, split=split)


def gold_predictions(d: Dataset) -> PredictionSet:
    return {s.id: s.gold for s in d.sentences}
