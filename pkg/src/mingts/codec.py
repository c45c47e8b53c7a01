"""Triplet <-> tag-grid codec.

Each triplet occupies the rectangle ``aspect rows x opinion columns``.  Its
top-left cell carries the polarity label and every other cell of the rectangle
is ``CTD``; the diagonal is ``MSK`` and everything else ``BLANK``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, Iterable, List, Set, Tuple

import numpy as np

from .corpus import Polarity, Span, Triplet


class TagLabel(enum.IntEnum):
    BLANK = 0
    POS = 1
    NEU = 2
    NEG = 3
    CTD = 4
    MSK = 5


NUM_CLASSES = 5  # classifier labels; MSK is never predicted
SENTIMENT_LABELS = (TagLabel.POS, TagLabel.NEU, TagLabel.NEG)

_POLARITY_TO_LABEL = {
    Polarity.POS: TagLabel.POS,
    Polarity.NEU: TagLabel.NEU,
    Polarity.NEG: TagLabel.NEG,
}
_LABEL_TO_POLARITY = {v: k for k, v in _POLARITY_TO_LABEL.items()}

_SYMBOLS = {
    TagLabel.BLANK: ".",
    TagLabel.POS: "P",
    TagLabel.NEU: "U",
    TagLabel.NEG: "N",
    TagLabel.CTD: "C",
    TagLabel.MSK: "M",
}
_FROM_SYMBOL = {v: k for k, v in _SYMBOLS.items()}


class IssueKind(enum.Enum):
    OVERLAP = "OVERLAP"
    CONFUSION = "CONFUSION"
    CONFLICT = "CONFLICT"
    DANGLING_CTD = "DANGLING_CTD"
    DIAGONAL_HIT = "DIAGONAL_HIT"


@dataclass(frozen=True, order=True)
class DecodeIssue:
    row: int
    col: int
    kind: IssueKind

    @property
    def location(self) -> Tuple[int, int]:
        return (self.row, self.col)

    def to_dict(self):
        return {"kind": self.kind.value, "row": self.row, "col": self.col}


class CodecError(ValueError):
    """Raised by :func:`encode_grid` when the triplet set has no faithful grid."""

    def __init__(self, issues: List[DecodeIssue]):
        self.issues = issues
        kinds = {
            IssueKind.OVERLAP: "RECTANGLE_COLLISION",
            IssueKind.DIAGONAL_HIT: "DIAGONAL_HIT",
            IssueKind.CONFUSION: "CONFUSION",
        }
        desc = ", ".join(f"{kinds.get(i.kind, i.kind.value)} at {i.location}" for i in issues)
        super().__init__(desc)


def _sort_issues(issues: Iterable[DecodeIssue]) -> List[DecodeIssue]:
    return sorted(set(issues), key=lambda i: (i.row, i.col, i.kind.value))


def _cells(t: Triplet):
    for r in t.aspect:
        for c in t.opinion:
            yield r, c


def validate_triplets(n: int, triplets: Iterable[Triplet]) -> List[DecodeIssue]:
    """Issues that would stop ``triplets`` from round-tripping through a grid.

    * DIAGONAL_HIT: a rectangle contains a diagonal cell.
    * OVERLAP: two rectangles share a cell (reported once per pair, at the
      first shared cell in row-major order).
    * CONFUSION: a neighbouring rectangle's CTD cell sits right after the end
      of this triplet's top row or below the end of its left column, so the
      decoder's run would not stop at the true boundary.
    """
    ts = sorted(set(triplets), key=Triplet.sort_key)
    for t in ts:
        if not t.fits(n):
            raise ValueError(f"triplet {t} out of range for n={n}")
    issues: List[DecodeIssue] = []
    for t in ts:
        for r, c in _cells(t):
            if r == c:
                issues.append(DecodeIssue(r, c, IssueKind.DIAGONAL_HIT))
    for a in range(len(ts)):
        for b in range(a + 1, len(ts)):
            ta, tb = ts[a], ts[b]
            if ta.aspect.overlaps(tb.aspect) and ta.opinion.overlaps(tb.opinion):
                r = max(ta.aspect.start, tb.aspect.start)
                c = max(ta.opinion.start, tb.opinion.start)
                issues.append(DecodeIssue(r, c, IssueKind.OVERLAP))
    if issues:
        return _sort_issues(issues)

    owner: Dict[Tuple[int, int], int] = {}
    for k, t in enumerate(ts):
        for cell in _cells(t):
            owner[cell] = k
    corners = {(t.aspect.start, t.opinion.start) for t in ts}
    for k, t in enumerate(ts):
        for cell in ((t.aspect.start, t.opinion.end + 1), (t.aspect.end + 1, t.opinion.start)):
            if owner.get(cell, k) != k and cell not in corners:
                issues.append(DecodeIssue(cell[0], cell[1], IssueKind.CONFUSION))
    return _sort_issues(issues)


def _blank_grid(n: int) -> np.ndarray:
    g = np.full((n, n), TagLabel.BLANK, dtype=np.int8)
    np.fill_diagonal(g, TagLabel.MSK)
    return g


def encode_grid(n: int, triplets: Iterable[Triplet]) -> np.ndarray:
    """Build the ``n x n`` tag grid (int8 array of :class:`TagLabel` values)."""
    triplets = list(triplets)
    issues = validate_triplets(n, triplets)
    if issues:
        raise CodecError(issues)
    g = _blank_grid(n)
    for t in triplets:
        g[t.aspect.start : t.aspect.end + 1, t.opinion.start : t.opinion.end + 1] = TagLabel.CTD
        g[t.aspect.start, t.opinion.start] = _POLARITY_TO_LABEL[t.polarity]
    return g


def decode_grid(grid) -> Tuple[Set[Triplet], List[DecodeIssue]]:
    """Recover triplets from a (possibly inconsistent) grid.

    Row-major scan; each sentiment cell opens a rectangle whose width is the
    run of CTD cells to its right and whose height is the run of CTD cells
    below it.  The triplet is emitted only when every other cell of that
    rectangle is CTD.  Inconsistencies are returned as issues, never raised.
    """
    g = np.asarray(grid)
    n = g.shape[0]
    if g.shape != (n, n):
        raise ValueError(f"grid must be square, got {g.shape}")
    if n and not np.all(np.diagonal(g) == TagLabel.MSK):
        raise ValueError("grid diagonal must be MSK")

    ctd = g == TagLabel.CTD
    consumed = np.zeros((n, n), dtype=np.int32)
    triplets: Set[Triplet] = set()
    issues: List[DecodeIssue] = []

    rows, cols = np.nonzero((g >= TagLabel.POS) & (g <= TagLabel.NEG))
    for i, j in zip(rows.tolist(), cols.tolist()):
        j_end = j
        while j_end + 1 < n and ctd[i, j_end + 1]:
            j_end += 1
        i_end = i
        while i_end + 1 < n and ctd[i_end + 1, j]:
            i_end += 1
        block = ctd[i : i_end + 1, j : j_end + 1].copy()
        block[0, 0] = True
        if block.all():
            triplets.add(
                Triplet(Span(i, i_end), Span(j, j_end), _LABEL_TO_POLARITY[TagLabel(g[i, j])])
            )
            consumed[i : i_end + 1, j : j_end + 1] += 1
            continue
        # the runs stop at MSK, so a block never contains a diagonal cell
        for r, c in zip(*np.nonzero(~block)):
            issues.append(DecodeIssue(int(r) + i, int(c) + j, IssueKind.CONFLICT))

    for r, c in zip(*np.nonzero(consumed > 1)):
        issues.append(DecodeIssue(int(r), int(c), IssueKind.OVERLAP))
    for r, c in zip(*np.nonzero(ctd & (consumed == 0))):
        issues.append(DecodeIssue(int(r), int(c), IssueKind.DANGLING_CTD))
    return triplets, _sort_issues(issues)


def format_grid(grid) -> str:
    g = np.asarray(grid)
    return "".join(" ".join(_SYMBOLS[TagLabel(v)] for v in row) + "\n" for row in g)


def parse_grid(text: str) -> np.ndarray:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    n = len(rows)
    try:
        g = np.array([[_FROM_SYMBOL[s] for s in row] for row in rows], dtype=np.int8)
    except KeyError as exc:
        raise ValueError(f"unknown grid symbol {exc.args[0]!r}") from None
    if n == 0:
        return np.zeros((0, 0), dtype=np.int8)
    if g.ndim != 2 or g.shape != (n, n):
        raise ValueError("grid text must be a square matrix")
    return g
