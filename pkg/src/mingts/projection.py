"""PCA projection of token representations and class-separation statistics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .losses import TokenClass


@dataclass(frozen=True)
class ProjectedToken:
    sentence_id: str
    token_index: int
    token_class: TokenClass
    coords: tuple


@dataclass
class Projection:
    rows: List[ProjectedToken]
    explained_variance: np.ndarray  # per component, descending
    components: np.ndarray  # (k, d)

    def coordinates(self) -> np.ndarray:
        return np.array([r.coords for r in self.rows])

    def labels(self) -> List[TokenClass]:
        return [r.token_class for r in self.rows]

    def to_csv(self) -> str:
        k = self.components.shape[0]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sentence_id", "token_index", "class"] + [f"c{i + 1}" for i in range(k)])
        for r in self.rows:
            w.writerow([r.sentence_id, r.token_index, r.token_class.value] + [repr(float(c)) for c in r.coords])
        return buf.getvalue()


def principal_components(x: np.ndarray, k: int, rtol: float = 1e-10):
    """Top-``k`` eigenpairs of the sample covariance of ``x`` (rows are samples).

    Each direction is sign-fixed so its largest-magnitude coordinate is positive.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or not np.all(np.isfinite(x)):
        raise ValueError("expected a finite 2-D array")
    m, d = x.shape
    if not 1 <= k <= d:
        raise ValueError(f"k must be in 1..{d}, got {k}")
    if m < k + 1:
        raise ValueError(f"need at least {k + 1} vectors, got {m}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (m - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    rank = int(np.sum(evals > rtol * max(evals[0], np.finfo(float).tiny)))
    if k > rank:
        raise ValueError(f"k={k} exceeds the rank ({rank}) of the centered data")
    comps = evecs[:, :k].T.copy()
    for c in comps:
        if c[np.argmax(np.abs(c))] < 0:
            c *= -1
    return centered @ comps.T, evals[:k], comps


def pca_project(
    vectors: np.ndarray,
    labels: Sequence[TokenClass],
    k: int = 3,
    sentence_ids: Sequence[str] | None = None,
    token_indices: Sequence[int] | None = None,
) -> Projection:
    vectors = np.asarray(vectors, dtype=np.float64)
    if len(labels) != len(vectors):
        raise ValueError("one label per vector required")
    coords, variances, comps = principal_components(vectors, k)
    sentence_ids = sentence_ids if sentence_ids is not None else [""] * len(vectors)
    token_indices = token_indices if token_indices is not None else range(len(vectors))
    rows = [
        ProjectedToken(str(sid), int(ti), lab, tuple(float(v) for v in c))
        for sid, ti, lab, c in zip(sentence_ids, token_indices, labels, coords)
    ]
    return Projection(rows, variances, comps)


def class_separation(vectors: np.ndarray, labels: Sequence[TokenClass]) -> float:
    """Mean intra-class minus mean inter-class cosine similarity over all distinct pairs."""
    x = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    u = x / np.where(norms > 0, norms, 1.0)
    sim = u @ u.T
    lab = np.array([l.value for l in labels])
    same = lab[:, None] == lab[None, :]
    upper = np.triu(np.ones_like(sim, dtype=bool), k=1)
    intra, inter = sim[upper & same], sim[upper & ~same]
    if intra.size == 0 or inter.size == 0:
        raise ValueError("need at least one intra-class and one inter-class pair")
    return float(intra.mean() - inter.mean())
