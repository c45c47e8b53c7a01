"""Tagging and contrastive objectives with hand-derived gradients (numpy)."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, Sequence, Union

import numpy as np

from .codec import NUM_CLASSES, TagLabel
from .corpus import Polarity, Triplet

EPS = 1e-12

Gradient = Union[np.ndarray, Dict[str, np.ndarray]]


@dataclass
class LossResult:
    value: float
    gradient: Gradient


@dataclass
class FocalParams:
    alpha: Sequence[float] = (1.0, 1.0, 1.0, 1.0, 1.0)
    gamma: float = 2.0

    def __post_init__(self):
        self.alpha = tuple(float(a) for a in self.alpha)
        if len(self.alpha) != NUM_CLASSES:
            raise ValueError(f"alpha needs {NUM_CLASSES} entries, got {len(self.alpha)}")
        if any(a < 0 for a in self.alpha) or not any(a > 0 for a in self.alpha):
            raise ValueError("alpha entries must be >= 0 and not all zero")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def focal_loss(
    probs: np.ndarray, gold: np.ndarray, fp: FocalParams, normalize: str = "cells"
) -> LossResult:
    """Focal loss over the non-MSK cells of a grid.

    ``probs`` is ``(n, n, 5)``; the returned gradient is with respect to the
    pre-softmax logits that produced it (zero on the diagonal).  ``normalize``
    is ``"cells"`` (divide by the number of non-MSK cells) or ``"full"``
    (divide by n**2).
    """
    probs = np.asarray(probs, dtype=np.float64)
    gold = np.asarray(gold)
    n = gold.shape[0]
    if probs.shape != (n, n, NUM_CLASSES):
        raise ValueError(f"probs shape {probs.shape} does not match grid size {n}")
    live = gold != TagLabel.MSK
    if normalize == "cells":
        denom = int(live.sum())
    elif normalize == "full":
        denom = n * n
    else:
        raise ValueError(f"unknown normalization {normalize!r}")
    grad = np.zeros_like(probs)
    if denom == 0:
        return LossResult(0.0, grad)

    alpha = np.asarray(fp.alpha)
    rows, cols = np.nonzero(live)
    labels = gold[rows, cols].astype(np.intp)
    p = probs[rows, cols]  # (K, 5)
    pt = p[np.arange(len(labels)), labels]
    if np.any(pt < EPS):
        warnings.warn(f"{int((pt < EPS).sum())} gold probabilities clamped to {EPS}")
        pt = np.maximum(pt, EPS)
    a = alpha[labels]
    g = fp.gamma
    q = 1.0 - pt
    log_pt = np.log(pt)
    value = float(-(a * q**g * log_pt).sum() / denom)

    # f(pt) = -a q^g log pt;  d f / d z_k = f'(pt) * pt * (delta_kt - p_k)
    # f'(pt) * pt = a * (g q^(g-1) pt log pt - q^g); the first term -> 0 as q -> 0
    if g == 0:
        first = np.zeros_like(pt)
    else:
        safe_q = np.where(q > 0, q, 1.0)
        first = np.where(q > 0, g * safe_q ** (g - 1) * pt * log_pt, 0.0)
    dpt = a * (first - q**g)
    onehot = np.zeros_like(p)
    onehot[np.arange(len(labels)), labels] = 1.0
    grad[rows, cols] = dpt[:, None] * (onehot - p) / denom
    return LossResult(value, grad)


class TokenClass(enum.Enum):
    ASPECT = "ASPECT"
    OPINION = "OPINION"
    OTHER = "OTHER"
    # polarity-split opinion classes (opt-in)
    OPINION_POS = "OPINION_POS"
    OPINION_NEU = "OPINION_NEU"
    OPINION_NEG = "OPINION_NEG"


_SPLIT_OPINION = {
    Polarity.POS: TokenClass.OPINION_POS,
    Polarity.NEU: TokenClass.OPINION_NEU,
    Polarity.NEG: TokenClass.OPINION_NEG,
}


def token_classes(
    n: int, triplets: Iterable[Triplet], split_opinions: bool = False
) -> list:
    """Per-token class from gold triplets; aspect membership wins over opinion."""
    classes = [TokenClass.OTHER] * n
    triplets = sorted(triplets, key=Triplet.sort_key)
    for t in triplets:
        for i in t.opinion:
            classes[i] = _SPLIT_OPINION[t.polarity] if split_opinions else TokenClass.OPINION
    for t in triplets:
        for i in t.aspect:
            classes[i] = TokenClass.ASPECT
    return classes


# ContrastiveMask entries
PULL, PUSH, MASKED = 1, -1, 0


def build_contrastive_mask(classes: Sequence[TokenClass]) -> np.ndarray:
    """``n x n`` int8 matrix: PULL (+1) / PUSH (-1) above the diagonal, 0 elsewhere."""
    if not classes:
        raise ValueError("classes must be non-empty")
    labels = np.array([c.value for c in classes])
    same = labels[:, None] == labels[None, :]
    m = np.where(same, PULL, PUSH).astype(np.int8)
    return np.triu(m, k=1)


def _symmetric_pairs(mask: np.ndarray):
    m = np.triu(np.asarray(mask), k=1)
    m = m + m.T
    return m == PULL, m == PUSH


def infonce_loss(h: np.ndarray, mask: np.ndarray, tau: float = 1.0) -> LossResult:
    """Cosine-similarity InfoNCE; every anchor averages over all of its positives.

    Anchors without a PULL partner are skipped; the value is the mean over the
    remaining anchors.  Gradient is with respect to ``h``.
    """
    h = np.asarray(h, dtype=np.float64)
    if tau <= 0:
        raise ValueError("tau must be positive")
    pos, neg = _symmetric_pairs(mask)
    anchors = np.nonzero(pos.any(axis=1))[0]
    grad = np.zeros_like(h)
    if len(anchors) == 0:
        return LossResult(0.0, grad)

    participating = pos[anchors].any(axis=0) | neg[anchors].any(axis=0)
    participating[anchors] = True
    norms = np.linalg.norm(h, axis=1)
    bad = np.nonzero(participating & (norms == 0))[0]
    if len(bad):
        raise ValueError(f"zero-norm representation at token {int(bad[0])}")
    safe = np.where(norms > 0, norms, 1.0)
    u = h / safe[:, None]
    a = (u @ u.T) / tau

    total = 0.0
    ga = np.zeros_like(a)  # dL/da
    for i in anchors:
        p_idx = np.nonzero(pos[i])[0]
        q_idx = np.nonzero(neg[i])[0]
        # stabilized: shift by max of involved logits
        shift = a[i, np.concatenate([p_idx, q_idx])].max()
        e_neg = np.exp(a[i, q_idx] - shift)
        s_neg = e_neg.sum()
        e_pos = np.exp(a[i, p_idx] - shift)
        denom = e_pos + s_neg
        total += float(np.mean(np.log(denom) - (a[i, p_idx] - shift)))
        w = 1.0 / len(p_idx)
        ga[i, p_idx] += w * (e_pos / denom - 1.0)
        ga[i, q_idx] += w * e_neg * (1.0 / denom).sum()
    k = len(anchors)
    value = total / k
    ga /= k * tau

    # a_ij = u_i . u_j / tau ; dL/du = (G + G^T) u ; project out the radial part
    du = (ga + ga.T) @ u
    radial = np.sum(du * u, axis=1, keepdims=True)
    grad = (du - radial * u) / safe[:, None]
    return LossResult(value, grad)


def masked_distance_loss(h: np.ndarray, mask: np.ndarray, margin: float = 1.0) -> LossResult:
    """Mean squared distance over PULL pairs plus mean hinge ``max(0, margin - d^2)`` over PUSH pairs."""
    h = np.asarray(h, dtype=np.float64)
    if margin <= 0:
        raise ValueError("margin must be positive")
    m = np.triu(np.asarray(mask), k=1)
    diff = h[:, None, :] - h[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    pull = m == PULL
    push = m == PUSH
    coef = np.zeros_like(d2)  # dL / d(d2_ij)
    value = 0.0
    if pull.any():
        value += float(d2[pull].sum() / pull.sum())
        coef[pull] = 1.0 / pull.sum()
    if push.any():
        slack = margin - d2
        active = push & (slack > 0)
        value += float(slack[active].sum() / push.sum())
        coef[active] = -1.0 / push.sum()
    # d(d2_ij)/dh_i = 2 (h_i - h_j), d/dh_j = -2 (h_i - h_j)
    w = coef + coef.T
    grad = 2.0 * (w.sum(axis=1)[:, None] * h - w @ h)
    return LossResult(value, grad)


def _add(a: Gradient, b: Gradient, beta: float) -> Gradient:
    if isinstance(a, dict) or isinstance(b, dict):
        if not (isinstance(a, dict) and isinstance(b, dict)):
            raise TypeError("cannot combine a named gradient with a bare array")
        out = {k: np.array(v, dtype=np.float64) for k, v in a.items()}
        for k, v in b.items():
            out[k] = out[k] + beta * v if k in out else beta * np.asarray(v, dtype=np.float64)
        return out
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"gradient shapes differ: {a.shape} vs {b.shape}")
    return a + beta * b


def total_loss(tag: LossResult, contrast: LossResult, beta: float) -> LossResult:
    """``tag + beta * contrast``; named gradients are summed per parameter."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    return LossResult(tag.value + beta * contrast.value, _add(tag.gradient, contrast.gradient, beta))
