"""Toy contextual encoder, pairwise tag head, and the joint training loop.

Everything is plain numpy with explicit backprop so the full objective
(focal tagging loss + weighted contrastive loss) stays inspectable.
"""

from __future__ import annotations

import copy
import dataclasses
import enum
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import losses
from .codec import NUM_CLASSES, DecodeIssue, TagLabel, decode_grid, encode_grid, validate_triplets
from .corpus import Dataset, Sentence
from .losses import FocalParams, LossResult
from .metrics import MatchCounts, match_exact, prf1

log = logging.getLogger(__name__)

UNK = "<unk>"
CHECKPOINT_VERSION = 1


class Variant(enum.Enum):
    INFONCE = "infonce"
    MASKED_DISTANCE = "masked_distance"


class ConfigError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class ModelConfig:
    d: int = 32
    window: int = 2
    seed: int = 0
    lr_encoder: float = 1e-5
    lr_head: float = 1e-3
    beta: float = 1.0
    variant: Variant = Variant.INFONCE
    tau: float = 1.0
    margin: float = 1.0
    epochs: int = 10
    # None -> inverse label frequency of the training grids, mean-normalized to 1
    focal_alpha: Optional[Tuple[float, ...]] = None
    focal_gamma: float = 2.0
    split_opinions: bool = False
    init_scale: float = 0.1

    def __post_init__(self):
        if isinstance(self.variant, str):
            try:
                self.variant = Variant(self.variant.lower())
            except ValueError:
                raise ConfigError(f"variant: unknown value {self.variant!r}") from None
        if self.focal_alpha is not None:
            self.focal_alpha = tuple(float(a) for a in self.focal_alpha)
        self.validate()

    def validate(self):
        checks = [
            ("d", self.d >= 2, "must be >= 2"),
            ("window", self.window >= 0, "must be >= 0"),
            ("lr_encoder", self.lr_encoder > 0, "must be positive"),
            ("lr_head", self.lr_head > 0, "must be positive"),
            ("beta", self.beta >= 0, "must be >= 0"),
            ("tau", self.tau > 0, "must be positive"),
            ("margin", self.margin > 0, "must be positive"),
            ("epochs", self.epochs >= 0, "must be >= 0"),
            ("focal_gamma", self.focal_gamma >= 0, "must be >= 0"),
            ("init_scale", self.init_scale > 0, "must be positive"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(f"{name}: {msg} (got {getattr(self, name)!r})")
        if self.focal_alpha is not None:
            try:
                FocalParams(self.focal_alpha, self.focal_gamma)
            except ValueError as exc:
                raise ConfigError(f"focal_alpha: {exc}") from None

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["variant"] = self.variant.value
        if self.focal_alpha is not None:
            out["focal_alpha"] = list(self.focal_alpha)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class ToyEncoder:
    """``h_i = emb[x_i] + mix @ mean(emb[x_{i-w..i+w}])``."""

    vocab: Dict[str, int]
    emb: np.ndarray
    mix: np.ndarray
    window: int

    @property
    def d(self) -> int:
        return self.emb.shape[1]

    def ids(self, tokens: Sequence[str]) -> np.ndarray:
        unk = self.vocab[UNK]
        return np.array([self.vocab.get(t, unk) for t in tokens], dtype=np.intp)


@dataclass
class PairHead:
    weight: np.ndarray  # (2d, 5)
    bias: np.ndarray  # (5,)


def build_vocab(data: Dataset) -> Dict[str, int]:
    words = sorted({tok for s in data for tok in s.tokens})
    vocab = {UNK: 0}
    for w in words:
        vocab.setdefault(w, len(vocab))
    return vocab


def init_model(cfg: ModelConfig, vocab: Dict[str, int]) -> Tuple[ToyEncoder, PairHead]:
    rng = np.random.default_rng(cfg.seed)
    d = cfg.d
    emb = rng.normal(0.0, 1.0 / math.sqrt(d), size=(len(vocab), d))
    mix = rng.normal(0.0, cfg.init_scale / math.sqrt(d), size=(d, d))
    weight = rng.normal(0.0, cfg.init_scale / math.sqrt(2 * d), size=(2 * d, NUM_CLASSES))
    return ToyEncoder(vocab, emb, mix, cfg.window), PairHead(weight, np.zeros(NUM_CLASSES))


def _window_matrix(n: int, window: int) -> np.ndarray:
    a = np.zeros((n, n))
    for i in range(n):
        lo, hi = max(0, i - window), min(n, i + window + 1)
        a[i, lo:hi] = 1.0 / (hi - lo)
    return a


def encode_tokens(enc: ToyEncoder, ids) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.intp)
    if ids.size and (ids.min() < 0 or ids.max() >= enc.emb.shape[0]):
        raise ValueError("token id outside the vocabulary")
    e = enc.emb[ids]
    ctx = _window_matrix(len(ids), enc.window) @ e
    return e + ctx @ enc.mix.T


def pair_logits(head: PairHead, h: np.ndarray) -> np.ndarray:
    d = h.shape[1]
    left = h @ head.weight[:d]
    right = h @ head.weight[d:]
    return left[:, None, :] + right[None, :, :] + head.bias


def predict_grid(head: PairHead, h: np.ndarray) -> np.ndarray:
    """``(n, n, 5)`` label probabilities; diagonal cells are zero."""
    probs = losses.softmax(pair_logits(head, h))
    idx = np.arange(h.shape[0])
    probs[idx, idx] = 0.0
    return probs


def argmax_grid(probs: np.ndarray) -> np.ndarray:
    g = np.argmax(probs, axis=-1).astype(np.int8)  # first max wins: BLANK < POS < ... < CTD
    np.fill_diagonal(g, TagLabel.MSK)
    return g


def predict_triplets(
    enc: ToyEncoder, head: PairHead, sentence: Sentence
) -> Tuple[set, List[DecodeIssue]]:
    h = encode_tokens(enc, enc.ids(sentence.tokens))
    return decode_grid(argmax_grid(predict_grid(head, h)))


@dataclass
class StepResult:
    tag: float
    contrast: float
    total: float
    grads: Dict[str, np.ndarray]


def loss_and_grads(
    enc: ToyEncoder,
    head: PairHead,
    ids: np.ndarray,
    gold_grid: np.ndarray,
    mask: np.ndarray,
    cfg: ModelConfig,
    focal: FocalParams,
) -> StepResult:
    """Forward pass plus exact gradients for every parameter."""
    d = enc.d
    e = enc.emb[ids]
    a = _window_matrix(len(ids), enc.window)
    ctx = a @ e
    h = e + ctx @ enc.mix.T

    probs = losses.softmax(pair_logits(head, h))
    tag = losses.focal_loss(probs, gold_grid, focal)
    dz = tag.gradient
    row, col = dz.sum(axis=1), dz.sum(axis=0)
    head_grads = {
        "weight": np.vstack([h.T @ row, h.T @ col]),
        "bias": dz.sum(axis=(0, 1)),
    }
    dh_tag = row @ head.weight[:d].T + col @ head.weight[d:].T
    tag = LossResult(tag.value, {"h": dh_tag, **head_grads})

    if cfg.variant is Variant.INFONCE:
        contrast = losses.infonce_loss(h, mask, cfg.tau)
    else:
        contrast = losses.masked_distance_loss(h, mask, cfg.margin)
    total = losses.total_loss(tag, LossResult(contrast.value, {"h": contrast.gradient}), cfg.beta)

    dh = total.gradient["h"]
    dmix = dh.T @ ctx
    de = dh + a.T @ (dh @ enc.mix)
    demb = np.zeros_like(enc.emb)
    np.add.at(demb, ids, de)
    grads = {"emb": demb, "mix": dmix, "weight": total.gradient["weight"], "bias": total.gradient["bias"]}
    return StepResult(tag.value, contrast.value, total.value, grads)


def inverse_frequency_alpha(grids: Sequence[np.ndarray]) -> Tuple[float, ...]:
    counts = np.ones(NUM_CLASSES)  # add-one smoothing keeps absent labels finite
    for g in grids:
        counts += np.bincount(g[g < NUM_CLASSES].astype(np.intp), minlength=NUM_CLASSES)
    inv = 1.0 / counts
    return tuple(float(x) for x in inv * NUM_CLASSES / inv.sum())


@dataclass
class EpochRecord:
    epoch: int
    tag_loss: float
    contrastive_loss: float
    total_loss: float
    train_f1: float
    dev_f1: Optional[float] = None


@dataclass
class TrainReport:
    seed: int
    records: List[EpochRecord] = field(default_factory=list)
    checksum: str = ""
    selected_epoch: Optional[int] = None
    focal_alpha: Tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "focal_alpha": list(self.focal_alpha),
            "selected_epoch": self.selected_epoch,
            "checksum": self.checksum,
            "records": [dataclasses.asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def final_train_f1(self) -> float:
        return self.records[-1].train_f1 if self.records else 0.0


def parameters_checksum(enc: ToyEncoder, head: PairHead) -> str:
    digest = hashlib.sha256()
    for arr in (enc.emb, enc.mix, head.weight, head.bias):
        digest.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return digest.hexdigest()


def triplet_f1(enc: ToyEncoder, head: PairHead, data: Dataset) -> float:
    counts = MatchCounts(0, 0, 0)
    for s in data:
        pred, _ = predict_triplets(enc, head, s)
        counts = counts + match_exact(s.gold, pred)
    return prf1(counts).f1


def _prepare(data: Dataset, enc: ToyEncoder, cfg: ModelConfig):
    prepared = []
    for s in data:
        issues = validate_triplets(s.n, s.gold)
        if issues:
            raise ValueError(f"sentence {s.id!r}: invalid gold triplets: {issues}")
        classes = losses.token_classes(s.n, s.gold, cfg.split_opinions)
        prepared.append(
            (enc.ids(s.tokens), encode_grid(s.n, s.gold), losses.build_contrastive_mask(classes))
        )
    return prepared


def train(
    cfg: ModelConfig, data: Dataset, dev: Optional[Dataset] = None
) -> Tuple[ToyEncoder, PairHead, TrainReport]:
    """Per-sentence gradient descent for ``cfg.epochs`` epochs, in data order.

    With ``dev`` the parameters from the epoch with the best dev triplet F1
    are returned (earliest on ties); otherwise the last epoch's.
    """
    if len(data) == 0:
        raise ValueError("training data is empty")
    enc, head = init_model(cfg, build_vocab(data))
    prepared = _prepare(data, enc, cfg)
    if cfg.focal_alpha is None:
        alpha = inverse_frequency_alpha([g for _, g, _ in prepared])
    else:
        alpha = cfg.focal_alpha
    focal = FocalParams(alpha, cfg.focal_gamma)
    report = TrainReport(seed=cfg.seed, focal_alpha=alpha)

    best = None
    for epoch in range(1, cfg.epochs + 1):
        tags, contrasts, totals = [], [], []
        for (ids, grid, mask), s in zip(prepared, data):
            step = loss_and_grads(enc, head, ids, grid, mask, cfg, focal)
            if not math.isfinite(step.total):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, sentence {s.id!r} "
                    f"(tag={step.tag}, contrast={step.contrast})"
                )
            enc.emb -= cfg.lr_encoder * step.grads["emb"]
            enc.mix -= cfg.lr_encoder * step.grads["mix"]
            head.weight -= cfg.lr_head * step.grads["weight"]
            head.bias -= cfg.lr_head * step.grads["bias"]
            tags.append(step.tag)
            contrasts.append(step.contrast)
            totals.append(step.total)
        n = len(prepared)
        record = EpochRecord(
            epoch,
            math.fsum(tags) / n,
            math.fsum(contrasts) / n,
            math.fsum(totals) / n,
            triplet_f1(enc, head, data),
        )
        if dev is not None:
            record.dev_f1 = triplet_f1(enc, head, dev)
            if best is None or record.dev_f1 > best[0]:
                best = (record.dev_f1, epoch, copy.deepcopy(enc), copy.deepcopy(head))
        report.records.append(record)
        log.info(
            "epoch %d tag=%.5f contrast=%.5f total=%.5f train_f1=%.4f",
            epoch, record.tag_loss, record.contrastive_loss, record.total_loss, record.train_f1,
        )

    if best is not None:
        _, report.selected_epoch, enc, head = best
    elif report.records:
        report.selected_epoch = report.records[-1].epoch
    report.checksum = parameters_checksum(enc, head)
    return enc, head, report


def save_checkpoint(path, cfg: ModelConfig, enc: ToyEncoder, head: PairHead) -> None:
    """JSON checkpoint; floats are written with ``repr`` precision, so reloads are bit-exact."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": cfg.to_dict(),
        "vocab": enc.vocab,
        "emb": enc.emb.tolist(),
        "mix": enc.mix.tolist(),
        "head_weight": head.weight.tolist(),
        "head_bias": head.bias.tolist(),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def load_checkpoint(path) -> Tuple[ModelConfig, ToyEncoder, PairHead]:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    cfg = ModelConfig.from_dict(payload["config"])
    enc = ToyEncoder(
        payload["vocab"],
        np.array(payload["emb"], dtype=np.float64),
        np.array(payload["mix"], dtype=np.float64),
        cfg.window,
    )
    head = PairHead(
        np.array(payload["head_weight"], dtype=np.float64),
        np.array(payload["head_bias"], dtype=np.float64),
    )
    return cfg, enc, head
