"""Minimalist grid tagging scheme for aspect sentiment triplet extraction."""

from .codec import DecodeIssue, IssueKind, TagLabel, decode_grid, encode_grid, validate_triplets
from .corpus import Dataset, Polarity, Sentence, Span, Triplet, dataset_stats, parse_aste_file, tokenize
from .losses import FocalParams, TokenClass, build_contrastive_mask, focal_loss, infonce_loss, masked_distance_loss, total_loss
from .metrics import ElementCombo, Subtask, combo_metrics, match_exact, prf1, subtask_metrics
from .model import ModelConfig, predict_triplets, train

__version__ = "0.1.0"
