"""Mask-predict iterative decoding with piece merging."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import MASK, PAD, SOP, LENGTH, ScoredToken, token_ids
from .lenadjust import AdjustConfig, adjust_length
from .merge import EMPTY_SPAN_SCORE, MergeConfig, merge_all
from .model import Model, pieces_from_outputs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecodeConfig:
    iterations: int = 4
    K: int | None = None  # None: the model's K
    length_offset: int = 0
    rel_tolerance: float = 0.05
    empty_span_score: float = EMPTY_SPAN_SCORE
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def predict_length(length_logits: np.ndarray, offset: int = 0) -> int:
    """Single length candidate: argmax class (1-based) plus offset, clamped."""
    max_len = len(length_logits)
    return int(min(max(int(np.argmax(length_logits)) + 1 + offset, 1), max_len))


def mask_lowest(seq: Sequence[ScoredToken], n: int) -> list[ScoredToken]:
    """Replace the ``n`` lowest-scoring tokens by MASK; ties mask the leftmost."""
    if not 0 <= n <= len(seq):
        raise ValueError("mask count out of range")
    order = sorted(range(len(seq)), key=lambda i: (seq[i].score, i))[:n]
    out = list(seq)
    for i in order:
        t = out[i]
        out[i] = ScoredToken(MASK, t.score, t.pos_sum, t.pos_count)
    return out


def _tick(stats, key, t0):
    now = time.perf_counter()
    if stats is not None:
        stats[key] = stats.get(key, 0.0) + now - t0
    return now


def iterative_decode(model: Model, source: Sequence[int], cfg: DecodeConfig = DecodeConfig(),
                     stats: dict | None = None, trace: list | None = None) -> list[int]:
    """Translate one sentence.

    ``stats`` (if given) accumulates seconds spent in the "model", "merge" and
    "adjust" stages; ``trace`` collects the merged sequence of every iteration.
    """
    K = model.config.K if cfg.K is None else cfg.K
    mcfg = MergeConfig(K, cfg.empty_span_score)
    acfg = AdjustConfig(cfg.rel_tolerance)
    max_len = model.config.max_len
    T = cfg.iterations

    t0 = time.perf_counter()
    enc, length_logits = model.encode(source)
    L = predict_length(length_logits, cfg.length_offset)
    inp = [MASK] * L
    seq: list[ScoredToken] = []
    for t in range(1, T + 1):
        pos = model.decode_positions(inp, enc)
        ids, scores = model.greedy_batch(pos, K)
        pieces = pieces_from_outputs(ids, scores)
        t0 = _tick(stats, "model", t0)
        seq = merge_all(pieces, mcfg)
        t0 = _tick(stats, "merge", t0)
        if trace is not None:
            trace.append(list(seq))
        if not seq:
            log.debug("all pieces empty at iteration %d", t)
        if t == T:
            break
        n_mask = math.floor(len(seq) * (T - t) / T)
        seq = adjust_length(mask_lowest(seq, n_mask), L, acfg)
        inp = token_ids(seq)[:max_len] or [MASK] * L
        t0 = _tick(stats, "adjust", t0)
    out = [tok for tok in token_ids(seq) if tok not in (MASK, SOP, PAD, LENGTH)]
    if not out:
        log.warning("empty translation for a source of length %d", len(source))
    return out
