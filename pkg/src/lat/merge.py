"""Merging local translation pieces into one output sequence."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import _backend
from .core import EOS, PAD, Piece, ScoredToken

EMPTY_SPAN_SCORE = math.log(0.25)


@dataclass(frozen=True)
class MergeConfig:
    K: int = 3
    empty_span_score: float = EMPTY_SPAN_SCORE

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not math.isfinite(self.empty_span_score) or self.empty_span_score >= 0:
            raise ValueError("empty_span_score must be finite and negative")


def _as_tokens(rows) -> list[ScoredToken]:
    make = ScoredToken._make
    return [make(r) for r in rows]


def span_score(span: Sequence[ScoredToken], cfg: MergeConfig = MergeConfig()) -> float:
    if not span:
        return cfg.empty_span_score
    total = 0.0
    for t in span:
        total += t.score
    return total / len(span)


def align_token(t1: ScoredToken, t2: ScoredToken) -> ScoredToken:
    if t1.token != t2.token:
        raise ValueError("align on unequal tokens")
    return ScoredToken(t1.token, max(t1.score, t2.score),
                       t1.pos_sum + t2.pos_sum, t1.pos_count + t2.pos_count)


def merge_two(s1: Sequence[ScoredToken], s2: Sequence[ScoredToken],
              cfg: MergeConfig = MergeConfig(), backend: str | None = None) -> list[ScoredToken]:
    """Align two token runs on their LCS and resolve the gaps by span score.

    Unmatched spans between consecutive matches compete; the one with the
    higher mean log-probability wins and ties keep ``s1``. With no common
    token the runs are concatenated.
    """
    k = _backend.get(backend)
    rows = k.merge_two(list(s1), list(s2), cfg.empty_span_score)
    return _as_tokens(rows)


def strip_terminators(piece: Piece) -> Piece:
    """Truncate a piece at its first PAD or EOS."""
    for j, t in enumerate(piece.tokens):
        if t.token in (PAD, EOS):
            return Piece(piece.anchor, piece.tokens[:j])
    return piece


def merge_all(pieces: Sequence[Piece], cfg: MergeConfig = MergeConfig(),
              backend: str | None = None) -> list[ScoredToken]:
    """Merge pieces left to right, aligning only a ``K``-token window.

    Each step merges the last K tokens of the running output with the first
    K tokens of the next piece; everything else is copied. Pieces that are
    empty after terminator stripping are skipped.
    """
    if not pieces:
        raise ValueError("no pieces")
    rows = []
    for p in sorted(pieces, key=lambda p: p.anchor):
        p = strip_terminators(p)
        if p.tokens:
            rows.append(p.tokens)
    if not rows:
        return []
    return _as_tokens(_backend.get(backend).merge_all(rows, cfg.K, cfg.empty_span_score))
