"""Length adjustment of intermediate decoding outputs.

Between iterations the merged sequence is stretched or shrunk towards the
target length by inserting or deleting MASK tokens. Where they go is decided
by the position gaps between neighbouring unmasked tokens: wide gaps receive
inserted masks first, narrow gaps give up their masks first.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import MASK, ScoredToken


@dataclass(frozen=True)
class AdjustConfig:
    rel_tolerance: float = 0.05

    def __post_init__(self):
        if not 0 <= self.rel_tolerance < 1:
            raise ValueError("rel_tolerance must lie in [0, 1)")


@dataclass(frozen=True)
class GapEntry:
    gap: Fraction
    left_index: int
    right_index: int

    @property
    def n_masks(self) -> int:
        return self.right_index - self.left_index - 1


def compute_gaps(seq: Sequence[ScoredToken]) -> list[GapEntry]:
    unmasked = [i for i, t in enumerate(seq) if t.token != MASK]
    return [GapEntry(seq[r].position - seq[l].position, l, r)
            for l, r in zip(unmasked, unmasked[1:])]


def within_tolerance(l_out: int, l_in: int, cfg: AdjustConfig = AdjustConfig()) -> bool:
    return l_out == l_in or abs(l_out - l_in) <= cfg.rel_tolerance * l_in


def _mask_between(a: ScoredToken, b: ScoredToken) -> ScoredToken:
    mid = (a.position + b.position) / 2
    return ScoredToken(MASK, 0.0, mid.numerator, mid.denominator)


def adjust_length(seq: Sequence[ScoredToken], l_in: int,
                  cfg: AdjustConfig = AdjustConfig()) -> list[ScoredToken]:
    if l_in < 1:
        raise ValueError("target length must be >= 1")
    seq = list(seq)
    l_out = len(seq)
    if within_tolerance(l_out, l_in, cfg):
        return seq
    gaps = compute_gaps(seq)
    if not gaps:
        return seq
    if l_in > l_out:
        return _insert(seq, gaps, l_in - l_out)
    return _delete(seq, gaps, l_out - l_in)


def _insert(seq, gaps, n):
    added = [0] * len(gaps)
    heap = [(-g.gap, k) for k, g in enumerate(gaps)]
    heapq.heapify(heap)
    for _ in range(n):
        neg_gap, k = heapq.heappop(heap)
        added[k] += 1
        heapq.heappush(heap, (neg_gap + 1, k))
    out = []
    insert_before = {g.right_index: (g, added[k]) for k, g in enumerate(gaps) if added[k]}
    for i, tok in enumerate(seq):
        if i in insert_before:
            g, count = insert_before[i]
            fill = _mask_between(seq[g.left_index], seq[g.right_index])
            out.extend([fill] * count)
        out.append(tok)
    return out


def _delete(seq, gaps, n):
    remaining = [g.n_masks for g in gaps]
    removed = [0] * len(gaps)
    heap = [(g.gap, k) for k, g in enumerate(gaps)]
    heapq.heapify(heap)
    deleted = 0
    while deleted < n and heap:
        gap, k = heapq.heappop(heap)
        if remaining[k] == 0:
            continue
        remaining[k] -= 1
        removed[k] += 1
        deleted += 1
        heapq.heappush(heap, (gap + 1, k))
    drop = set()
    for k, g in enumerate(gaps):
        # leftmost masks of the gap go first
        drop.update(range(g.left_index + 1, g.left_index + 1 + removed[k]))
    return [t for i, t in enumerate(seq) if i not in drop]
