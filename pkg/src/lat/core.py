"""Vocabulary, tokenization and the scored-token data model."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

PAD, SOP, MASK, EOS, UNK, LENGTH = 0, 1, 2, 3, 4, 5
RESERVED = ("⟨pad⟩", "⟨sop⟩", "⟨mask⟩", "⟨eos⟩", "⟨unk⟩", "⟨length⟩")
N_RESERVED = len(RESERVED)


@dataclass(frozen=True)
class Vocabulary:
    """Immutable id <-> string map. Reserved symbols take ids 0..5."""

    words: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.words)) != len(self.words):
            raise ValueError("duplicate vocabulary entries")
        if set(self.words) & set(RESERVED):
            raise ValueError("vocabulary entry collides with a reserved symbol")
        idx = {w: i for i, w in enumerate(RESERVED)}
        idx.update((w, i + N_RESERVED) for i, w in enumerate(self.words))
        object.__setattr__(self, "index", idx)

    def __len__(self) -> int:
        return N_RESERVED + len(self.words)

    def id(self, word: str) -> int:
        return self.index.get(word, UNK)

    def word(self, i: int) -> str:
        if i < 0 or i >= len(self):
            raise ValueError("id out of range")
        if i < N_RESERVED:
            return RESERVED[i]
        return self.words[i - N_RESERVED]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for w in self.words:
                f.write(w + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            return cls(tuple(line.rstrip("\n") for line in f if line.rstrip("\n")))


def build_vocab(corpus: Iterable[str], min_count: int = 1) -> Vocabulary:
    """Collect whitespace tokens seen at least ``min_count`` times.

    Ids are assigned by descending frequency, ties broken lexicographically.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    n_lines = 0
    for line in corpus:
        n_lines += 1
        counts.update(line.split())
    if n_lines == 0:
        raise ValueError("empty corpus")
    kept = sorted((w for w, c in counts.items() if c >= min_count),
                  key=lambda w: (-counts[w], w))
    return Vocabulary(tuple(w for w in kept if w not in RESERVED))


def encode_line(v: Vocabulary, line: str) -> list[int]:
    return [v.id(w) for w in line.split()]


def decode_line(v: Vocabulary, ids: Iterable[int]) -> str:
    return " ".join(v.word(int(i)) for i in ids)


class ScoredToken(NamedTuple):
    """A token id with its log-probability and a rational position.

    The position is kept as ``pos_sum / pos_count`` so that averaging over
    aligned sources stays exact. Being a plain tuple, it is passed to the
    merge kernels without conversion.
    """

    token: int
    score: float
    pos_sum: int = 0
    pos_count: int = 1

    @property
    def position(self) -> Fraction:
        return Fraction(self.pos_sum, self.pos_count)


@dataclass(frozen=True)
class Piece:
    anchor: int
    tokens: tuple[ScoredToken, ...]

    @classmethod
    def from_outputs(cls, anchor: int, ids: Sequence[int], scores: Sequence[float]) -> "Piece":
        if len(ids) != len(scores):
            raise ValueError("ids and scores differ in length")
        toks = tuple(ScoredToken(int(t), float(s), anchor + j, 1)
                     for j, (t, s) in enumerate(zip(ids, scores)))
        return cls(anchor, toks)

    def __len__(self) -> int:
        return len(self.tokens)


MergedSequence = list  # list[ScoredToken]


def token_ids(seq: Iterable[ScoredToken]) -> list[int]:
    return [t.token for t in seq]
