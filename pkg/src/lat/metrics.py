"""Evaluation metrics: n-gram repeat rate, corpus BLEU, edit distance."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class NrrConfig:
    n: int = 1
    window: int | None = None  # defaults to n

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be >= 1")

    @property
    def W(self) -> int:
        return self.n if self.window is None else self.window


def ngram_repeat_rate(corpus: Iterable[Sequence], cfg: NrrConfig = NrrConfig()) -> float:
    """Percentage of n-grams that reappear within ``W`` start positions later.

    Counts are pooled over the whole corpus.
    """
    n, w = cfg.n, cfg.W
    repeated = total = 0
    for sent in corpus:
        grams = [tuple(sent[i:i + n]) for i in range(len(sent) - n + 1)]
        total += len(grams)
        for i, g in enumerate(grams):
            if any(grams[j] == g for j in range(i + 1, min(len(grams), i + w + 1))):
                repeated += 1
    return 100.0 * repeated / total if total else 0.0


def _ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hypotheses: Sequence[Sequence], references: Sequence[Sequence],
                max_n: int = 4) -> float:
    """Corpus BLEU in [0, 100] with one reference per hypothesis, no smoothing.

    Orders longer than every hypothesis have no n-grams at all; they are
    dropped and the remaining orders weighted uniformly.
    """
    if len(hypotheses) != len(references):
        raise ValueError("hypothesis and reference counts differ")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            h, r = _ngrams(hyp, n), _ngrams(ref, n)
            matches[n - 1] += sum(min(c, r[g]) for g, c in h.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    orders = [n for n in range(max_n) if totals[n] > 0]
    if not orders or any(matches[n] == 0 for n in orders):
        return 0.0
    log_p = sum(math.log(matches[n] / totals[n]) for n in orders) / len(orders)
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_p)


def levenshtein(a: Sequence, b: Sequence) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def length_edges(lengths: Sequence[int], n_buckets: int = 5) -> list[float]:
    """Equal-width bucket edges spanning the observed lengths."""
    lo, hi = min(lengths), max(lengths) + 1
    step = (hi - lo) / n_buckets
    return [lo + k * step for k in range(n_buckets)] + [hi]


def bucket_report(pairs: Sequence[tuple[Sequence, Sequence]],
                  edges: Sequence[float]) -> list[dict]:
    """BLEU per reference-length bucket ``[edges[k], edges[k+1])``.

    Empty buckets report ``bleu=None``.
    """
    rows = []
    for lo, hi in zip(edges, edges[1:]):
        sel = [(r, h) for r, h in pairs if lo <= len(r) < hi]
        bleu = corpus_bleu([h for _, h in sel], [r for r, _ in sel]) if sel else None
        rows.append({"lo": lo, "hi": hi, "count": len(sel), "bleu": bleu})
    return rows
