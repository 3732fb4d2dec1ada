"""Merge throughput measurements on synthetic sliding-window pieces."""
from __future__ import annotations

import gc
import time

import numpy as np

from . import _backend
from .core import N_RESERVED, Piece
from .merge import EMPTY_SPAN_SCORE, MergeConfig, merge_all


def synth_pieces(n: int, K: int, rng: np.random.Generator, vocab: int = 32) -> list[Piece]:
    """``n`` pieces cut as sliding K-windows from a random reference."""
    ref = rng.integers(N_RESERVED, N_RESERVED + vocab, size=n + K - 1)
    scores = -rng.random((n, K))
    return [Piece.from_outputs(i, ref[i:i + K].tolist(), scores[i].tolist()) for i in range(n)]


def time_merge(pieces, K: int, backend: str | None = None, repeats: int = 3,
               level: str = "api") -> float:
    """Best-of-``repeats`` wall time of one full merge, in seconds.

    ``level="api"`` times ``merge_all`` on Piece objects; ``"kernel"`` times
    the backend scan alone on pre-built token tuples.
    """
    if level == "api":
        cfg = MergeConfig(K)
        call = lambda: merge_all(pieces, cfg, backend=backend)  # noqa: E731
    elif level == "kernel":
        rows = [p.tokens for p in pieces]
        scan = _backend.get(backend).merge_all
        call = lambda: scan(rows, K, EMPTY_SPAN_SCORE)  # noqa: E731
    else:
        raise ValueError(f"unknown level {level!r}")
    best = float("inf")
    enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeats):
            t0 = time.perf_counter()
            call()
            best = min(best, time.perf_counter() - t0)
    finally:
        if enabled:
            gc.enable()
    return best


def run(sizes=(1000, 2000, 4000, 8000), ks=(2, 3, 4, 5, 6), backends=(None,),
        levels=("api",), fixed_k: int = 3, fixed_n: int = 4000, repeats: int = 3,
        seed: int = 0) -> list[dict]:
    """Size sweep at ``fixed_k`` and K sweep at ``fixed_n`` per backend and level.

    Repeats are interleaved across the grid, so a slow stretch on a shared
    machine hits every grid point instead of one; each point keeps its best.
    """
    grid = [("size", n, fixed_k) for n in sizes] + [("k", fixed_n, k) for k in ks]
    pieces = {(n, k): synth_pieces(n, k, np.random.default_rng(seed)) for _, n, k in grid}
    rows = []
    for backend in backends:
        name = backend or _backend.NAME
        for level in levels:
            best = [float("inf")] * len(grid)
            for _ in range(repeats):
                for g, (_, n, k) in enumerate(grid):
                    best[g] = min(best[g], time_merge(pieces[n, k], k, backend, 1, level))
            for (sweep, n, k), sec in zip(grid, best):
                rows.append({"backend": name, "level": level, "sweep": sweep, "n": n,
                             "k": k, "seconds": sec, "pieces_per_s": n / sec})
    return rows
