"""Longest common subsequence over token-id sequences."""
from typing import Sequence

from . import _backend

MAX_LEN = 64


def lcs(s1: Sequence[int], s2: Sequence[int], cap: int = MAX_LEN) -> list[tuple[int, int]]:
    """Index pairs of one maximum-length common subsequence.

    Among equally long subsequences the one matching ``s2`` as early and
    ``s1`` as late as possible is returned: backtracking drops the tail of
    ``s2`` whenever that keeps the optimum, then takes a match, then drops
    the tail of ``s1``. For overlapping windows of one sequence this picks
    the true overlap.
    """
    if len(s1) > cap or len(s2) > cap:
        raise ValueError(f"lcs input longer than cap {cap}")
    return _backend.kernels.lcs(list(s1), list(s2))
