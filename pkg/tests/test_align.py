import itertools
import random

import pytest
from hypothesis import given, strategies as st

from lat import _backend
from lat.align import lcs


def brute_lcs_len(a, b):
    """Longest common subsequence length by enumerating subsequences of a."""
    for k in range(min(len(a), len(b)), 0, -1):
        subs_b = set(itertools.combinations(b, k))
        if any(c in subs_b for c in itertools.combinations(a, k)):
            return k
    return 0


def check_pairs(a, b, pairs):
    for (i1, j1), (i2, j2) in zip(pairs, pairs[1:]):
        assert i1 < i2 and j1 < j2
    assert all(a[i] == b[j] for i, j in pairs)


def test_overlap_example():
    assert lcs([0, 1, 2], [1, 2, 3]) == [(1, 0), (2, 1)]


def test_identity_and_disjoint():
    x = [5, 3, 9, 3]
    assert lcs(x, x) == [(i, i) for i in range(4)]
    assert lcs([1], [2]) == []
    assert lcs([], [1, 2]) == [] and lcs([1, 2], []) == []


def test_window_overlap_preferred():
    # suffix of the first run aligns with the prefix of the second
    assert lcs([0, 2, 2], [2, 2, 2]) == [(1, 0), (2, 1)]
    assert lcs([0, 1, 0], [1, 0, 1]) == [(1, 0), (2, 1)]


def test_cap():
    with pytest.raises(ValueError):
        lcs(list(range(65)), [1])


@pytest.mark.parametrize("name", ["python", "cython"])
def test_brute_force_oracle(name):
    if name == "cython" and _backend.NAME != "cython":
        pytest.skip("compiled kernels not built")
    kern = _backend.get(name)
    rng = random.Random(11)
    for _ in range(500):
        a = [rng.randrange(3) for _ in range(rng.randint(0, 8))]
        b = [rng.randrange(3) for _ in range(rng.randint(0, 8))]
        pairs = kern.lcs(a, b)
        check_pairs(a, b, pairs)
        assert len(pairs) == brute_lcs_len(a, b)


small = st.lists(st.integers(0, 3), max_size=10)


@given(small, small)
def test_symmetric_length(a, b):
    assert len(lcs(a, b)) == len(lcs(b, a))


@given(small)
def test_self_and_empty(a):
    assert len(lcs(a, a)) == len(a)
    assert lcs(a, []) == []
