import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lat.core import MASK, ScoredToken
from lat.lenadjust import AdjustConfig, adjust_length, compute_gaps, within_tolerance


def seq_from(spec):
    """'7@0 M 8@3' -> tokens; M is a mask at position 0."""
    out = []
    for item in spec.split():
        if item == "M":
            out.append(ScoredToken(MASK, -0.5, 0, 1))
        else:
            t, p = item.split("@")
            out.append(ScoredToken(int(t), -0.1, int(p), 1))
    return out


def naive_adjust(seq, l_in):
    """Linear-scan simulation of the gap queue, used as an oracle."""
    unmasked = [i for i, t in enumerate(seq) if t.token != MASK]
    gaps = [[seq[r].position - seq[l].position, l, r] for l, r in zip(unmasked, unmasked[1:])]
    if len(seq) == l_in or abs(len(seq) - l_in) <= 0.05 * l_in or not gaps:
        return [t.token for t in seq]
    if l_in > len(seq):
        extra = Counter()
        for _ in range(l_in - len(seq)):
            best = max(range(len(gaps)), key=lambda k: (gaps[k][0], -k))
            extra[best] += 1
            gaps[best][0] -= 1
        out = []
        for i, t in enumerate(seq):
            for k, g in enumerate(gaps):
                if g[2] == i:
                    out.extend([MASK] * extra[k])
            out.append(t.token)
        return out
    masks = [g[2] - g[1] - 1 for g in gaps]
    live = set(range(len(gaps)))
    drop = set()
    need = len(seq) - l_in
    while need and live:
        k = min(live, key=lambda k: (gaps[k][0], k))
        if masks[k] == 0:
            live.discard(k)
            continue
        removed = gaps[k][2] - gaps[k][1] - 1 - masks[k]
        drop.add(gaps[k][1] + 1 + removed)
        masks[k] -= 1
        gaps[k][0] += 1
        need -= 1
    return [t.token for i, t in enumerate(seq) if i not in drop]


def test_config_validation():
    with pytest.raises(ValueError):
        AdjustConfig(1.0)
    with pytest.raises(ValueError):
        AdjustConfig(-0.1)


def test_gaps_unit():
    gaps = compute_gaps(seq_from("6@0 7@1 8@2"))
    assert [g.gap for g in gaps] == [1, 1]
    assert [(g.left_index, g.right_index) for g in gaps] == [(0, 1), (1, 2)]


def test_gap_with_mask():
    (g,) = compute_gaps(seq_from("6@0 M 7@3"))
    assert g.gap == 3 and g.n_masks == 1


def test_gaps_all_masks_and_rational():
    assert compute_gaps(seq_from("M M M")) == []
    s = [ScoredToken(6, -0.1, 1, 2), ScoredToken(7, -0.1, 7, 3)]
    assert compute_gaps(s)[0].gap == Fraction(7, 3) - Fraction(1, 2)


def test_tolerance():
    assert within_tolerance(100, 103)
    assert within_tolerance(100, 100)
    assert not within_tolerance(100, 106)
    assert within_tolerance(5, 5, AdjustConfig(0.0))


def test_identity_and_within_tolerance_noop():
    s = seq_from("6@0 7@1 8@2")
    assert adjust_length(s, 3) == s
    long = [ScoredToken(6 + i % 3, -0.1, i, 1) for i in range(100)]
    assert adjust_length(long, 103) == long


def test_insert_into_max_gap_twice():
    # gap 5 -> 4 -> 3, still above the unit gap
    out = adjust_length(seq_from("6@0 7@5 8@6"), 5)
    assert [t.token for t in out] == [6, MASK, MASK, 7, 8]
    assert out[1].position == Fraction(5, 2) and out[1].score == 0.0


def test_insert_tie_prefers_left_gap():
    out = adjust_length(seq_from("6@0 7@2 8@4"), 5)
    assert [t.token for t in out] == [6, MASK, 7, MASK, 8]
    out = adjust_length(seq_from("6@0 7@2 8@4"), 4)
    assert [t.token for t in out] == [6, MASK, 7, 8]


def test_insert_after_existing_masks():
    out = adjust_length(seq_from("6@0 M 7@9 8@10"), 6)
    assert [t.token for t in out] == [6, MASK, MASK, MASK, 7, 8]


def test_delete_from_min_gap():
    s = seq_from("6@0 M 7@2 M M 8@6")
    out = adjust_length(s, 5)
    assert [t.token for t in out] == [6, 7, MASK, MASK, 8]
    # min gap empties, then the other gap loses its leftmost mask
    out = adjust_length(s, 4)
    assert [t.token for t in out] == [6, 7, MASK, 8]
    assert out[2] is s[4]


def test_delete_exhausts_queue():
    s = seq_from("6@0 M 7@2 8@3 9@4 10@5 11@6")
    out = adjust_length(s, 3)
    assert [t.token for t in out] == [6, 7, 8, 9, 10, 11]


def test_fewer_than_two_unmasked_unchanged():
    s = seq_from("M 6@0 M")
    assert adjust_length(s, 10) == s
    assert adjust_length(seq_from("M M M M"), 1) == seq_from("M M M M")


def test_bad_target():
    with pytest.raises(ValueError):
        adjust_length(seq_from("6@0"), 0)


def random_seq(rng, n):
    seq, pos = [], 0
    for _ in range(n):
        pos += rng.randint(0, 3)
        if rng.random() < 0.3:
            seq.append(ScoredToken(MASK, -1.0, pos, 1))
        else:
            seq.append(ScoredToken(rng.randrange(6, 12), -rng.random(), pos, 1))
    return seq


def test_random_insertions_match_oracle():
    rng = random.Random(11)
    for _ in range(200):
        seq = random_seq(rng, rng.randint(2, 30))
        l_in = len(seq) + rng.randint(1, 15)
        out = adjust_length(seq, l_in)
        assert [t.token for t in out] == naive_adjust(seq, l_in)
        if len(compute_gaps(seq)) and not within_tolerance(len(seq), l_in):
            assert len(out) == l_in
            assert Counter(t.token for t in out if t.token != MASK) == \
                Counter(t.token for t in seq if t.token != MASK)
            assert [t for t in out if t.token != MASK] == [t for t in seq if t.token != MASK]
            # inserted masks sit strictly inside their gap
            for i, t in enumerate(out):
                if t.token == MASK and t.score == 0.0:
                    left = max(j for j in range(i) if out[j].token != MASK)
                    right = min(j for j in range(i + 1, len(out)) if out[j].token != MASK)
                    assert out[left].position < t.position < out[right].position or \
                        out[left].position == out[right].position


def test_random_deletions_match_oracle():
    rng = random.Random(12)
    for _ in range(200):
        seq = random_seq(rng, rng.randint(2, 30))
        l_in = max(1, len(seq) - rng.randint(1, 15))
        out = adjust_length(seq, l_in)
        assert [t.token for t in out] == naive_adjust(seq, l_in)
        assert [t for t in out if t.token != MASK] == [t for t in seq if t.token != MASK]
        assert len(out) >= min(l_in, len(seq))
        inner = sum(g.n_masks for g in compute_gaps(seq))
        if not within_tolerance(len(seq), l_in) and inner >= len(seq) - l_in:
            assert len(out) == l_in


@settings(max_examples=200)
@given(st.integers(0, 10**6), st.integers(1, 60))
def test_deterministic(seed, l_in):
    seq = random_seq(random.Random(seed), 20)
    assert adjust_length(seq, l_in) == adjust_length(list(seq), l_in)
