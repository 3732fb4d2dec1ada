"""Pure-Python merge kernels. Same API as the compiled ``_ckernels`` module.

Tokens travel as ``(id, score, pos_sum, pos_count)`` tuples.
"""


def lcs(a, b):
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return []
    # table[i][j] = LCS length of a[:i], b[:j]
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        ai = a[i - 1]
        row, prev = table[i], table[i - 1]
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                up, left = prev[j], row[j - 1]
                row[j] = up if up >= left else left
    pairs = []
    i, j = n, m
    # drop b's tail while that keeps the optimum, so b's prefix pairs with
    # a's suffix (the overlap of consecutive sliding windows)
    while i > 0 and j > 0:
        if table[i][j - 1] == table[i][j]:
            j -= 1
        elif a[i - 1] == b[j - 1]:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        else:
            i -= 1
    pairs.reverse()
    return pairs


def _span_score(toks, lo, hi, empty_score):
    if hi <= lo:
        return empty_score
    total = 0.0
    for k in range(lo, hi):
        total += toks[k][1]
    return total / (hi - lo)


def merge_two(s1, s2, empty_score):
    pairs = lcs([t[0] for t in s1], [t[0] for t in s2])
    if not pairs:
        return list(s1) + list(s2)
    out = []
    p1 = p2 = -1
    pairs.append((len(s1), len(s2)))
    last = len(pairs) - 1
    for k, (i1, i2) in enumerate(pairs):
        sc1 = _span_score(s1, p1 + 1, i1, empty_score)
        sc2 = _span_score(s2, p2 + 1, i2, empty_score)
        if sc1 >= sc2:
            out.extend(s1[p1 + 1:i1])
        else:
            out.extend(s2[p2 + 1:i2])
        if k != last:
            a, b = s1[i1], s2[i2]
            out.append((a[0], a[1] if a[1] >= b[1] else b[1], a[2] + b[2], a[3] + b[3]))
        p1, p2 = i1, i2
    return out


def merge_all(pieces, window, empty_score):
    """Left-to-right scan; only the last/first ``window`` tokens are aligned."""
    out = list(pieces[0])
    for piece in pieces[1:]:
        w = min(window, len(out))
        merged = merge_two(out[len(out) - w:], piece[:window], empty_score)
        del out[len(out) - w:]
        out.extend(merged)
        out.extend(piece[window:])
    return out
