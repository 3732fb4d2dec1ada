# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled merge kernels. Mirrors ``lat._pykernels`` exactly, including
summation order, so both backends return bit-identical results."""

from libc.stdlib cimport malloc, free

cdef struct Tok:
    long long tok
    double score
    long long psum
    long long pcount


cdef int _lcs(const long long* a, int n, const long long* b, int m,
              int* out1, int* out2) nogil:
    cdef int i, j, k, up, left
    cdef int w = m + 1
    cdef int* table
    if n == 0 or m == 0:
        return 0
    table = <int*> malloc((n + 1) * w * sizeof(int))
    for j in range(w):
        table[j] = 0
    for i in range(1, n + 1):
        table[i * w] = 0
        for j in range(1, m + 1):
            if a[i - 1] == b[j - 1]:
                table[i * w + j] = table[(i - 1) * w + j - 1] + 1
            else:
                up = table[(i - 1) * w + j]
                left = table[i * w + j - 1]
                table[i * w + j] = up if up >= left else left
    k = table[n * w + m]
    cdef int count = k
    i = n
    j = m
    while i > 0 and j > 0:
        if table[i * w + j - 1] == table[i * w + j]:
            j -= 1
        elif a[i - 1] == b[j - 1]:
            k -= 1
            out1[k] = i - 1
            out2[k] = j - 1
            i -= 1
            j -= 1
        else:
            i -= 1
    free(table)
    return count


cdef double _span(const Tok* s, int lo, int hi, double empty) nogil:
    cdef double total = 0.0
    cdef int k
    if hi <= lo:
        return empty
    for k in range(lo, hi):
        total += s[k].score
    return total / (hi - lo)


cdef int _merge_two(const Tok* s1, int n1, const Tok* s2, int n2,
                    double empty, Tok* out) nogil:
    """Writes at most n1 + n2 tokens into ``out``; returns the count."""
    cdef int cap = n1 if n1 < n2 else n2
    cdef long long* a = <long long*> malloc((n1 + 1) * sizeof(long long))
    cdef long long* b = <long long*> malloc((n2 + 1) * sizeof(long long))
    cdef int* m1 = <int*> malloc((cap + 1) * sizeof(int))
    cdef int* m2 = <int*> malloc((cap + 1) * sizeof(int))
    cdef int i, k, n_pairs, n_out = 0, p1 = -1, p2 = -1, i1, i2
    cdef double sc1, sc2
    for i in range(n1):
        a[i] = s1[i].tok
    for i in range(n2):
        b[i] = s2[i].tok
    n_pairs = _lcs(a, n1, b, n2, m1, m2)
    if n_pairs == 0:
        for i in range(n1):
            out[n_out] = s1[i]
            n_out += 1
        for i in range(n2):
            out[n_out] = s2[i]
            n_out += 1
    else:
        m1[n_pairs] = n1
        m2[n_pairs] = n2
        for k in range(n_pairs + 1):
            i1 = m1[k]
            i2 = m2[k]
            sc1 = _span(s1, p1 + 1, i1, empty)
            sc2 = _span(s2, p2 + 1, i2, empty)
            if sc1 >= sc2:
                for i in range(p1 + 1, i1):
                    out[n_out] = s1[i]
                    n_out += 1
            else:
                for i in range(p2 + 1, i2):
                    out[n_out] = s2[i]
                    n_out += 1
            if k != n_pairs:
                out[n_out].tok = s1[i1].tok
                out[n_out].score = s1[i1].score if s1[i1].score >= s2[i2].score else s2[i2].score
                out[n_out].psum = s1[i1].psum + s2[i2].psum
                out[n_out].pcount = s1[i1].pcount + s2[i2].pcount
                n_out += 1
            p1 = i1
            p2 = i2
    free(a)
    free(b)
    free(m1)
    free(m2)
    return n_out


cdef Tok* _pack(seq, int* n_out) except NULL:
    cdef int n = len(seq)
    cdef Tok* buf = <Tok*> malloc((n + 1) * sizeof(Tok))
    cdef int i
    for i in range(n):
        t = seq[i]
        buf[i].tok = t[0]
        buf[i].score = t[1]
        buf[i].psum = t[2]
        buf[i].pcount = t[3]
    n_out[0] = n
    return buf


cdef list _unpack(const Tok* buf, int n):
    cdef int i
    return [(buf[i].tok, buf[i].score, buf[i].psum, buf[i].pcount) for i in range(n)]


def lcs(a, b):
    cdef int n = len(a), m = len(b), i, k
    cdef int cap = n if n < m else m
    if cap == 0:
        return []
    cdef long long* ca = <long long*> malloc(n * sizeof(long long))
    cdef long long* cb = <long long*> malloc(m * sizeof(long long))
    cdef int* o1 = <int*> malloc(cap * sizeof(int))
    cdef int* o2 = <int*> malloc(cap * sizeof(int))
    try:
        for i in range(n):
            ca[i] = a[i]
        for i in range(m):
            cb[i] = b[i]
        k = _lcs(ca, n, cb, m, o1, o2)
        return [(o1[i], o2[i]) for i in range(k)]
    finally:
        free(ca)
        free(cb)
        free(o1)
        free(o2)


def merge_two(s1, s2, double empty_score):
    cdef int n1, n2, n
    cdef Tok* b1 = _pack(s1, &n1)
    cdef Tok* b2 = _pack(s2, &n2)
    cdef Tok* out = <Tok*> malloc((n1 + n2 + 1) * sizeof(Tok))
    try:
        n = _merge_two(b1, n1, b2, n2, empty_score, out)
        return _unpack(out, n)
    finally:
        free(b1)
        free(b2)
        free(out)


def merge_all(pieces, int window, double empty_score):
    cdef int total = 0, n_out, n_p, i, w, n_m, take
    cdef Tok* out
    cdef Tok* piece
    cdef Tok* tmp
    for p in pieces:
        total += len(p)
    out = <Tok*> malloc((total + 1) * sizeof(Tok))
    tmp = <Tok*> malloc((2 * window + 1) * sizeof(Tok))
    try:
        piece = _pack(pieces[0], &n_p)
        for i in range(n_p):
            out[i] = piece[i]
        n_out = n_p
        free(piece)
        for p in pieces[1:]:
            piece = _pack(p, &n_p)
            w = window if window < n_out else n_out
            take = window if window < n_p else n_p
            n_m = _merge_two(out + n_out - w, w, piece, take, empty_score, tmp)
            n_out -= w
            for i in range(n_m):
                out[n_out + i] = tmp[i]
            n_out += n_m
            for i in range(take, n_p):
                out[n_out] = piece[i]
                n_out += 1
            free(piece)
        return _unpack(out, n_out)
    finally:
        free(out)
        free(tmp)
