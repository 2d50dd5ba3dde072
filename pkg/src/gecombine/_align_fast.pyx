# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled token alignment kernel.

Same algorithm and tie-breaks as ``_align_py`` (lexicographic cost packed
into int64, backtrack preferring match > sub > del > ins); the two must
stay interchangeable.
"""

import numpy as np

from libc.stdint cimport int32_t, int64_t

cdef int64_t BIG = <int64_t>1 << 32


def align_ops(src, hyp):
    """Align two int32 id arrays; returns op codes as a Python list."""
    cdef int32_t[::1] s = np.ascontiguousarray(src, dtype=np.int32)
    cdef int32_t[::1] h = np.ascontiguousarray(hyp, dtype=np.int32)
    cdef Py_ssize_t l = s.shape[0]
    cdef Py_ssize_t m = h.shape[0]

    table = np.empty((l + 1, m + 1), dtype=np.int64)
    cdef int64_t[:, ::1] d = table
    cdef Py_ssize_t i, j, n
    cdef int64_t diag, up, left, best
    cdef int32_t si

    d[0, 0] = 0
    for j in range(1, m + 1):
        d[0, j] = j * BIG
    for i in range(1, l + 1):
        d[i, 0] = i * BIG
        si = s[i - 1]
        for j in range(1, m + 1):
            if si == h[j - 1]:
                diag = d[i - 1, j - 1] - 1
            else:
                diag = d[i - 1, j - 1] + BIG
            up = d[i - 1, j] + BIG
            left = d[i, j - 1] + BIG
            best = diag
            if up < best:
                best = up
            if left < best:
                best = left
            d[i, j] = best

    out = np.empty(l + m, dtype=np.int8)
    cdef signed char[::1] ops = out
    n = 0
    i = l
    j = m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and s[i - 1] == h[j - 1] and d[i - 1, j - 1] - 1 == d[i, j]:
            ops[n] = 0
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and d[i - 1, j - 1] + BIG == d[i, j]:
            ops[n] = 1
            i -= 1
            j -= 1
        elif i > 0 and d[i - 1, j] + BIG == d[i, j]:
            ops[n] = 2
            i -= 1
        else:
            ops[n] = 3
            j -= 1
        n += 1
    return [int(x) for x in out[:n][::-1]]
