# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled kernels for signed-int words and label-run scanning.

Mirrors the contracts of ``amalgams._pykernels``; selected at import
time by ``amalgams.kernels``.
"""

from libc.stdlib cimport malloc, free


def free_reduce_ints(word):
    """Freely reduce a signed-int word (cancel adjacent x, -x pairs)."""
    cdef list src = list(word)
    cdef Py_ssize_t n = len(src)
    if n == 0:
        return []
    cdef long long *stack = <long long *> malloc(n * sizeof(long long))
    cdef Py_ssize_t top = 0
    cdef Py_ssize_t i
    cdef long long v
    try:
        for i in range(n):
            v = src[i]
            if v == 0:
                raise ValueError("zero letter in word")
            if top > 0 and stack[top - 1] == -v:
                top -= 1
            else:
                stack[top] = v
                top += 1
        return [stack[i] for i in range(top)]
    finally:
        free(stack)


cdef _scan_diagonals(long long *aa, long long *bb,
                     Py_ssize_t n, Py_ssize_t m, Py_ssize_t k, list out):
    # Walk every diagonal; emit maximal runs of length >= k.
    cdef Py_ssize_t d, i, j, run, si, sj
    for d in range(-(m - 1), n):
        if d >= 0:
            i = d
            j = 0
        else:
            i = 0
            j = -d
        run = 0
        si = i
        sj = j
        while i < n and j < m:
            if aa[i] == bb[j]:
                if run == 0:
                    si = i
                    sj = j
                run += 1
            else:
                if run >= k:
                    out.append((si, sj, run))
                run = 0
            i += 1
            j += 1
        if run >= k:
            out.append((si, sj, run))


def longest_common_run(a, b):
    """Longest common contiguous subsequence; returns (length, start_a, start_b)."""
    cdef list la = list(a)
    cdef list lb = list(b)
    cdef Py_ssize_t n = len(la), m = len(lb)
    if n == 0 or m == 0:
        return (0, 0, 0)
    cdef long long *aa = <long long *> malloc(n * sizeof(long long))
    cdef long long *bb = <long long *> malloc(m * sizeof(long long))
    cdef Py_ssize_t i
    cdef list out = []
    try:
        for i in range(n):
            aa[i] = la[i]
        for i in range(m):
            bb[i] = lb[i]
        _scan_diagonals(aa, bb, n, m, 1, out)
        if not out:
            return (0, 0, 0)
        best = max(out, key=lambda t: (t[2], -t[0], -t[1]))
        return (best[2], best[0], best[1])
    finally:
        free(aa)
        free(bb)


def runs_at_least(a, b, Py_ssize_t k):
    """All maximal common runs of length >= k, as sorted (start_a, start_b, length)."""
    cdef list la = list(a)
    cdef list lb = list(b)
    cdef Py_ssize_t n = len(la), m = len(lb)
    if k <= 0:
        raise ValueError("k must be positive")
    if n < k or m < k:
        return []
    cdef long long *aa = <long long *> malloc(n * sizeof(long long))
    cdef long long *bb = <long long *> malloc(m * sizeof(long long))
    cdef Py_ssize_t i
    cdef list out = []
    try:
        for i in range(n):
            aa[i] = la[i]
        for i in range(m):
            bb[i] = lb[i]
        _scan_diagonals(aa, bb, n, m, k, out)
        out.sort()
        return out
    finally:
        free(aa)
        free(bb)
