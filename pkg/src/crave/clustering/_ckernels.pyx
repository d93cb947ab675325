# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled clustering kernels. Same API and tie-breaking as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

cnp.import_array()


def assign_labels(const double[:, ::1] X, const double[:, ::1] C):
    """Nearest centroid per row (lowest index on ties) and its squared distance."""
    cdef Py_ssize_t n = X.shape[0], k = C.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double best, acc, diff
    cdef Py_ssize_t arg
    labels = np.empty(n, dtype=np.int64)
    d2 = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] lv = labels
    cdef double[::1] dv = d2
    with nogil:
        for i in range(n):
            best = INFINITY
            arg = 0
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    diff = X[i, t] - C[j, t]
                    acc = acc + diff * diff
                if acc < best:
                    best = acc
                    arg = j
            lv[i] = arg
            dv[i] = best
    return labels, d2


def update_centroids(const double[:, ::1] X, const cnp.int64_t[::1] labels, Py_ssize_t k):
    """Per-cluster means; empty clusters keep a zero row and a zero count."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t
    C = np.zeros((k, d), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] cv = C
    cdef cnp.int64_t[::1] nv = counts
    with nogil:
        for i in range(n):
            j = labels[i]
            nv[j] += 1
            for t in range(d):
                cv[j, t] += X[i, t]
        for j in range(k):
            if nv[j] > 0:
                for t in range(d):
                    cv[j, t] = cv[j, t] / nv[j]
    return C, counts


def pairwise_sq_euclidean(const double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    D = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] dv = D
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for t in range(d):
                    diff = X[i, t] - X[j, t]
                    acc = acc + diff * diff
                dv[i, j] = acc
                dv[j, i] = acc
    return D


def average_linkage(const double[:, ::1] D0):
    """Naive average-linkage agglomeration over a dense distance matrix.

    Returns an (n-1, 3) array of merges ``(a, b, height)`` with ``a < b``;
    cluster ``b`` is absorbed into ``a``. The closest pair is the
    lexicographically smallest ``(a, b)`` among ties.
    """
    cdef Py_ssize_t n = D0.shape[0]
    cdef Py_ssize_t i, j, step, bi, bj
    cdef double best, si, sj
    merges = np.zeros((max(n - 1, 0), 3), dtype=np.float64)
    if n < 2:
        return merges
    D = np.array(D0, dtype=np.float64, copy=True)
    sizes = np.ones(n, dtype=np.float64)
    active = np.ones(n, dtype=np.uint8)
    cdef double[:, ::1] dv = D
    cdef double[::1] sz = sizes
    cdef unsigned char[::1] act = active
    cdef double[:, ::1] mv = merges
    with nogil:
        for step in range(n - 1):
            best = INFINITY
            bi = -1
            bj = -1
            for i in range(n):
                if not act[i]:
                    continue
                for j in range(i + 1, n):
                    if act[j] and dv[i, j] < best:
                        best = dv[i, j]
                        bi = i
                        bj = j
            si = sz[bi]
            sj = sz[bj]
            for j in range(n):
                if act[j] and j != bi and j != bj:
                    dv[bi, j] = (si * dv[bi, j] + sj * dv[bj, j]) / (si + sj)
                    dv[j, bi] = dv[bi, j]
            sz[bi] = si + sj
            act[bj] = 0
            mv[step, 0] = bi
            mv[step, 1] = bj
            mv[step, 2] = best
    return merges
