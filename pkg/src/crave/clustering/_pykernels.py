"""Pure numpy fallback for the compiled clustering kernels.

Must keep the same API and tie-breaking rules as ``_ckernels.pyx``.
"""

from __future__ import annotations

import numpy as np


def assign_labels(X: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = X.shape[0]
    best = np.full(n, np.inf)
    labels = np.zeros(n, dtype=np.int64)
    for j in range(C.shape[0]):
        diff = X - C[j]
        d2 = np.einsum("ij,ij->i", diff, diff)
        closer = d2 < best
        best[closer] = d2[closer]
        labels[closer] = j
    return labels, best


def update_centroids(X: np.ndarray, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    C = np.zeros((k, X.shape[1]))
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    np.add.at(C, labels, X)
    nonempty = counts > 0
    C[nonempty] /= counts[nonempty, None]
    return C, counts


def pairwise_sq_euclidean(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    D = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(D, 0.0)
    return D


def average_linkage(D0: np.ndarray) -> np.ndarray:
    n = D0.shape[0]
    merges = np.zeros((max(n - 1, 0), 3))
    if n < 2:
        return merges
    D = np.array(D0, dtype=np.float64, copy=True)
    # only the strict upper triangle is searched, matching the compiled loop
    search = np.where(np.triu(np.ones((n, n), dtype=bool), k=1), D, np.inf)
    sizes = np.ones(n)
    active = np.ones(n, dtype=bool)
    for step in range(n - 1):
        flat = int(np.argmin(search))
        a, b = divmod(flat, n)
        height = search[a, b]
        sa, sb = sizes[a], sizes[b]
        others = active.copy()
        others[[a, b]] = False
        merged = (sa * D[a, others] + sb * D[b, others]) / (sa + sb)
        D[a, others] = merged
        D[others, a] = merged
        sizes[a] = sa + sb
        active[b] = False
        idx = np.flatnonzero(others)
        search[a, idx[idx > a]] = merged[idx > a]
        search[idx[idx < a], a] = merged[idx < a]
        search[b, :] = np.inf
        search[:, b] = np.inf
        merges[step] = (a, b, height)
    return merges
