"""Seeded k-means with k-means++ initialization and restarts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyInput
from ._backend import kernels

N_INIT = 10
MAX_ITER = 100


@dataclass(frozen=True, eq=False)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int
    restart: int
    # assignment-step inertia per Lloyd iteration of the winning restart
    inertia_history: tuple[float, ...]

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])


def _as_matrix(embeddings) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(embeddings, dtype=np.float64))
    if X.ndim == 1:
        X = X.reshape(-1, 1) if X.size else X.reshape(0, 1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInput("k-means needs at least one embedding")
    if not np.all(np.isfinite(X)):
        raise ValueError("embeddings contain non-finite values")
    return X


def n_distinct(X: np.ndarray) -> int:
    return int(np.unique(X, axis=0).shape[0])


def wcss(X: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    diff = X - centroids[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    _, d2 = kernels.assign_labels(X, X[chosen])
    for _ in range(1, k):
        cumulative = np.cumsum(d2)
        total = cumulative[-1]
        u = rng.random() * total
        idx = int(np.searchsorted(cumulative, u, side="right"))
        idx = min(idx, n - 1)
        while d2[idx] == 0.0:
            # zero-weight points can only be hit at float boundaries
            idx = (idx + 1) % n
        chosen.append(idx)
        _, d2 = kernels.assign_labels(X, X[chosen])
    return np.ascontiguousarray(X[chosen])


def _repair_empty(X: np.ndarray, C: np.ndarray, labels: np.ndarray, d2: np.ndarray):
    """Move each empty centroid onto the point farthest from its own centroid."""
    k = C.shape[0]
    for _ in range(X.shape[0]):
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            break
        far = int(np.argmax(d2))
        C[empty[0]] = X[far]
        labels, d2 = kernels.assign_labels(X, C)
    return C, labels, d2


def _lloyd(X: np.ndarray, C: np.ndarray, max_iter: int):
    k = C.shape[0]
    C = np.array(C, dtype=np.float64, copy=True, order="C")
    labels = None
    history: list[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new_labels, d2 = kernels.assign_labels(X, C)
        C, new_labels, d2 = _repair_empty(X, C, new_labels, d2)
        history.append(float(np.sum(d2)))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        C, _ = kernels.update_centroids(X, labels, k)
    assert labels is not None
    C, _ = kernels.update_centroids(X, labels, k)
    return labels, C, n_iter, history


def _relabel_by_first_appearance(labels: np.ndarray, C: np.ndarray):
    order: list[int] = []
    for lab in labels.tolist():
        if lab not in order:
            order.append(lab)
    mapping = np.empty(C.shape[0], dtype=np.int64)
    mapping[order] = np.arange(len(order))
    return mapping[labels], np.ascontiguousarray(C[order])


def kmeans_cluster(
    embeddings,
    K: int,
    seed: int = 0,
    *,
    n_init: int = N_INIT,
    max_iter: int = MAX_ITER,
) -> KMeansResult:
    """Cluster rows of ``embeddings`` into ``min(K, #distinct rows)`` groups.

    Runs ``n_init`` k-means++ restarts from one seeded generator and keeps the
    lowest within-cluster sum of squares; the earliest restart wins ties.
    Cluster indices are renumbered in order of first appearance so the output
    does not depend on which restart won.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    X = _as_matrix(embeddings)
    k = min(K, n_distinct(X))
    rng = np.random.default_rng(seed)
    best: KMeansResult | None = None
    for restart in range(n_init):
        init = _kmeanspp(X, k, rng)
        labels, C, n_iter, history = _lloyd(X, init, max_iter)
        inertia = wcss(X, labels, C)
        if best is None or inertia < best.inertia:
            labels, C = _relabel_by_first_appearance(labels, C)
            best = KMeansResult(labels, C, inertia, n_iter, restart, tuple(history))
    assert best is not None
    return best


def select_narrative(embeddings, member_indices, centroid) -> int:
    """Index (into ``embeddings``) of the member nearest the centroid.

    ``member_indices`` must be in evidence order; the first one wins ties.
    """
    members = list(member_indices)
    if not members:
        raise EmptyInput("cannot pick a narrative for an empty cluster")
    X = _as_matrix(embeddings)
    c = np.asarray(centroid, dtype=np.float64)
    diff = X[members] - c
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return members[int(np.argmin(dist))]


def assign_refined(embeddings, centroids) -> np.ndarray:
    """Nearest-centroid index for each new row; lower index wins ties."""
    C = np.ascontiguousarray(np.asarray(centroids, dtype=np.float64))
    E = np.asarray(embeddings, dtype=np.float64)
    if E.size == 0:
        return np.zeros(0, dtype=np.int64)
    labels, _ = kernels.assign_labels(np.ascontiguousarray(E.reshape(-1, C.shape[1])), C)
    return labels
