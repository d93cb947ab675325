"""Internal cluster-quality indices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .kmeans import _as_matrix


@dataclass(frozen=True)
class ClusterQualityReport:
    """``None`` marks an index that is undefined for the given partition."""

    silhouette: float | None
    davies_bouldin: float | None
    n_clusters: int
    sweep: list = field(default_factory=list)

    @property
    def defined(self) -> bool:
        return self.silhouette is not None

    def to_dict(self) -> dict:
        return {
            "silhouette": self.silhouette,
            "davies_bouldin": self.davies_bouldin,
            "n_clusters": self.n_clusters,
            "sweep": [row.to_dict() for row in self.sweep],
        }


def silhouette_score(X: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette; points in singleton clusters score 0."""
    D = np.sqrt(np.maximum(kernels.pairwise_sq_euclidean(X), 0.0))
    clusters = np.unique(labels)
    masks = [labels == c for c in clusters]
    sizes = np.array([m.sum() for m in masks])
    scores = np.zeros(X.shape[0])
    # mean distance from every point to every cluster
    means = np.stack([D[:, m].sum(axis=1) for m in masks], axis=1)
    for ci, mask in enumerate(masks):
        if sizes[ci] < 2:
            continue
        idx = np.flatnonzero(mask)
        a = means[idx, ci] / (sizes[ci] - 1)
        others = [cj for cj in range(len(clusters)) if cj != ci]
        b = np.min(means[np.ix_(idx, others)] / sizes[others], axis=1)
        denom = np.maximum(a, b)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(denom > 0, (b - a) / denom, 0.0)
        scores[idx] = s
    return float(np.mean(scores))


def davies_bouldin_score(X: np.ndarray, labels: np.ndarray) -> float:
    clusters = np.unique(labels)
    k = len(clusters)
    centroids = np.stack([X[labels == c].mean(axis=0) for c in clusters])
    spread = np.array(
        [np.mean(np.linalg.norm(X[labels == c] - centroids[i], axis=1)) for i, c in enumerate(clusters)]
    )
    sep = np.sqrt(np.maximum(kernels.pairwise_sq_euclidean(np.ascontiguousarray(centroids)), 0.0))
    worst = np.zeros(k)
    for i in range(k):
        ratios = []
        for j in range(k):
            if i == j:
                continue
            # coincident centroids contribute nothing, as in common implementations
            ratios.append(0.0 if sep[i, j] == 0.0 else (spread[i] + spread[j]) / sep[i, j])
        worst[i] = max(ratios)
    return float(np.mean(worst))


def cluster_metrics(embeddings, assignment) -> ClusterQualityReport:
    X = _as_matrix(embeddings)
    labels = np.asarray(assignment)
    if labels.shape != (X.shape[0],):
        raise ValueError("assignment length must match the number of embeddings")
    n_clusters = int(np.unique(labels).size)
    if n_clusters < 2:
        return ClusterQualityReport(None, None, n_clusters)
    return ClusterQualityReport(
        silhouette=silhouette_score(X, labels),
        davies_bouldin=davies_bouldin_score(X, labels),
        n_clusters=n_clusters,
    )
