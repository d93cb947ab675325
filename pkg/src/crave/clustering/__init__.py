"""Narrative clustering: k-means, quality indices and threshold sweeps."""

from ._backend import BACKEND
from .dynamic import (
    SweepResult,
    SweepRow,
    aggregate_sweeps,
    cosine_distance_matrix,
    dynamic_cluster_analysis,
    parse_thresholds,
    size_entropy,
    sweep_to_csv,
)
from .kmeans import KMeansResult, assign_refined, kmeans_cluster, select_narrative, wcss
from .metrics import ClusterQualityReport, cluster_metrics, davies_bouldin_score, silhouette_score
from .narratives import Cluster, attach_refined, build_clusters, clustering_text, restrict_clusters

__all__ = [
    "BACKEND",
    "Cluster",
    "ClusterQualityReport",
    "KMeansResult",
    "SweepResult",
    "SweepRow",
    "aggregate_sweeps",
    "assign_refined",
    "attach_refined",
    "build_clusters",
    "cluster_metrics",
    "clustering_text",
    "cosine_distance_matrix",
    "davies_bouldin_score",
    "dynamic_cluster_analysis",
    "kmeans_cluster",
    "parse_thresholds",
    "restrict_clusters",
    "select_narrative",
    "silhouette_score",
    "size_entropy",
    "sweep_to_csv",
    "wcss",
]
