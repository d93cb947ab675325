"""Narrative clusters built from evidence embeddings."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from ..model import EvidenceItem, EvidenceSet, Origin
from .kmeans import KMeansResult, assign_refined, kmeans_cluster, select_narrative


@dataclass(frozen=True, eq=False)
class Cluster:
    index: int
    members_image: tuple[str, ...]
    members_text: tuple[str, ...]
    centroid: np.ndarray
    narrative: str
    narrative_member_id: str
    refined_ids: tuple[str, ...] = ()

    @property
    def member_ids(self) -> tuple[str, ...]:
        return self.members_image + self.members_text

    @property
    def is_empty(self) -> bool:
        return not self.members_image and not self.members_text

    def restrict(self, keep: set[str]) -> "Cluster":
        return replace(
            self,
            members_image=tuple(i for i in self.members_image if i in keep),
            members_text=tuple(i for i in self.members_text if i in keep),
            refined_ids=tuple(i for i in self.refined_ids if i in keep),
        )

    def summary(self, items: dict[str, EvidenceItem]) -> dict:
        return {
            "index": self.index,
            "narrative": self.narrative,
            "narrative_member_id": self.narrative_member_id,
            "members_image": [{"id": i, "url": items[i].source_url} for i in self.members_image],
            "members_text": [{"id": i, "url": items[i].source_url} for i in self.members_text],
            "refined_ids": list(self.refined_ids),
        }


def clustering_text(item: EvidenceItem) -> str:
    """Text embedded for clustering; URL-only items fall back to their URL."""
    return item.text.strip() or item.source_url.strip() or (item.image_ref or "")


def build_clusters(
    evidence: EvidenceSet, embeddings: np.ndarray, K: int, seed: int
) -> tuple[list[Cluster], KMeansResult | None]:
    """K-means the evidence rows and pick each cluster's narrative.

    ``embeddings`` row ``i`` belongs to ``evidence.items[i]``.
    """
    items = evidence.items
    if not items:
        return [], None
    result = kmeans_cluster(embeddings, K, seed)
    clusters = []
    for k in range(result.k):
        members = [i for i, lab in enumerate(result.labels.tolist()) if lab == k]
        rep = select_narrative(embeddings, members, result.centroids[k])
        clusters.append(
            Cluster(
                index=k,
                members_image=tuple(items[i].id for i in members if items[i].origin is Origin.REVERSE_IMAGE),
                members_text=tuple(items[i].id for i in members if items[i].origin is Origin.TEXT_SEARCH),
                centroid=result.centroids[k],
                narrative=clustering_text(items[rep]),
                narrative_member_id=items[rep].id,
            )
        )
    return clusters, result


def attach_refined(
    clusters: Sequence[Cluster],
    new_items: Sequence[EvidenceItem],
    new_embeddings: np.ndarray,
) -> list[Cluster]:
    """Append refined text evidence to the nearest existing centroid.

    Centroids and narratives are left untouched.
    """
    clusters = list(clusters)
    if not new_items:
        return clusters
    centroids = np.stack([c.centroid for c in clusters])
    targets = assign_refined(new_embeddings, centroids)
    for item, k in zip(new_items, targets.tolist()):
        c = clusters[k]
        clusters[k] = replace(
            c,
            members_text=c.members_text + (item.id,),
            refined_ids=c.refined_ids + (item.id,),
        )
    return clusters


def restrict_clusters(clusters: Iterable[Cluster], keep_ids: Iterable[str]) -> list[Cluster]:
    keep = set(keep_ids)
    return [c.restrict(keep) for c in clusters]
