"""Composite face/place/semantic similarity and the visual relevance filter."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ZeroVector
from .model import EvidenceSet
from .providers import VisualEmbedding

DEFAULT_TAU = 0.9


@dataclass(frozen=True)
class SimilarityBreakdown:
    place_sim: float
    sem_sim: float
    composite: float
    components_used: int
    face_sim: float | None = None

    def to_dict(self) -> dict:
        return {
            "face_sim": self.face_sim,
            "place_sim": self.place_sim,
            "sem_sim": self.sem_sim,
            "composite": self.composite,
            "components_used": self.components_used,
        }


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity of a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def composite_similarity(a: VisualEmbedding, b: VisualEmbedding) -> SimilarityBreakdown:
    """Equal-weight mean of per-component cosines.

    The face component only counts when both images carry a face; otherwise
    the remaining two components share the weight.
    """
    place = cosine(a.place, b.place)
    sem = cosine(a.sem, b.sem)
    if a.face is not None and b.face is not None:
        face = cosine(a.face, b.face)
        return SimilarityBreakdown(place, sem, (face + place + sem) / 3.0, 3, face)
    return SimilarityBreakdown(place, sem, (place + sem) / 2.0, 2, None)


@dataclass(frozen=True)
class FilterResult:
    kept: EvidenceSet
    # (item id, composite) for every dropped item, in evidence order
    dropped: tuple[tuple[str, float], ...] = ()
    # image-bearing items that could not be scored and were kept
    unvetted: tuple[str, ...] = ()
    scores: dict[str, float] = field(default_factory=dict)

    def drop_log(self) -> list[dict]:
        return [{"id": i, "composite": c} for i, c in self.dropped]


def retained(composite: float, tau: float = DEFAULT_TAU) -> bool:
    return composite >= tau


def filter_by_scores(
    evidence: EvidenceSet, scores: Mapping[str, float | None], tau: float = DEFAULT_TAU
) -> FilterResult:
    """Drop image-bearing items whose composite score is below ``tau``.

    Items without an image, or whose score is missing, are kept.
    """
    keep: list[str] = []
    dropped: list[tuple[str, float]] = []
    unvetted: list[str] = []
    kept_scores: dict[str, float] = {}
    for item in evidence:
        if not item.image_ref:
            keep.append(item.id)
            continue
        score = scores.get(item.id)
        if score is None:
            unvetted.append(item.id)
            keep.append(item.id)
        elif retained(score, tau):
            kept_scores[item.id] = score
            keep.append(item.id)
        else:
            dropped.append((item.id, score))
    return FilterResult(evidence.subset(keep), tuple(dropped), tuple(unvetted), kept_scores)


def filter_evidence(
    claim_embedding: VisualEmbedding,
    evidence: EvidenceSet,
    image_embeddings: Mapping[str, VisualEmbedding | None],
    tau: float = DEFAULT_TAU,
) -> FilterResult:
    scores: dict[str, float | None] = {}
    for item in evidence:
        emb = image_embeddings.get(item.id) if item.image_ref else None
        scores[item.id] = None if emb is None else composite_similarity(claim_embedding, emb).composite
    return filter_by_scores(evidence, scores, tau)
