"""End-to-end verification of one post."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TypeVar

import numpy as np

from .clustering import (
    Cluster,
    KMeansResult,
    attach_refined,
    build_clusters,
    clustering_text,
    restrict_clusters,
)
from .errors import FixtureMiss, ProviderError
from .judgment import Judge, NarrativeAssessment, VerdictReport
from .model import EvidenceItem, EvidenceSet, PipelineConfig, Post, validate_post
from .providers import Providers, VisualEmbedding
from .retrieval import RetrievalTrace, Retriever
from .visual import FilterResult, filter_evidence

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class PipelineRun:
    report: VerdictReport
    evidence: EvidenceSet
    kept: EvidenceSet
    clusters: list[Cluster]
    kmeans: KMeansResult | None
    traces: list[RetrievalTrace] = field(default_factory=list)
    assessments: list[NarrativeAssessment] = field(default_factory=list)


class Pipeline:
    """Retrieve, cluster, refine, filter, assess and judge.

    One instance may verify many posts; provider handles are shared.
    """

    def __init__(self, providers: Providers, config: PipelineConfig | None = None):
        self.providers = providers
        self.config = config or PipelineConfig()

    def tolerable(self, exc: BaseException) -> bool:
        if isinstance(exc, FixtureMiss):
            return not self.config.strict_fixture_mode
        return isinstance(exc, ProviderError)

    def verify(self, post: Post) -> VerdictReport:
        return self.run(post).report

    def run(self, post: Post) -> PipelineRun:
        validate_post(post)
        cfg = self.config
        timings: dict[str, float] = {}
        errors: list[str] = []
        with ThreadPoolExecutor(max_workers=cfg.max_concurrency) as pool:

            def pmap(fn: Callable[[T], R], xs: Sequence[T]) -> list[R]:
                return list(pool.map(fn, xs)) if len(xs) > 1 else [fn(x) for x in xs]

            retriever = Retriever(self.providers, cfg, executor=pool)
            judge = Judge(self.providers, binary_mode=cfg.binary_mode, tolerable=self.tolerable)

            t0 = time.perf_counter()
            evidence, claim_trace = retriever.retrieve_evidence(post)
            traces = [claim_trace]
            timings["retrieval_s"] = time.perf_counter() - t0

            t0 = time.perf_counter()
            evidence, vectors = self._embed(evidence, pmap, errors)
            clusters, km = build_clusters(evidence, vectors, cfg.K, cfg.rng_seed)
            timings["clustering_s"] = time.perf_counter() - t0

            t0 = time.perf_counter()
            for cluster in list(clusters):
                if cfg.H_cluster == 0:
                    break
                new_items, trace = retriever.refine_cluster_evidence(
                    cluster.narrative, post.claim_text, evidence, scope=f"cluster:{cluster.index}"
                )
                traces.append(trace)
                if not new_items:
                    continue
                new_set, new_vectors = self._embed(EvidenceSet(tuple(new_items)), pmap, errors)
                if not len(new_set):
                    continue
                evidence, _ = evidence.extend(new_set.items)
                clusters = attach_refined(clusters, list(new_set.items), new_vectors)
            timings["refinement_s"] = time.perf_counter() - t0

            t0 = time.perf_counter()
            filtered = self._visual_filter(post, evidence, pmap, errors)
            clusters = restrict_clusters(clusters, filtered.kept.ids())
            timings["visual_filter_s"] = time.perf_counter() - t0

            t0 = time.perf_counter()
            items = evidence.by_id()
            live = [c for c in clusters if not c.is_empty]
            assessments = pmap(lambda c: judge.assess_cluster(post.claim_text, c, items), live)
            judgment = judge.judge(post.claim_text, clusters, assessments, evidence_empty=len(filtered.kept) == 0)
            timings["judgment_s"] = time.perf_counter() - t0

        kept_ids = set(filtered.kept.ids())
        report = VerdictReport(
            post_id=post.id,
            claim_text=post.claim_text,
            verdict=judgment.verdict,
            binary_verdict=judgment.binary_verdict,
            override=judgment.override,
            llm_label=judgment.llm_label,
            explanation=judgment.explanation,
            explanation_source=judgment.explanation_source,
            assessments=list(assessments),
            clusters=[c.summary(items) for c in clusters],
            evidence=[{**it.to_dict(), "kept": it.id in kept_ids} for it in evidence],
            retrieval=[t.to_dict() for t in traces],
            drop_log=filtered.drop_log(),
            unvetted=list(filtered.unvetted),
            config=cfg.to_dict(),
            errors=sorted(errors),
            timings={k: round(v, 6) for k, v in timings.items()},
        )
        return PipelineRun(report, evidence, filtered.kept, clusters, km, traces, list(assessments))

    # -- steps --------------------------------------------------------------

    def _embed(self, evidence: EvidenceSet, pmap, errors: list[str]) -> tuple[EvidenceSet, np.ndarray]:
        """Text embeddings per item; items that cannot be embedded are dropped."""

        def one(item: EvidenceItem):
            try:
                return self.providers.embed_text(clustering_text(item))
            except (ProviderError, ValueError) as exc:
                if isinstance(exc, ProviderError) and not self.tolerable(exc):
                    raise
                errors.append(f"embed_text {item.id}: {exc}")
                return None

        vectors = pmap(one, list(evidence.items))
        keep = [it for it, v in zip(evidence.items, vectors) if v is not None]
        rows = [v for v in vectors if v is not None]
        matrix = np.stack(rows) if rows else np.zeros((0, 0))
        return EvidenceSet(tuple(keep)), matrix

    def _visual_filter(self, post: Post, evidence: EvidenceSet, pmap, errors: list[str]) -> FilterResult:
        def embed(ref: str) -> VisualEmbedding | None:
            try:
                return self.providers.embed_image(ref)
            except ProviderError as exc:
                if not self.tolerable(exc):
                    raise
                errors.append(f"embed_image {ref}: {exc}")
                return None

        claim = embed(post.image_ref)
        with_images = [it for it in evidence if it.image_ref]
        if claim is None:
            return filter_evidence_unvetted(evidence)
        embeddings = pmap(lambda it: embed(it.image_ref), with_images)
        table = {it.id: emb for it, emb in zip(with_images, embeddings)}
        return filter_evidence(claim, evidence, table, self.config.tau_visual)


def filter_evidence_unvetted(evidence: EvidenceSet) -> FilterResult:
    """Keep everything when the claim image itself could not be embedded."""
    return FilterResult(evidence, (), tuple(it.id for it in evidence if it.image_ref))
