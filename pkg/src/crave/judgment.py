"""Narrative assessment, the tiered verdict rule, explanations and reports."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .clustering import Cluster
from .errors import ProviderError
from .model import EvidenceItem
from .prompts import (
    ASSESS_CLUSTER,
    ASSESS_SCHEMA,
    DIMENSIONS,
    EXPLAIN_SCHEMA,
    EXPLAIN_VERDICT,
    assess_prompt,
    explain_prompt,
)
from .providers import Providers

log = logging.getLogger(__name__)

REPORT_VERSION = 1


class AlignmentLabel(str, enum.Enum):
    SUPPORTS = "Supports"
    CONFLICTS = "Conflicts"
    IRRELEVANT = "Irrelevant"


class Verdict(str, enum.Enum):
    TRUE = "True"
    MISLEADING = "Misleading"
    NOT_ENOUGH_DATA = "Not enough data"


BINARY_TRUE = "true"
BINARY_MISLEADING = "misleading"


def label_from_notes(notes: Mapping[str, str]) -> AlignmentLabel:
    """Any mismatch conflicts; nothing comparable is irrelevant; otherwise supports."""
    states = [notes.get(dim, "absent") for dim in DIMENSIONS]
    if "mismatch" in states:
        return AlignmentLabel.CONFLICTS
    if all(s == "absent" for s in states):
        return AlignmentLabel.IRRELEVANT
    return AlignmentLabel.SUPPORTS


def merge_notes(*groups: Mapping[str, str] | None) -> dict[str, str]:
    merged = {}
    rank = {"absent": 0, "match": 1, "mismatch": 2}
    for dim in DIMENSIONS:
        state = "absent"
        for notes in groups:
            if notes and rank[notes.get(dim, "absent")] > rank[state]:
                state = notes[dim]
        merged[dim] = state
    return merged


@dataclass(frozen=True)
class NarrativeAssessment:
    cluster_index: int
    image_alignment: AlignmentLabel | None = None
    text_alignment: AlignmentLabel | None = None
    image_notes: Mapping[str, str] | None = None
    text_notes: Mapping[str, str] | None = None
    rationale: str = ""
    failed: bool = False

    def __post_init__(self) -> None:
        if self.image_alignment is None and self.text_alignment is None:
            raise ValueError("an assessed cluster needs at least one alignment label")

    @property
    def dimension_notes(self) -> dict[str, str]:
        return merge_notes(self.image_notes, self.text_notes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "cluster_index": self.cluster_index,
            "image_alignment": None if self.image_alignment is None else self.image_alignment.value,
            "text_alignment": None if self.text_alignment is None else self.text_alignment.value,
            "dimension_notes": self.dimension_notes,
            "image_notes": None if self.image_notes is None else dict(self.image_notes),
            "text_notes": None if self.text_notes is None else dict(self.text_notes),
            "rationale": self.rationale,
            "failed": self.failed,
        }


def rule_verdict(assessments: Sequence[NarrativeAssessment], evidence_empty: bool) -> Verdict:
    """Reverse-image narratives first, then text narratives, else misleading."""
    if evidence_empty or not assessments:
        return Verdict.NOT_ENOUGH_DATA
    if any(a.image_alignment is AlignmentLabel.SUPPORTS for a in assessments):
        return Verdict.TRUE
    if any(a.text_alignment is AlignmentLabel.SUPPORTS for a in assessments):
        return Verdict.TRUE
    return Verdict.MISLEADING


def binarize_verdict(verdict: Verdict) -> str:
    """Two-class label; not-enough-data counts as misleading."""
    return BINARY_TRUE if verdict is Verdict.TRUE else BINARY_MISLEADING


def decisive_assessment(
    verdict: Verdict, assessments: Sequence[NarrativeAssessment]
) -> NarrativeAssessment | None:
    if not assessments:
        return None
    if verdict is Verdict.TRUE:
        for attr in ("image_alignment", "text_alignment"):
            for a in assessments:
                if getattr(a, attr) is AlignmentLabel.SUPPORTS:
                    return a
    for a in assessments:
        if AlignmentLabel.CONFLICTS in (a.image_alignment, a.text_alignment):
            return a
    return assessments[0]


def _label_text(label: AlignmentLabel | None) -> str:
    return "none" if label is None else label.value


def template_explanation(
    verdict: Verdict,
    assessments: Sequence[NarrativeAssessment],
    narratives: Mapping[int, str],
) -> str:
    if verdict is Verdict.NOT_ENOUGH_DATA:
        return "Not enough data: no usable evidence was retrieved for this claim."
    parts = [f"Verdict: {verdict.value}."]
    for a in assessments:
        notes = a.dimension_notes
        mism = [d.replace("_", " ") for d in DIMENSIONS if notes[d] == "mismatch"]
        match = [d.replace("_", " ") for d in DIMENSIONS if notes[d] == "match"]
        line = (
            f"Narrative {a.cluster_index} (reverse image evidence: {_label_text(a.image_alignment)}; "
            f"text evidence: {_label_text(a.text_alignment)}): \"{narratives.get(a.cluster_index, '')}\"."
        )
        if match:
            line += f" Agrees on {', '.join(match)}."
        if mism:
            line += f" Disagrees on {', '.join(mism)}."
        parts.append(line)
    return " ".join(parts)


def ensure_citation(
    explanation: str,
    verdict: Verdict,
    assessments: Sequence[NarrativeAssessment],
    narratives: Mapping[int, str],
) -> str:
    """Make sure a non-NoD explanation quotes at least one narrative."""
    if verdict is Verdict.NOT_ENOUGH_DATA:
        return explanation
    cited = [n for n in narratives.values() if n and n in explanation]
    if cited:
        return explanation
    key = decisive_assessment(verdict, assessments)
    if key is None:
        return explanation
    return f"{explanation.rstrip()} Key narrative {key.cluster_index}: \"{narratives[key.cluster_index]}\"."


@dataclass(frozen=True)
class Judgment:
    verdict: Verdict
    binary_verdict: str | None
    explanation: str
    explanation_source: str  # "llm" or "template"
    llm_label: str | None = None
    override: bool = False


@dataclass
class VerdictReport:
    post_id: str
    claim_text: str
    verdict: Verdict
    binary_verdict: str | None
    override: bool
    llm_label: str | None
    explanation: str
    explanation_source: str
    assessments: list[NarrativeAssessment]
    clusters: list[dict[str, Any]]
    evidence: list[dict[str, Any]]
    retrieval: list[dict[str, Any]]
    drop_log: list[dict[str, Any]]
    unvetted: list[str]
    config: dict[str, Any]
    errors: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict[str, Any]:
        out = {
            "report_version": REPORT_VERSION,
            "post_id": self.post_id,
            "claim_text": self.claim_text,
            "verdict": self.verdict.value,
            "binary_verdict": self.binary_verdict,
            "override": self.override,
            "llm_label": self.llm_label,
            "explanation": self.explanation,
            "explanation_source": self.explanation_source,
            "assessments": [a.to_dict() for a in self.assessments],
            "clusters": self.clusters,
            "evidence": self.evidence,
            "retrieval": self.retrieval,
            "drop_log": self.drop_log,
            "unvetted": self.unvetted,
            "config": self.config,
            "errors": self.errors,
        }
        if include_timings:
            out["timings"] = self.timings
        return out

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, ensure_ascii=False) + "\n"


class Judge:
    def __init__(
        self,
        providers: Providers,
        *,
        binary_mode: bool = True,
        tolerable: Callable[[BaseException], bool] = lambda exc: isinstance(exc, ProviderError),
    ):
        self.providers = providers
        self.binary_mode = binary_mode
        self.tolerable = tolerable

    def assess_cluster(
        self, claim_text: str, cluster: Cluster, items: Mapping[str, EvidenceItem]
    ) -> NarrativeAssessment:
        """One holistic LLM comparison per cluster, split by retrieval origin."""
        if cluster.is_empty:
            raise ValueError(f"cluster {cluster.index} has no members")
        image_texts = [items[i].text for i in cluster.members_image]
        text_texts = [items[i].text for i in cluster.members_text]
        has_image, has_text = bool(image_texts), bool(text_texts)
        try:
            data = self.providers.llm_complete(
                ASSESS_CLUSTER, assess_prompt(claim_text, image_texts, text_texts), ASSESS_SCHEMA
            ).data
        except ProviderError as exc:
            if not self.tolerable(exc):
                raise
            log.warning("assessment of cluster %d failed: %s", cluster.index, exc)
            return NarrativeAssessment(
                cluster_index=cluster.index,
                image_alignment=AlignmentLabel.IRRELEVANT if has_image else None,
                text_alignment=AlignmentLabel.IRRELEVANT if has_text else None,
                rationale="assessment failed",
                failed=True,
            )
        absent = {dim: "absent" for dim in DIMENSIONS}
        image_notes = (data["image_evidence"] or absent) if has_image else None
        text_notes = (data["text_evidence"] or absent) if has_text else None
        return NarrativeAssessment(
            cluster_index=cluster.index,
            image_alignment=label_from_notes(image_notes) if image_notes is not None else None,
            text_alignment=label_from_notes(text_notes) if text_notes is not None else None,
            image_notes=image_notes,
            text_notes=text_notes,
            rationale=data["rationale"],
        )

    def judge(
        self,
        claim_text: str,
        clusters: Sequence[Cluster],
        assessments: Sequence[NarrativeAssessment],
        evidence_empty: bool,
    ) -> Judgment:
        """Rule-based verdict plus an LLM explanation; the rule wins any disagreement."""
        verdict = rule_verdict(assessments, evidence_empty)
        binary = binarize_verdict(verdict) if self.binary_mode else None
        narratives = {c.index: c.narrative for c in clusters}
        if verdict is Verdict.NOT_ENOUGH_DATA:
            text = template_explanation(verdict, assessments, narratives)
            return Judgment(verdict, binary, text, "template")
        payload = [
            {
                "cluster": a.cluster_index,
                "narrative": narratives.get(a.cluster_index, ""),
                "image_alignment": _label_text(a.image_alignment),
                "text_alignment": _label_text(a.text_alignment),
                "dimension_notes": a.dimension_notes,
            }
            for a in assessments
        ]
        try:
            data = self.providers.llm_complete(
                EXPLAIN_VERDICT, explain_prompt(claim_text, payload), EXPLAIN_SCHEMA
            ).data
        except ProviderError as exc:
            if not self.tolerable(exc):
                raise
            log.warning("explanation failed, using template: %s", exc)
            text = template_explanation(verdict, assessments, narratives)
            return Judgment(verdict, binary, ensure_citation(text, verdict, assessments, narratives), "template")
        llm_label = data["label"]
        text = ensure_citation(data["explanation"].strip(), verdict, assessments, narratives)
        return Judgment(verdict, binary, text, "llm", llm_label, override=llm_label != verdict.value)
