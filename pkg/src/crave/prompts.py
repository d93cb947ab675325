"""Structured prompts and the JSON schemas their answers must satisfy."""

from __future__ import annotations

from typing import Any, Iterable, Sequence

from .model import SLOTS

GENERATE_QUERIES = "generate_queries"
EXTRACT_5W1H = "extract_5w1h"
ASSESS_CLUSTER = "assess_cluster"
EXPLAIN_VERDICT = "explain_verdict"

DIMENSIONS = ("location", "named_person", "date", "main_topic", "common_objects")
DIMENSION_STATES = ("match", "mismatch", "absent")
VERDICT_LABELS = ("True", "Misleading", "Not enough data")

_string_list = {"type": "array", "items": {"type": "string"}}

QUERIES_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["queries"],
    "properties": {
        "queries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["query", "slots"],
                "properties": {
                    "query": {"type": "string"},
                    "slots": {"type": "array", "items": {"enum": list(SLOTS)}},
                },
            },
        }
    },
}

FIVE_W1H_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": list(SLOTS),
    "properties": {slot: _string_list for slot in SLOTS},
}

_dimension_notes = {
    "type": "object",
    "required": list(DIMENSIONS),
    "properties": {dim: {"enum": list(DIMENSION_STATES)} for dim in DIMENSIONS},
}

ASSESS_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["image_evidence", "text_evidence", "rationale"],
    "properties": {
        "image_evidence": {"oneOf": [{"type": "null"}, _dimension_notes]},
        "text_evidence": {"oneOf": [{"type": "null"}, _dimension_notes]},
        "rationale": {"type": "string"},
    },
}

EXPLAIN_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["label", "explanation"],
    "properties": {
        "label": {"enum": list(VERDICT_LABELS)},
        "explanation": {"type": "string", "minLength": 1},
    },
}


def queries_prompt(
    claim_text: str,
    max_queries: int,
    missing_slots: Iterable[str] | None = None,
    narrative: str | None = None,
) -> dict[str, Any]:
    prompt: dict[str, Any] = {
        "instructions": (
            "Write web search queries that would surface news coverage or fact-checks of the claim. "
            "Tag each query with the 5W1H slots (who, what, when, where, why, how) it seeks."
        ),
        "claim": claim_text,
        "max_queries": max_queries,
    }
    if missing_slots:
        prompt["missing_slots"] = sorted(missing_slots, key=SLOTS.index)
        prompt["instructions"] += " Every query must target at least one of the missing slots."
    if narrative:
        prompt["narrative"] = narrative
        prompt["instructions"] += " Focus on details where the narrative and the claim disagree or are silent."
    return prompt


def five_w1h_prompt(text: str) -> dict[str, Any]:
    return {
        "instructions": (
            "List the named entities in the text for each of who, what, when, where, why and how. "
            "Use empty lists for slots the text does not mention."
        ),
        "text": text,
    }


def assess_prompt(claim_text: str, image_texts: Sequence[str], text_texts: Sequence[str]) -> dict[str, Any]:
    return {
        "instructions": (
            "Compare the claim with the evidence group as a whole, separately for evidence found by "
            "reverse image search and by text search. For each of location, named person, date, main "
            "topic and common objects answer match, mismatch, or absent (not comparable). Return null "
            "for an evidence group that has no items."
        ),
        "claim": claim_text,
        "image_evidence": list(image_texts),
        "text_evidence": list(text_texts),
    }


def explain_prompt(claim_text: str, narratives: Sequence[dict[str, Any]]) -> dict[str, Any]:
    return {
        "instructions": (
            "Given per-narrative alignment labels, decide whether the claim is True or Misleading, "
            "giving priority to narratives backed by reverse image search evidence, and write a short "
            "justification that cites the narratives."
        ),
        "claim": claim_text,
        "narratives": list(narratives),
    }
