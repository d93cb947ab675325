"""Deterministic in-process providers for tests and for authoring fixture packs.

``ScriptedBackend`` answers provider requests from Python callables.
``World`` is a small self-consistent corpus (documents, a search index, a
reverse-image index and a rule-following fake LLM) that produces those
callables.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ..errors import FixtureMiss
from ..model import SLOTS, Post, canonical_key, normalize_text
from ..prompts import (
    ASSESS_CLUSTER,
    DIMENSIONS,
    EXPLAIN_VERDICT,
    EXTRACT_5W1H,
    GENERATE_QUERIES,
)
from ..providers import (
    EMBED_IMAGE,
    EMBED_TEXT,
    FACE_DIM,
    LLM,
    PLACE_DIM,
    REVERSE_IMAGE,
    SEM_DIM,
    TEXT_DIM,
    TEXT_SEARCH,
    Backend,
    SearchResult,
    content_address,
)

Handler = Callable[[Mapping[str, Any]], dict[str, Any]]

_TOKEN = re.compile(r"[a-z0-9]+")


class ScriptedBackend(Backend):
    """Dispatches each provider id to a handler; unknown ids are fixture misses."""

    def __init__(self, handlers: Mapping[str, Handler], blobs: Mapping[str, bytes] | None = None):
        super().__init__()
        self.handlers = dict(handlers)
        self.blobs = dict(blobs or {})
        self.requests: list[tuple[str, dict]] = []

    def _fetch(self, provider_id, request):
        with self._lock:
            self.requests.append((provider_id, dict(request)))
        handler = self.handlers.get(provider_id)
        if handler is None:
            raise FixtureMiss(provider_id, canonical_key(provider_id, request))
        return handler(request)

    def read_blob(self, digest):
        return self.blobs.get(digest)


def _seed(text: str) -> int:
    return int(hashlib.sha256(text.encode("utf-8")).hexdigest()[:16], 16)


def hash_embedding(text: str, dim: int = TEXT_DIM) -> list[float]:
    """Signed feature-hashing bag of words, unit length."""
    vec = np.zeros(dim)
    for token in _TOKEN.findall(text.lower()):
        h = hashlib.sha256(token.encode("utf-8")).digest()
        idx = int.from_bytes(h[:4], "little") % dim
        vec[idx] += 1.0 if h[4] & 1 else -1.0
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec[_seed(text) % dim] = 1.0
        norm = 1.0
    return (vec / norm).tolist()


def visual_embedding(image_key: str, face: bool) -> dict[str, Any]:
    """Pseudo-random but fixed vectors per image; identical images match exactly."""
    rng = np.random.default_rng(_seed(image_key))
    place = rng.standard_normal(PLACE_DIM)
    sem = rng.standard_normal(SEM_DIM)
    face_vec = rng.standard_normal(FACE_DIM) if face else None
    return {
        "face": None if face_vec is None else face_vec.tolist(),
        "place": place.tolist(),
        "sem": sem.tolist(),
    }


# ---------------------------------------------------------------------------
# A tiny world
# ---------------------------------------------------------------------------

_FACT_TO_SLOT = {"named_person": "who", "main_topic": "what", "date": "when", "location": "where"}


def facts_to_slots(facts: Mapping[str, str]) -> dict[str, list[str]]:
    slots: dict[str, list[str]] = {s: [] for s in SLOTS}
    for dim, slot in _FACT_TO_SLOT.items():
        if facts.get(dim):
            slots[slot].append(facts[dim])
    return slots


@dataclass
class Doc:
    url: str
    title: str
    body: str
    facts: dict[str, str]
    image: str | None = None  # image key; None for text-only pages

    def result(self, image_refs: Mapping[str, str]) -> SearchResult:
        return SearchResult(
            url=self.url,
            title=self.title,
            snippet=self.body,
            image_ref=image_refs[self.image] if self.image else None,
        )

    @property
    def text(self) -> str:
        return SearchResult(url=self.url, title=self.title, snippet=self.body).evidence_text


@dataclass
class World:
    """Documents plus indices; yields handlers for every provider."""

    claim_text: str
    claim_facts: dict[str, str]
    claim_image: str
    docs: list[Doc] = field(default_factory=list)
    reverse_index: dict[str, list[str]] = field(default_factory=dict)  # image key -> urls
    search_index: dict[str, list[str]] = field(default_factory=dict)  # query -> urls
    initial_queries: list[str] = field(default_factory=list)
    slot_queries: dict[str, list[str]] = field(default_factory=dict)
    faces: set[str] = field(default_factory=set)
    # optional override of the fake LLM's final label (used to exercise rule-wins)
    explain_label: str | None = None
    extra_slots: dict[str, dict[str, list[str]]] = field(default_factory=dict)

    # -- images ---------------------------------------------------------------

    def image_bytes(self, key: str) -> bytes:
        return f"synthetic-image:{key}".encode("utf-8")

    def image_ref(self, key: str) -> str:
        return content_address(self.image_bytes(key))

    def image_keys(self) -> list[str]:
        keys = {self.claim_image} | {d.image for d in self.docs if d.image}
        return sorted(keys)

    @property
    def image_refs(self) -> dict[str, str]:
        return {k: self.image_ref(k) for k in self.image_keys()}

    def post(self, post_id: str) -> Post:
        return Post(id=post_id, claim_text=self.claim_text, image_ref=self.image_ref(self.claim_image))

    # -- lookups --------------------------------------------------------------

    def _doc(self, url: str) -> Doc:
        for d in self.docs:
            if d.url == url:
                return d
        raise KeyError(url)

    def _facts_for_text(self, text: str) -> dict[str, str] | None:
        text = normalize_text(text)
        if text == normalize_text(self.claim_text):
            return self.claim_facts
        for d in self.docs:
            if normalize_text(d.text) == text:
                return d.facts
        return None

    # -- handlers -------------------------------------------------------------

    def text_search(self, request: Mapping[str, Any]) -> dict[str, Any]:
        urls = self.search_index.get(request["query"].lower(), [])
        refs = self.image_refs
        results = [self._doc(u).result(refs).to_dict() for u in urls][: request["limit"]]
        return {"results": results}

    def reverse_image(self, request: Mapping[str, Any]) -> dict[str, Any]:
        by_ref = {ref: key for key, ref in self.image_refs.items()}
        key = by_ref.get(request["image"])
        refs = self.image_refs
        return {"results": [self._doc(u).result(refs).to_dict() for u in self.reverse_index.get(key, [])]}

    def embed_text(self, request: Mapping[str, Any]) -> dict[str, Any]:
        return {"vector": hash_embedding(request["text"])}

    def embed_image(self, request: Mapping[str, Any]) -> dict[str, Any]:
        by_ref = {ref: key for key, ref in self.image_refs.items()}
        key = by_ref.get(request["image"], request["image"])
        return visual_embedding(key, face=key in self.faces)

    def llm(self, request: Mapping[str, Any]) -> dict[str, Any]:
        task, prompt = request["task"], request["prompt"]
        if task == EXTRACT_5W1H:
            text = normalize_text(prompt["text"])
            if text in self.extra_slots:
                return {"content": self.extra_slots[text]}
            facts = self._facts_for_text(text)
            return {"content": facts_to_slots(facts or {})}
        if task == GENERATE_QUERIES:
            missing = prompt.get("missing_slots")
            if not missing:
                entries = [{"query": q, "slots": ["what"]} for q in self.initial_queries]
            else:
                entries = [
                    {"query": q, "slots": [slot]} for slot in missing for q in self.slot_queries.get(slot, [])
                ]
                if not entries:
                    entries = [{"query": self.claim_text, "slots": list(missing)}]
            return {"content": {"queries": entries}}
        if task == ASSESS_CLUSTER:
            return {
                "content": {
                    "image_evidence": self._notes(prompt["image_evidence"]),
                    "text_evidence": self._notes(prompt["text_evidence"]),
                    "rationale": "scripted comparison of claim and evidence details",
                }
            }
        if task == EXPLAIN_VERDICT:
            return {"content": self._explain(prompt["narratives"])}
        raise FixtureMiss(LLM, canonical_key(LLM, request))

    def _notes(self, texts: Sequence[str]) -> dict[str, str] | None:
        if not texts:
            return None
        facts = [f for f in (self._facts_for_text(t) for t in texts) if f is not None]
        notes = {}
        for dim in DIMENSIONS:
            claim_value = self.claim_facts.get(dim)
            values = [f[dim] for f in facts if f.get(dim)]
            if not claim_value or not values:
                notes[dim] = "absent"
                continue
            # the cluster's prevailing account decides, not individual outliers
            prevailing = Counter(values).most_common(1)[0][0]
            notes[dim] = "match" if prevailing == claim_value else "mismatch"
        return notes

    def _explain(self, narratives: Sequence[Mapping[str, Any]]) -> dict[str, str]:
        supports_img = [n for n in narratives if n["image_alignment"] == "Supports"]
        supports_txt = [n for n in narratives if n["text_alignment"] == "Supports"]
        if supports_img or supports_txt:
            label = "True"
            key = (supports_img or supports_txt)[0]
            text = f"Narrative {key['cluster']} corroborates the claim: \"{key['narrative']}\"."
        else:
            label = "Misleading"
            key = narratives[0]
            for n in narratives:
                if "Conflicts" in (n["image_alignment"], n["text_alignment"]):
                    key = n
                    break
            text = (
                f"No narrative supports the claim. Narrative {key['cluster']} gives a different context: "
                f"\"{key['narrative']}\"."
            )
        return {"label": self.explain_label or label, "explanation": text}

    def handlers(self) -> dict[str, Handler]:
        return {
            LLM: self.llm,
            TEXT_SEARCH: self.text_search,
            REVERSE_IMAGE: self.reverse_image,
            EMBED_TEXT: self.embed_text,
            EMBED_IMAGE: self.embed_image,
        }

    def backend(self) -> ScriptedBackend:
        blobs = {self.image_ref(k): self.image_bytes(k) for k in self.image_keys()}
        return ScriptedBackend(self.handlers(), blobs)
