"""Typed provider operations on top of a ``Backend``."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Any, Mapping

import jsonschema
import numpy as np

from ..errors import (
    DecodeFailure,
    FixtureMiss,
    SchemaViolation,
    TransientProviderError,
)
from .base import (
    EMBED_IMAGE,
    EMBED_TEXT,
    LLM,
    REVERSE_IMAGE,
    TEXT_DIM,
    TEXT_SEARCH,
    Backend,
    SearchResult,
    VisualEmbedding,
    image_identity,
    local_image_path,
)

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 2


@dataclass(frozen=True)
class Completion:
    data: dict[str, Any]
    retry_count: int = 0


class Providers:
    """The five capabilities the pipeline needs, with contracts enforced.

    ``lenient`` turns fixture misses on the two search capabilities into empty
    result lists; every other miss still raises ``FixtureMiss``.
    """

    def __init__(self, backend: Backend, *, lenient: bool = False, max_attempts: int = MAX_ATTEMPTS):
        self.backend = backend
        self.lenient = lenient
        self.max_attempts = max_attempts

    def _fetch(self, provider_id: str, request: Mapping[str, Any]) -> dict[str, Any]:
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                return self.backend.fetch(provider_id, request)
            except TransientProviderError as exc:
                log.info("%s attempt %d failed: %s", provider_id, attempt + 1, exc)
                last = exc
        assert last is not None
        raise last

    # -- LLM ----------------------------------------------------------------

    def llm_complete(self, task: str, prompt: Mapping[str, Any], schema: Mapping[str, Any]) -> Completion:
        """Structured completion validated against ``schema``; one re-ask on violation."""
        if not prompt:
            raise ValueError("prompt must be non-empty")
        request: dict[str, Any] = {"task": task, "prompt": dict(prompt), "schema": dict(schema)}
        validator = jsonschema.Draft202012Validator(schema)
        retry_count = 0
        while True:
            body = self._fetch(LLM, request)
            content = body.get("content")
            if isinstance(content, str):
                try:
                    content = json.loads(content)
                except json.JSONDecodeError:
                    pass
            error = _first_error(validator, content)
            if error is None:
                return Completion(data=content, retry_count=retry_count)
            if retry_count >= 1:
                raise SchemaViolation(f"{task}: {error}")
            retry_count += 1
            request = {
                **request,
                "repair": {"invalid_output": content, "error": error},
            }

    # -- search -------------------------------------------------------------

    def _results(self, provider_id: str, request: Mapping[str, Any]) -> list[SearchResult]:
        try:
            body = self._fetch(provider_id, request)
        except FixtureMiss:
            if self.lenient:
                log.info("lenient fixture miss on %s treated as no results", provider_id)
                return []
            raise
        raw = body.get("results")
        if not isinstance(raw, list):
            raise DecodeFailure(f"{provider_id} response has no results list")
        return [SearchResult.from_dict(r) for r in raw]

    def text_search(self, query: str, limit: int = 10) -> list[SearchResult]:
        if not isinstance(query, str) or not query.strip():
            raise ValueError("query must be non-empty")
        if limit < 1:
            raise ValueError("limit must be >= 1")
        results = self._results(TEXT_SEARCH, {"query": query.strip(), "limit": int(limit)})
        return results[:limit]

    def _image(self, image_ref: str) -> str:
        identity = image_identity(image_ref)
        path = local_image_path(image_ref)
        if path is not None:
            self.backend.register_image(identity, path)
        return identity

    def reverse_image_search(self, image_ref: str) -> list[SearchResult]:
        identity = self._image(image_ref)
        return self._results(REVERSE_IMAGE, {"image": identity})

    # -- embeddings ---------------------------------------------------------

    def embed_text(self, text: str) -> np.ndarray:
        """384-d embedding scaled to unit L2 norm."""
        if not isinstance(text, str) or not text.strip():
            raise ValueError("text must be non-empty")
        body = self._fetch(EMBED_TEXT, {"text": text})
        vec = np.asarray(body.get("vector"), dtype=np.float64)
        if vec.shape != (TEXT_DIM,) or not np.all(np.isfinite(vec)):
            raise DecodeFailure(f"text embedding has shape {vec.shape}, expected ({TEXT_DIM},)")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise DecodeFailure("text embedding has zero norm")
        vec = vec / norm
        vec.setflags(write=False)
        return vec

    def embed_image(self, image_ref: str) -> VisualEmbedding:
        identity = self._image(image_ref)
        body = self._fetch(EMBED_IMAGE, {"image": identity})
        return VisualEmbedding.from_dict(body)


def _first_error(validator: jsonschema.Draft202012Validator, content: Any) -> str | None:
    err = jsonschema.exceptions.best_match(validator.iter_errors(content))
    if err is None:
        return None
    where = "/".join(str(p) for p in err.path) or "<root>"
    return f"{where}: {err.message}"
