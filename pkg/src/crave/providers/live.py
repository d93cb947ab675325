"""HTTP adapters for live mode.

Each adapter turns an engine request into one HTTP exchange and normalizes
the provider's payload into the engine's response body, which is what gets
cached and recorded into fixture packs.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

import httpx

from ..errors import (
    DecodeFailure,
    ImageUnresolvable,
    InvalidConfig,
    ProviderError,
    ProviderTimeout,
    QuotaExhausted,
    TransientProviderError,
)
from .base import EMBED_IMAGE, EMBED_TEXT, LLM, REVERSE_IMAGE, TEXT_SEARCH, Backend

log = logging.getLogger(__name__)

_TAG_RE = re.compile(r"<[^>]+>")

SYSTEM_PROMPT = (
    "You are a meticulous fact-checking assistant. Reply with a single JSON object "
    "that validates against the JSON schema given in the user message. No prose outside JSON."
)


@dataclass(frozen=True)
class LiveSettings:
    llm_api_key: str | None = None
    llm_base_url: str = "https://api.openai.com/v1"
    llm_model: str = "gpt-4o"
    search_api_key: str | None = None
    search_engine_id: str | None = None
    search_url: str = "https://www.googleapis.com/customsearch/v1"
    vision_api_key: str | None = None
    vision_url: str = "https://vision.googleapis.com/v1/images:annotate"
    embed_url: str | None = None
    embed_model: str = "sentence-transformers/all-MiniLM-L6-v2"
    visual_embed_url: str | None = None
    timeout_s: float = 30.0

    @classmethod
    def from_env(cls, env: Mapping[str, str] | None = None, timeout_s: float = 30.0) -> "LiveSettings":
        env = os.environ if env is None else env
        base = env.get("CRAVE_LLM_BASE_URL", cls.llm_base_url).rstrip("/")
        return cls(
            llm_api_key=env.get("CRAVE_LLM_API_KEY"),
            llm_base_url=base,
            llm_model=env.get("CRAVE_LLM_MODEL", cls.llm_model),
            search_api_key=env.get("CRAVE_SEARCH_API_KEY"),
            search_engine_id=env.get("CRAVE_SEARCH_ENGINE_ID"),
            vision_api_key=env.get("CRAVE_VISION_API_KEY"),
            embed_url=env.get("CRAVE_EMBED_URL", f"{base}/embeddings"),
            embed_model=env.get("CRAVE_EMBED_MODEL", cls.embed_model),
            visual_embed_url=env.get("CRAVE_VISUAL_EMBED_URL"),
            timeout_s=timeout_s,
        )

    def missing(self) -> list[str]:
        """Names of required environment variables that are unset."""
        required = {
            "CRAVE_LLM_API_KEY": self.llm_api_key,
            "CRAVE_SEARCH_API_KEY": self.search_api_key,
            "CRAVE_SEARCH_ENGINE_ID": self.search_engine_id,
            "CRAVE_VISION_API_KEY": self.vision_api_key,
            "CRAVE_VISUAL_EMBED_URL": self.visual_embed_url,
        }
        return [name for name, value in required.items() if not value]


def _check(response: httpx.Response, provider_id: str) -> Any:
    if response.status_code == 429:
        raise QuotaExhausted(f"{provider_id}: quota exhausted")
    if response.status_code >= 500:
        raise TransientProviderError(f"{provider_id}: HTTP {response.status_code}")
    if response.status_code >= 400:
        raise ProviderError(f"{provider_id}: HTTP {response.status_code}: {response.text[:200]}")
    try:
        return response.json()
    except (json.JSONDecodeError, ValueError) as exc:
        raise DecodeFailure(f"{provider_id}: response is not JSON") from exc


def _image_payload(identity: str, images: Mapping[str, Path]) -> dict[str, Any]:
    if identity.startswith(("http://", "https://")):
        return {"source": {"imageUri": identity}}
    path = images.get(identity)
    if path is None:
        raise ImageUnresolvable(f"no local bytes registered for {identity}")
    return {"content": base64.b64encode(path.read_bytes()).decode("ascii")}


class LiveBackend(Backend):
    def __init__(
        self,
        settings: LiveSettings,
        *,
        transport: httpx.BaseTransport | None = None,
    ):
        super().__init__()
        self.settings = settings
        self._client = httpx.Client(timeout=settings.timeout_s, transport=transport)
        self._images: dict[str, Path] = {}
        self._adapters: dict[str, Callable[[Mapping[str, Any]], dict[str, Any]]] = {
            LLM: self._llm,
            TEXT_SEARCH: self._text_search,
            REVERSE_IMAGE: self._reverse_image,
            EMBED_TEXT: self._embed_text,
            EMBED_IMAGE: self._embed_image,
        }

    def close(self) -> None:
        self._client.close()

    def register_image(self, identity: str, path: Path) -> None:
        self._images[identity] = path

    def read_blob(self, digest):
        path = self._images.get(digest)
        return path.read_bytes() if path is not None else None

    def _fetch(self, provider_id, request):
        adapter = self._adapters.get(provider_id)
        if adapter is None:
            raise InvalidConfig(f"unknown provider {provider_id!r}")
        try:
            return adapter(request)
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(f"{provider_id}: {exc}") from exc
        except httpx.TransportError as exc:
            raise TransientProviderError(f"{provider_id}: {exc}") from exc

    def _require(self, value: str | None, name: str) -> str:
        if not value:
            raise InvalidConfig(f"{name} is not set")
        return value

    # -- adapters -----------------------------------------------------------

    def _llm(self, request):
        s = self.settings
        key = self._require(s.llm_api_key, "CRAVE_LLM_API_KEY")
        user = {"task": request["task"], "input": request["prompt"], "output_schema": request["schema"]}
        if "repair" in request:
            user["previous_output_was_invalid"] = request["repair"]
        payload = {
            "model": s.llm_model,
            "temperature": 0,
            "response_format": {"type": "json_object"},
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": json.dumps(user, ensure_ascii=False, sort_keys=True)},
            ],
        }
        resp = self._client.post(
            f"{s.llm_base_url}/chat/completions",
            json=payload,
            headers={"Authorization": f"Bearer {key}"},
        )
        data = _check(resp, LLM)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise DecodeFailure("llm: unexpected completion payload") from exc
        try:
            return {"content": json.loads(text)}
        except (json.JSONDecodeError, TypeError):
            return {"content": text}

    def _text_search(self, request):
        s = self.settings
        params = {
            "key": self._require(s.search_api_key, "CRAVE_SEARCH_API_KEY"),
            "cx": self._require(s.search_engine_id, "CRAVE_SEARCH_ENGINE_ID"),
            "q": request["query"],
            "num": min(int(request["limit"]), 10),
        }
        data = _check(self._client.get(s.search_url, params=params), TEXT_SEARCH)
        results = []
        for item in data.get("items") or []:
            link = item.get("link")
            if not link:
                continue
            images = (item.get("pagemap") or {}).get("cse_image") or []
            results.append(
                {
                    "url": link,
                    "title": item.get("title") or "",
                    "snippet": item.get("snippet") or "",
                    "page_text": "",
                    "image_ref": images[0].get("src") if images else None,
                }
            )
        return {"results": results}

    def _reverse_image(self, request):
        s = self.settings
        key = self._require(s.vision_api_key, "CRAVE_VISION_API_KEY")
        payload = {
            "requests": [
                {
                    "image": _image_payload(request["image"], self._images),
                    "features": [{"type": "WEB_DETECTION", "maxResults": 20}],
                }
            ]
        }
        data = _check(self._client.post(s.vision_url, params={"key": key}, json=payload), REVERSE_IMAGE)
        try:
            detection = data["responses"][0].get("webDetection") or {}
        except (KeyError, IndexError, TypeError) as exc:
            raise DecodeFailure("reverse_image: unexpected payload") from exc
        results = []
        for page in detection.get("pagesWithMatchingImages") or []:
            url = page.get("url")
            if not url:
                continue
            matches = page.get("fullMatchingImages") or page.get("partialMatchingImages") or []
            results.append(
                {
                    "url": url,
                    "title": _TAG_RE.sub("", page.get("pageTitle") or ""),
                    "snippet": "",
                    "page_text": "",
                    "image_ref": matches[0].get("url") if matches else None,
                }
            )
        return {"results": results}

    def _embed_text(self, request):
        s = self.settings
        url = self._require(s.embed_url, "CRAVE_EMBED_URL")
        headers = {"Authorization": f"Bearer {s.llm_api_key}"} if s.llm_api_key else {}
        resp = self._client.post(url, json={"model": s.embed_model, "input": request["text"]}, headers=headers)
        data = _check(resp, EMBED_TEXT)
        try:
            vector = data["data"][0]["embedding"] if "data" in data else data["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise DecodeFailure("embed_text: unexpected payload") from exc
        return {"vector": [float(v) for v in vector]}

    def _embed_image(self, request):
        s = self.settings
        url = self._require(s.visual_embed_url, "CRAVE_VISUAL_EMBED_URL")
        headers = {"Authorization": f"Bearer {s.vision_api_key}"} if s.vision_api_key else {}
        payload = {"image": _image_payload(request["image"], self._images)}
        data = _check(self._client.post(url, json=payload, headers=headers), EMBED_IMAGE)
        try:
            face = data.get("face")
            return {
                "face": None if face is None else [float(v) for v in face],
                "place": [float(v) for v in data["place"]],
                "sem": [float(v) for v in data["sem"]],
            }
        except (KeyError, TypeError) as exc:
            raise DecodeFailure("embed_image: unexpected payload") from exc
