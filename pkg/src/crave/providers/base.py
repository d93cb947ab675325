"""Backend contract and provider record types.

Every external capability is reached through ``Backend.fetch(provider_id,
request)``, which maps a JSON request to a JSON response body. Replay,
recording, caching and live HTTP backends all implement this one method, so
a response is always addressable by ``canonical_key(provider_id, request)``.
"""

from __future__ import annotations

import hashlib
import re
import threading
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..errors import DecodeFailure, ImageUnresolvable
from ..model import normalize_url

LLM = "llm"
TEXT_SEARCH = "text_search"
REVERSE_IMAGE = "reverse_image"
EMBED_TEXT = "embed_text"
EMBED_IMAGE = "embed_image"
PROVIDER_IDS = (LLM, TEXT_SEARCH, REVERSE_IMAGE, EMBED_TEXT, EMBED_IMAGE)

TEXT_DIM = 384
FACE_DIM = 512
PLACE_DIM = 2048
SEM_DIM = 1000

_SHA_REF = re.compile(r"^sha256:[0-9a-f]{64}$")


class Backend:
    """Maps (provider_id, request) to a response body; counts calls per provider."""

    def __init__(self) -> None:
        self.calls: Counter[str] = Counter()
        self._lock = threading.Lock()

    def fetch(self, provider_id: str, request: Mapping[str, Any]) -> dict[str, Any]:
        with self._lock:
            self.calls[provider_id] += 1
        return self._fetch(provider_id, request)

    def _fetch(self, provider_id: str, request: Mapping[str, Any]) -> dict[str, Any]:
        raise NotImplementedError

    def read_blob(self, digest: str) -> bytes | None:
        """Bytes for a ``sha256:`` content address, if this backend holds them."""
        return None

    def register_image(self, identity: str, path: Path) -> None:
        """Record where the bytes of a hashed local image live."""

    @property
    def total_calls(self) -> int:
        return sum(self.calls.values())


@dataclass(frozen=True)
class SearchResult:
    url: str
    title: str = ""
    snippet: str = ""
    page_text: str = ""
    image_ref: str | None = None

    def __post_init__(self) -> None:
        if not self.url or not self.url.strip():
            raise DecodeFailure("search result without url")

    @property
    def evidence_text(self) -> str:
        """Title plus page text when a page was scraped, else title plus snippet."""
        body = self.page_text.strip() or self.snippet.strip()
        title = self.title.strip()
        if title and body:
            sep = " " if title.endswith((".", "!", "?", ":")) else ". "
            return title + sep + body
        return title or body

    def to_dict(self) -> dict[str, Any]:
        return {
            "url": self.url,
            "title": self.title,
            "snippet": self.snippet,
            "page_text": self.page_text,
            "image_ref": self.image_ref,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SearchResult":
        try:
            return cls(
                url=str(data["url"]),
                title=str(data.get("title") or ""),
                snippet=str(data.get("snippet") or ""),
                page_text=str(data.get("page_text") or ""),
                image_ref=data.get("image_ref") or None,
            )
        except KeyError as exc:
            raise DecodeFailure(f"search result missing {exc}") from exc


def _as_vector(values: Any, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (dim,):
        raise DecodeFailure(f"{name} embedding has shape {arr.shape}, expected ({dim},)")
    if not np.all(np.isfinite(arr)):
        raise DecodeFailure(f"{name} embedding has non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VisualEmbedding:
    place: np.ndarray
    sem: np.ndarray
    face: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "place", _as_vector(self.place, PLACE_DIM, "place"))
        object.__setattr__(self, "sem", _as_vector(self.sem, SEM_DIM, "sem"))
        if self.face is not None:
            object.__setattr__(self, "face", _as_vector(self.face, FACE_DIM, "face"))

    @property
    def has_face(self) -> bool:
        return self.face is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "face": None if self.face is None else self.face.tolist(),
            "place": self.place.tolist(),
            "sem": self.sem.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "VisualEmbedding":
        try:
            return cls(place=data["place"], sem=data["sem"], face=data.get("face"))
        except KeyError as exc:
            raise DecodeFailure(f"visual embedding missing {exc}") from exc


def content_address(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def image_identity(ref: str | None) -> str:
    """Stable identity of an image reference, used in provider requests.

    Content addresses pass through, local files are hashed, URLs are
    normalized. Anything else is unresolvable.
    """
    if ref is None or not str(ref).strip():
        raise ImageUnresolvable("empty image reference")
    ref = str(ref).strip()
    if _SHA_REF.match(ref):
        return ref
    lowered = ref.lower()
    if lowered.startswith(("http://", "https://")):
        return normalize_url(ref)
    path = Path(ref[7:] if lowered.startswith("file://") else ref)
    if path.is_file():
        return content_address(path.read_bytes())
    raise ImageUnresolvable(f"cannot resolve image reference {ref!r}")


def local_image_path(ref: str) -> Path | None:
    ref = str(ref).strip()
    if _SHA_REF.match(ref) or ref.lower().startswith(("http://", "https://")):
        return None
    path = Path(ref[7:] if ref.lower().startswith("file://") else ref)
    return path if path.is_file() else None
