"""Domain types, validation, deduplication and canonical request keys."""

from __future__ import annotations

import enum
import hashlib
import json
import math
import unicodedata
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterable, Mapping
from urllib.parse import urlsplit, urlunsplit

from .errors import (
    EmptyClaimText,
    InvalidConfig,
    InvalidEvidence,
    MissingImage,
    UnserializableRequest,
)

SLOTS: tuple[str, ...] = ("who", "what", "when", "where", "why", "how")


def normalize_text(text: str) -> str:
    return unicodedata.normalize("NFC", text).strip()


def normalize_url(url: str) -> str:
    """NFC + trim, lowercasing only the scheme and host."""
    url = normalize_text(url)
    if not url:
        return ""
    parts = urlsplit(url)
    if not parts.netloc:
        return url
    netloc = parts.netloc
    if "@" in netloc:
        userinfo, _, host = netloc.rpartition("@")
        netloc = f"{userinfo}@{host.lower()}"
    else:
        netloc = netloc.lower()
    return urlunsplit((parts.scheme.lower(), netloc, parts.path, parts.query, parts.fragment))


def normalize_entity(entity: str) -> str:
    return " ".join(normalize_text(entity).lower().split())


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Post:
    id: str
    claim_text: str
    image_ref: str | None


class Origin(str, enum.Enum):
    REVERSE_IMAGE = "reverse_image"
    TEXT_SEARCH = "text_search"


@dataclass(frozen=True)
class EvidenceItem:
    id: str
    origin: Origin
    text: str = ""
    image_ref: str | None = None
    source_url: str = ""
    retrieved_round: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.origin, Origin):
            object.__setattr__(self, "origin", Origin(self.origin))
        if not self.text.strip() and not self.image_ref:
            raise InvalidEvidence(f"evidence {self.id!r} has neither text nor image")
        if self.retrieved_round < 0:
            raise InvalidEvidence(f"evidence {self.id!r} has negative retrieved_round")

    @property
    def identity(self) -> str:
        return evidence_identity(self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "origin": self.origin.value,
            "text": self.text,
            "image_ref": self.image_ref,
            "source_url": self.source_url,
            "retrieved_round": self.retrieved_round,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvidenceItem":
        return cls(
            id=data["id"],
            origin=Origin(data["origin"]),
            text=data.get("text", ""),
            image_ref=data.get("image_ref"),
            source_url=data.get("source_url", ""),
            retrieved_round=int(data.get("retrieved_round", 0)),
        )


def evidence_identity(item: EvidenceItem) -> str:
    url = normalize_url(item.source_url)
    if url:
        return "url:" + url
    text = normalize_text(item.text)
    if text:
        return "text:" + hashlib.sha256(text.encode("utf-8")).hexdigest()
    return "image:" + normalize_text(item.image_ref or "")


def dedup_evidence(items: Iterable[EvidenceItem]) -> list[EvidenceItem]:
    """Keep the first item per canonical identity, preserving order."""
    seen: set[str] = set()
    out: list[EvidenceItem] = []
    for item in items:
        key = evidence_identity(item)
        if key in seen:
            continue
        seen.add(key)
        out.append(item)
    return out


@dataclass(frozen=True)
class EvidenceSet:
    items: tuple[EvidenceItem, ...] = ()

    def __post_init__(self) -> None:
        items = tuple(self.items)
        if len(dedup_evidence(items)) != len(items):
            raise InvalidEvidence("evidence set contains duplicate identities")
        ids = [it.id for it in items]
        if len(set(ids)) != len(ids):
            raise InvalidEvidence("evidence set contains duplicate ids")
        object.__setattr__(self, "items", items)

    @property
    def n_image(self) -> int:
        return sum(1 for it in self.items if it.origin is Origin.REVERSE_IMAGE)

    @property
    def n_text(self) -> int:
        return sum(1 for it in self.items if it.origin is Origin.TEXT_SEARCH)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def ids(self) -> list[str]:
        return [it.id for it in self.items]

    def by_id(self) -> dict[str, EvidenceItem]:
        return {it.id: it for it in self.items}

    def contains_identity(self, item: EvidenceItem) -> bool:
        key = evidence_identity(item)
        return any(evidence_identity(it) == key for it in self.items)

    def extend(self, new: Iterable[EvidenceItem]) -> tuple["EvidenceSet", list[EvidenceItem]]:
        """Return the grown set and the items that were actually new."""
        seen = {evidence_identity(it) for it in self.items}
        seen_ids = {it.id for it in self.items}
        gained: list[EvidenceItem] = []
        for item in new:
            key = evidence_identity(item)
            if key in seen or item.id in seen_ids:
                continue
            seen.add(key)
            seen_ids.add(item.id)
            gained.append(item)
        return EvidenceSet(self.items + tuple(gained)), gained

    def subset(self, keep_ids: Iterable[str]) -> "EvidenceSet":
        keep = set(keep_ids)
        return EvidenceSet(tuple(it for it in self.items if it.id in keep))


@dataclass(frozen=True)
class FiveW1H:
    who: tuple[str, ...] = ()
    what: tuple[str, ...] = ()
    when: tuple[str, ...] = ()
    where: tuple[str, ...] = ()
    why: tuple[str, ...] = ()
    how: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for slot in SLOTS:
            values = getattr(self, slot) or ()
            if isinstance(values, str):
                values = (values,)
            cleaned: list[str] = []
            for value in values:
                norm = normalize_entity(str(value))
                if norm and norm not in cleaned:
                    cleaned.append(norm)
            object.__setattr__(self, slot, tuple(cleaned))

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> "FiveW1H":
        data = data or {}
        values = {}
        for slot in SLOTS:
            raw = data.get(slot) or ()
            values[slot] = (raw,) if isinstance(raw, str) else tuple(raw)
        return cls(**values)

    def slot(self, name: str) -> tuple[str, ...]:
        return getattr(self, name)

    def filled_slots(self) -> list[str]:
        return [s for s in SLOTS if getattr(self, s)]

    def is_empty(self) -> bool:
        return not self.filled_slots()

    def to_dict(self) -> dict[str, list[str]]:
        return {slot: list(getattr(self, slot)) for slot in SLOTS}


@dataclass(frozen=True)
class PipelineConfig:
    K: int = 4
    H_claim: int = 3
    H_cluster: int = 2
    tau_visual: float = 0.9
    max_queries_per_round: int = 3
    results_per_query: int = 10
    max_concurrency: int = 4
    rng_seed: int = 0
    strict_fixture_mode: bool = True
    binary_mode: bool = True
    timeout_s: float = 30.0

    def __post_init__(self) -> None:
        if self.K < 1:
            raise InvalidConfig("K must be >= 1")
        if self.H_claim < 1:
            raise InvalidConfig("H_claim must be >= 1")
        if self.H_cluster < 0:
            raise InvalidConfig("H_cluster must be >= 0")
        if not (0.0 <= self.tau_visual <= 1.0) or math.isnan(self.tau_visual):
            raise InvalidConfig("tau_visual must lie in [0, 1]")
        if self.max_queries_per_round < 1:
            raise InvalidConfig("max_queries_per_round must be >= 1")
        if self.results_per_query < 1:
            raise InvalidConfig("results_per_query must be >= 1")
        if self.max_concurrency < 1:
            raise InvalidConfig("max_concurrency must be >= 1")

    def with_(self, **changes: Any) -> "PipelineConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def validate_post(post: Post) -> Post:
    if not isinstance(post.claim_text, str) or not normalize_text(post.claim_text):
        raise EmptyClaimText(f"post {post.id!r} has empty claim text")
    if not post.image_ref or not str(post.image_ref).strip():
        raise MissingImage(f"post {post.id!r} has no image")
    return post


def _canonicalize(value: Any, path: str = "$") -> Any:
    if value is None or isinstance(value, bool):
        return value
    if isinstance(value, str):
        return unicodedata.normalize("NFC", value)
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise UnserializableRequest(f"non-finite float at {path}")
        return value
    if isinstance(value, Mapping):
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise UnserializableRequest(f"non-string key {k!r} at {path}")
            out[unicodedata.normalize("NFC", k)] = _canonicalize(v, f"{path}.{k}")
        return out
    if isinstance(value, (list, tuple)):
        return [_canonicalize(v, f"{path}[{i}]") for i, v in enumerate(value)]
    if isinstance(value, enum.Enum):
        return _canonicalize(value.value, path)
    raise UnserializableRequest(f"cannot serialize {type(value).__name__} at {path}")


def canonical_json(value: Any) -> str:
    """Deterministic JSON: NFC strings, sorted keys, no whitespace."""
    return json.dumps(
        _canonicalize(value),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def canonical_key(provider_id: str, request: Any) -> str:
    """SHA-256 hex digest of ``provider_id`` followed by the canonical request body.

    A bare empty string request hashes as an empty body.
    """
    body = "" if request == "" else canonical_json(request)
    payload = f"{provider_id}\n{body}".encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def make_evidence_id(origin: Origin, identity: str) -> str:
    prefix = "img" if origin is Origin.REVERSE_IMAGE else "txt"
    return f"{prefix}-{hashlib.sha256(identity.encode('utf-8')).hexdigest()[:16]}"


@dataclass(frozen=True)
class LabeledPost:
    post: Post
    label: str
    extra: dict[str, Any] = field(default_factory=dict)
