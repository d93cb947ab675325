"""Capability providers: LLM, search, reverse image search and embeddings."""

from .base import (
    EMBED_IMAGE,
    EMBED_TEXT,
    FACE_DIM,
    LLM,
    PLACE_DIM,
    PROVIDER_IDS,
    REVERSE_IMAGE,
    SEM_DIM,
    TEXT_DIM,
    TEXT_SEARCH,
    Backend,
    SearchResult,
    VisualEmbedding,
    content_address,
    image_identity,
)
from .cache import CachedBackend, cache_clear, cache_stats, default_cache_dir
from .client import Completion, Providers
from .fixtures import FixturePack, FixturePackWriter, RecordingBackend, ReplayBackend
from .live import LiveBackend, LiveSettings

__all__ = [
    "Backend",
    "CachedBackend",
    "Completion",
    "EMBED_IMAGE",
    "EMBED_TEXT",
    "FACE_DIM",
    "FixturePack",
    "FixturePackWriter",
    "LLM",
    "LiveBackend",
    "LiveSettings",
    "PLACE_DIM",
    "PROVIDER_IDS",
    "Providers",
    "REVERSE_IMAGE",
    "RecordingBackend",
    "ReplayBackend",
    "SEM_DIM",
    "SearchResult",
    "TEXT_DIM",
    "TEXT_SEARCH",
    "VisualEmbedding",
    "cache_clear",
    "cache_stats",
    "content_address",
    "default_cache_dir",
    "image_identity",
]
