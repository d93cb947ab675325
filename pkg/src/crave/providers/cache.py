"""Content-addressed response cache in front of any backend."""

from __future__ import annotations

import json
import logging
import os
import shutil
from pathlib import Path

from ..model import canonical_key
from .base import Backend
from .fixtures import atomic_write_bytes, dump_body

log = logging.getLogger(__name__)

CACHE_ENV = "CRAVE_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "crave"


class CachedBackend(Backend):
    """Serves repeated requests from disk; only misses reach ``inner``.

    Entries use the same ``<provider-id>/<key>.json`` layout as fixture packs
    so a warm cache can be promoted to a pack by adding a manifest.
    """

    def __init__(self, inner: Backend, cache_dir: str | os.PathLike[str] | None = None):
        super().__init__()
        self.inner = inner
        self.cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
        self.hits = 0
        self.misses = 0

    def _path(self, provider_id: str, key: str) -> Path:
        return self.cache_dir / provider_id / f"{key}.json"

    def _fetch(self, provider_id, request):
        key = canonical_key(provider_id, request)
        path = self._path(provider_id, key)
        if path.is_file():
            try:
                body = json.loads(path.read_text("utf-8"))
            except json.JSONDecodeError:
                log.warning("discarding corrupt cache entry %s", path)
            else:
                with self._lock:
                    self.hits += 1
                return body
        body = self.inner.fetch(provider_id, request)
        atomic_write_bytes(path, dump_body(body))
        with self._lock:
            self.misses += 1
        return body

    def read_blob(self, digest):
        return self.inner.read_blob(digest)

    def register_image(self, identity, path):
        self.inner.register_image(identity, path)


def cache_stats(cache_dir: str | os.PathLike[str]) -> dict[str, int]:
    root = Path(cache_dir)
    stats: dict[str, int] = {}
    if not root.is_dir():
        return stats
    for folder in sorted(p for p in root.iterdir() if p.is_dir()):
        n = sum(1 for _ in folder.glob("*.json"))
        if n:
            stats[folder.name] = n
    return stats


def cache_clear(cache_dir: str | os.PathLike[str]) -> int:
    """Delete every cache entry; returns the number removed."""
    root = Path(cache_dir)
    removed = sum(cache_stats(root).values())
    if root.is_dir():
        for child in root.iterdir():
            if child.is_dir():
                shutil.rmtree(child)
            else:
                child.unlink()
    return removed
