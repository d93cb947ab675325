"""Replay fixture packs: reading, writing, replaying and recording.

Layout::

    <pack>/manifest.json
    <pack>/<provider-id>/<canonical_key>.json    response body
    <pack>/blobs/<sha256>                         images and vectors

Float arrays of ``BLOB_MIN_LEN`` or more elements are stored as raw
little-endian float64 blobs and referenced from the body as
``{"$blob": <sha256>, "dtype": "<f8", "shape": [n]}``.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import threading
from collections import Counter
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..errors import FixtureMiss, FixturePackError
from ..model import canonical_key
from .base import PROVIDER_IDS, Backend

FORMAT_VERSION = 1
BLOB_MIN_LEN = 16
_KEY_RE = re.compile(r"^[0-9a-f]{64}$")


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_body(body: Any) -> bytes:
    return (json.dumps(body, sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False) + "\n").encode(
        "utf-8"
    )


def _is_numeric_array(value: Any) -> bool:
    return (
        isinstance(value, list)
        and len(value) >= BLOB_MIN_LEN
        and all(isinstance(v, float) for v in value)
    )


def _decode_blobs(body: Any, read_blob) -> Any:
    if isinstance(body, dict):
        if "$blob" in body:
            data = read_blob(body["$blob"])
            if data is None:
                raise FixturePackError(f"missing blob {body['$blob']}")
            arr = np.frombuffer(data, dtype=np.dtype(body.get("dtype", "<f8")))
            shape = body.get("shape")
            if shape is not None:
                arr = arr.reshape(shape)
            return arr.astype(np.float64).tolist()
        return {k: _decode_blobs(v, read_blob) for k, v in body.items()}
    if isinstance(body, list):
        return [_decode_blobs(v, read_blob) for v in body]
    return body


class FixturePack:
    """Read-only view of a pack directory."""

    def __init__(self, root: str | os.PathLike[str]):
        self.root = Path(root)
        manifest_path = self.root / "manifest.json"
        if not manifest_path.is_file():
            raise FixturePackError(f"{self.root} has no manifest.json")
        try:
            self.manifest = json.loads(manifest_path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise FixturePackError(f"unreadable manifest: {exc}") from exc
        if self.manifest.get("format_version") != FORMAT_VERSION:
            raise FixturePackError(f"unsupported pack format {self.manifest.get('format_version')!r}")

    @property
    def pack_id(self) -> str:
        return self.manifest["pack_id"]

    def path_for(self, provider_id: str, key: str) -> Path:
        return self.root / provider_id / f"{key}.json"

    def read_blob(self, digest: str) -> bytes | None:
        digest = digest.removeprefix("sha256:")
        path = self.root / "blobs" / digest
        return path.read_bytes() if path.is_file() else None

    def load(self, provider_id: str, key: str) -> dict[str, Any] | None:
        path = self.path_for(provider_id, key)
        if not path.is_file():
            return None
        try:
            raw = json.loads(path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise FixturePackError(f"unparseable record {path}: {exc}") from exc
        return _decode_blobs(raw, self.read_blob)

    def keys(self, provider_id: str) -> list[str]:
        folder = self.root / provider_id
        if not folder.is_dir():
            return []
        return sorted(p.stem for p in folder.glob("*.json"))

    def verify(self) -> dict[str, int]:
        """Parse every record and blob reference; return counts per provider."""
        counts: dict[str, int] = {}
        for provider_id in PROVIDER_IDS:
            keys = self.keys(provider_id)
            for key in keys:
                if not _KEY_RE.match(key):
                    raise FixturePackError(f"bad record name {provider_id}/{key}")
                self.load(provider_id, key)
            if keys:
                counts[provider_id] = len(keys)
        for blob in (self.root / "blobs").glob("*") if (self.root / "blobs").is_dir() else ():
            if hashlib.sha256(blob.read_bytes()).hexdigest() != blob.name:
                raise FixturePackError(f"blob {blob.name} does not match its digest")
        declared = self.manifest.get("providers", {})
        if declared and declared != counts:
            raise FixturePackError(f"manifest coverage {declared} != records {counts}")
        return counts


class FixturePackWriter:
    """Builds a pack directory; safe for concurrent ``record`` calls."""

    def __init__(self, root: str | os.PathLike[str], pack_id: str, description: str = ""):
        self.root = Path(root)
        self.pack_id = pack_id
        self.description = description
        self._lock = threading.Lock()
        self._recorded: dict[tuple[str, str], bytes] = {}
        self.root.mkdir(parents=True, exist_ok=True)

    def add_blob(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.root / "blobs" / digest
        if not path.exists():
            atomic_write_bytes(path, data)
        return "sha256:" + digest

    def _encode(self, body: Any) -> Any:
        if _is_numeric_array(body):
            arr = np.asarray(body, dtype="<f8")
            digest = self.add_blob(arr.tobytes())
            return {"$blob": digest.removeprefix("sha256:"), "dtype": "<f8", "shape": [len(body)]}
        if isinstance(body, dict):
            return {k: self._encode(v) for k, v in body.items()}
        if isinstance(body, list):
            return [self._encode(v) for v in body]
        return body

    def record(self, provider_id: str, key: str, body: Mapping[str, Any]) -> None:
        data = dump_body(self._encode(dict(body)))
        with self._lock:
            previous = self._recorded.get((provider_id, key))
            if previous is not None and previous != data:
                raise FixturePackError(f"conflicting responses recorded for {provider_id}/{key}")
            self._recorded[(provider_id, key)] = data
        atomic_write_bytes(self.root / provider_id / f"{key}.json", data)

    def record_request(self, provider_id: str, request: Mapping[str, Any], body: Mapping[str, Any]) -> str:
        key = canonical_key(provider_id, request)
        self.record(provider_id, key, body)
        return key

    def finalize(self, **extra: Any) -> Path:
        """Write the manifest; ``extra`` keys (e.g. sample posts) are stored alongside."""
        counts: Counter[str] = Counter()
        for provider_id in PROVIDER_IDS:
            folder = self.root / provider_id
            if folder.is_dir():
                counts[provider_id] = len(list(folder.glob("*.json")))
        manifest = {
            "format_version": FORMAT_VERSION,
            "pack_id": self.pack_id,
            "description": self.description,
            "providers": dict(sorted(counts.items())),
            **extra,
        }
        atomic_write_bytes(self.root / "manifest.json", dump_body(manifest))
        return self.root


class ReplayBackend(Backend):
    """Serves recorded responses; never touches the network.

    Misses always raise ``FixtureMiss``; lenient handling of misses is the
    provider facade's decision, not the backend's.
    """

    def __init__(self, *packs: FixturePack | str | os.PathLike[str]):
        super().__init__()
        if not packs:
            raise ValueError("at least one fixture pack is required")
        self.packs = [p if isinstance(p, FixturePack) else FixturePack(p) for p in packs]

    @property
    def pack(self) -> FixturePack:
        return self.packs[0]

    def _fetch(self, provider_id, request):
        key = canonical_key(provider_id, request)
        for pack in self.packs:
            body = pack.load(provider_id, key)
            if body is not None:
                return body
        raise FixtureMiss(provider_id, key)

    def read_blob(self, digest):
        for pack in self.packs:
            data = pack.read_blob(digest)
            if data is not None:
                return data
        return None


class RecordingBackend(Backend):
    """Passes calls through to ``inner`` and writes each response to a pack."""

    def __init__(self, inner: Backend, writer: FixturePackWriter):
        super().__init__()
        self.inner = inner
        self.writer = writer

    def _fetch(self, provider_id, request):
        body = self.inner.fetch(provider_id, request)
        self.writer.record_request(provider_id, request, body)
        return body

    def read_blob(self, digest):
        return self.inner.read_blob(digest)

    def register_image(self, identity, path):
        self.inner.register_image(identity, path)
