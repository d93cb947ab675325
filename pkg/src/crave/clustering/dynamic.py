"""Similarity-threshold sweep over average-linkage agglomerative clustering.

At threshold ``t`` two groups merge only when their average cosine
similarity is at least ``t``. Each sweep row reports the resulting cluster
count and the Shannon entropy (bits) of the cluster-size distribution; the
threshold with the highest entropy is reported as the peak.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import EmptyInput, ZeroVector
from ._backend import kernels

# merge heights within this of the cut count as merged (identical texts give ~1e-16)
HEIGHT_EPS = 1e-12


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    mean_clusters: float
    entropy: float

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "mean_clusters": self.mean_clusters, "entropy": self.entropy}


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    peak_threshold: float

    def to_csv(self) -> str:
        return sweep_to_csv(self.rows)


def size_entropy(sizes: Iterable[int]) -> float:
    sizes = [s for s in sizes if s > 0]
    total = sum(sizes)
    h = 0.0
    for s in sizes:
        p = s / total
        h -= p * math.log2(p)
    return h + 0.0


def cosine_distance_matrix(embeddings) -> np.ndarray:
    X = np.asarray(embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInput("need at least one embedding")
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector("cosine distance undefined for zero vectors")
    U = X / norms[:, None]
    D = 1.0 - U @ U.T
    D = np.clip((D + D.T) / 2.0, 0.0, 2.0)
    np.fill_diagonal(D, 0.0)
    return np.ascontiguousarray(D)


def _find(parent: list[int], i: int) -> int:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def cut_sizes(merges: np.ndarray, n: int, max_height: float) -> list[int]:
    parent = list(range(n))
    for a, b, h in merges:
        if h <= max_height + HEIGHT_EPS:
            ra, rb = _find(parent, int(a)), _find(parent, int(b))
            if ra != rb:
                parent[rb] = ra
    sizes: dict[int, int] = {}
    for i in range(n):
        r = _find(parent, i)
        sizes[r] = sizes.get(r, 0) + 1
    return sorted(sizes.values(), reverse=True)


def _check_thresholds(thresholds: Sequence[float]) -> list[float]:
    ts = [float(t) for t in thresholds]
    if not ts:
        raise EmptyInput("need at least one threshold")
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("thresholds must be sorted ascending")
    return ts


def _peak(rows: Sequence[SweepRow]) -> float:
    best = rows[0]
    for row in rows[1:]:
        if row.entropy > best.entropy:
            best = row
    return best.threshold


def dynamic_cluster_analysis(embeddings, thresholds: Sequence[float]) -> SweepResult:
    ts = _check_thresholds(thresholds)
    D = cosine_distance_matrix(embeddings)
    n = D.shape[0]
    merges = kernels.average_linkage(D)
    rows = []
    for t in ts:
        sizes = cut_sizes(merges, n, 1.0 - t)
        rows.append(SweepRow(t, float(len(sizes)), size_entropy(sizes)))
    return SweepResult(tuple(rows), _peak(rows))


def aggregate_sweeps(results: Sequence[SweepResult]) -> SweepResult:
    """Average several per-claim sweeps that share one threshold grid."""
    if not results:
        raise EmptyInput("no sweeps to aggregate")
    grid = [r.threshold for r in results[0].rows]
    for res in results[1:]:
        if [r.threshold for r in res.rows] != grid:
            raise ValueError("sweeps use different threshold grids")
    rows = []
    for i, t in enumerate(grid):
        rows.append(
            SweepRow(
                t,
                float(np.mean([res.rows[i].mean_clusters for res in results])),
                float(np.mean([res.rows[i].entropy for res in results])),
            )
        )
    return SweepResult(tuple(rows), _peak(rows))


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "mean_clusters", "entropy"])
    for row in rows:
        writer.writerow([f"{row.threshold:.6g}", f"{row.mean_clusters:.6g}", f"{row.entropy:.6f}"])
    return buf.getvalue()


def parse_thresholds(text: str) -> list[float]:
    """``"0.5:0.95:0.05"`` (inclusive) or a comma list such as ``"0.5,0.7,0.9"``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad threshold range {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"bad threshold range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return sorted(float(p) for p in text.split(",") if p.strip())
