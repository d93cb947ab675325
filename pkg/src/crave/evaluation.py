"""Labeled datasets, batch runs, and accuracy / F1 / not-enough-data summaries."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import CraveError, DuplicateId, EmptyDataset, MalformedRecord, UnknownLabel
from .judgment import BINARY_MISLEADING, BINARY_TRUE, Verdict
from .model import LabeledPost, Post, validate_post

log = logging.getLogger(__name__)

LABELS = (BINARY_TRUE, BINARY_MISLEADING)
_LABEL_ALIASES = {"true": BINARY_TRUE, "misleading": BINARY_MISLEADING, "false": BINARY_MISLEADING}


def normalize_label(raw: Any) -> str:
    if not isinstance(raw, str) or raw.strip().lower() not in _LABEL_ALIASES:
        raise UnknownLabel(f"unknown label {raw!r}; expected one of {', '.join(LABELS)}")
    return _LABEL_ALIASES[raw.strip().lower()]


def _resolve_image(ref: str, base: Path) -> str:
    if ref.startswith(("sha256:", "http://", "https://")) or os.path.isabs(ref):
        return ref
    candidate = base / ref
    return str(candidate) if candidate.exists() else ref


def load_dataset(path: str | os.PathLike[str]) -> list[LabeledPost]:
    """Read canonical JSONL: one ``{id, claim_text, image_ref, label}`` object per line."""
    path = Path(path)
    out: list[LabeledPost] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise MalformedRecord(line_no, "record is not an object")
            for key in ("id", "claim_text", "image_ref", "label"):
                if not isinstance(record.get(key), str):
                    raise MalformedRecord(line_no, f"missing or non-string {key!r}")
            post_id = record["id"]
            if post_id in seen:
                raise DuplicateId(f"line {line_no}: duplicate id {post_id!r}")
            seen.add(post_id)
            try:
                label = normalize_label(record["label"])
            except UnknownLabel as exc:
                raise UnknownLabel(f"line {line_no}: {exc}") from None
            post = Post(post_id, record["claim_text"], _resolve_image(record["image_ref"], path.parent))
            try:
                validate_post(post)
            except ValueError as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            extra = {k: v for k, v in record.items() if k not in ("id", "claim_text", "image_ref", "label")}
            out.append(LabeledPost(post, label, extra))
    return out


@dataclass(frozen=True)
class EvalRow:
    post_id: str
    gold: str
    verdict: str | None  # raw three-way verdict, None when the run failed
    binary: str | None
    error: str | None = None

    @property
    def correct(self) -> bool:
        return self.error is None and self.gold == self.binary

    def to_dict(self) -> dict[str, Any]:
        return {
            "post_id": self.post_id,
            "gold": self.gold,
            "verdict": self.verdict,
            "binary": self.binary,
            "correct": self.correct,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvalRow":
        return cls(data["post_id"], data["gold"], data.get("verdict"), data.get("binary"), data.get("error"))


def _f1(tp: int, n_pred: int, n_gold: int) -> float:
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def evaluate(rows: Sequence[EvalRow]) -> dict[str, Any]:
    """Accuracy and macro-averaged F1 over the two classes; failed rows are counted apart."""
    scored = [r for r in rows if r.error is None]
    if not scored:
        raise EmptyDataset("no successfully scored rows")
    per_class = {}
    for label in LABELS:
        n_gold = sum(r.gold == label for r in scored)
        n_pred = sum(r.binary == label for r in scored)
        tp = sum(r.gold == label and r.binary == label for r in scored)
        per_class[label] = {"gold": n_gold, "predicted": n_pred, "tp": tp, "f1": _f1(tp, n_pred, n_gold)}
    return {
        "n": len(scored),
        "n_errors": len(rows) - len(scored),
        "accuracy": sum(r.correct for r in scored) / len(scored),
        "macro_f1": sum(c["f1"] for c in per_class.values()) / len(LABELS),
        "f1_average": "macro",
        "per_class": per_class,
    }


@dataclass(frozen=True)
class NodReport:
    pct_pred_false: float
    pct_false_preds_that_are_nod: float
    nod_with_gt_true: float
    nod_with_gt_false: float
    pct_nod_of_total: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (
            self.pct_pred_false,
            self.pct_false_preds_that_are_nod,
            self.nod_with_gt_true,
            self.nod_with_gt_false,
        )

    def to_dict(self) -> dict[str, float]:
        return {
            "pct_pred_false": self.pct_pred_false,
            "pct_false_preds_that_are_nod": self.pct_false_preds_that_are_nod,
            "nod_with_gt_true": self.nod_with_gt_true,
            "nod_with_gt_false": self.nod_with_gt_false,
            "pct_nod_of_total": self.pct_nod_of_total,
        }


def _pct(part: int, whole: int) -> float:
    return round(100.0 * part / whole, 2) if whole else 0.0


def nod_report(rows: Sequence[EvalRow]) -> NodReport:
    """How much of the misleading class comes from not-enough-data verdicts.

    The two gold-split columns are percentages of all rows.
    """
    scored = [r for r in rows if r.error is None]
    if not scored:
        raise EmptyDataset("no successfully scored rows")
    total = len(scored)
    false_preds = [r for r in scored if r.binary == BINARY_MISLEADING]
    nod = [r for r in scored if r.verdict == Verdict.NOT_ENOUGH_DATA.value]
    nod_among_false = sum(r.verdict == Verdict.NOT_ENOUGH_DATA.value for r in false_preds)
    return NodReport(
        pct_pred_false=_pct(len(false_preds), total),
        pct_false_preds_that_are_nod=_pct(nod_among_false, len(false_preds)),
        nod_with_gt_true=_pct(sum(r.gold == BINARY_TRUE for r in nod), total),
        nod_with_gt_false=_pct(sum(r.gold == BINARY_MISLEADING for r in nod), total),
        pct_nod_of_total=_pct(len(nod), total),
    )


def run_batch(pipeline, dataset: Iterable[LabeledPost], max_concurrency: int | None = None) -> list[EvalRow]:
    """Verify every post; rows come back ordered by post id whatever the completion order."""
    items = list(dataset)
    workers = max_concurrency or pipeline.config.max_concurrency

    def one(lp: LabeledPost) -> EvalRow:
        try:
            report = pipeline.verify(lp.post)
        except (CraveError, ValueError) as exc:
            log.error("post %s failed: %s", lp.post.id, exc)
            return EvalRow(lp.post.id, lp.label, None, None, f"{type(exc).__name__}: {exc}")
        binary = report.binary_verdict or ("true" if report.verdict is Verdict.TRUE else "misleading")
        return EvalRow(lp.post.id, lp.label, report.verdict.value, binary)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(one, items))
    return sorted(rows, key=lambda r: r.post_id)


def metrics_document(rows: Sequence[EvalRow]) -> dict[str, Any]:
    return {"metrics": evaluate(rows), "nod": nod_report(rows).to_dict(), "rows": [r.to_dict() for r in rows]}


def format_table(doc: Mapping[str, Any]) -> str:
    m, nod = doc["metrics"], doc["nod"]
    entries = [
        ("posts scored", str(m["n"])),
        ("posts failed", str(m["n_errors"])),
        ("accuracy", f"{m['accuracy']:.4f}"),
        ("macro F1", f"{m['macro_f1']:.4f}"),
    ]
    for label, c in m["per_class"].items():
        entries.append((f"F1 {label}", f"{c['f1']:.4f}  (gold {c['gold']}, predicted {c['predicted']})"))
    entries += [
        ("% predicted misleading", f"{nod['pct_pred_false']:.2f}"),
        ("% of those not-enough-data", f"{nod['pct_false_preds_that_are_nod']:.2f}"),
        ("% NoD with gold true", f"{nod['nod_with_gt_true']:.2f}"),
        ("% NoD with gold misleading", f"{nod['nod_with_gt_false']:.2f}"),
    ]
    width = max(len(k) for k, _ in entries)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in entries) + "\n"
