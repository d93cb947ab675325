"""Evidence gathering and 5W1H-driven query refinement."""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

from .errors import FixtureMiss, ProviderError
from .model import (
    SLOTS,
    EvidenceItem,
    EvidenceSet,
    FiveW1H,
    Origin,
    PipelineConfig,
    Post,
    evidence_identity,
    make_evidence_id,
    normalize_text,
)
from .prompts import (
    EXTRACT_5W1H,
    FIVE_W1H_SCHEMA,
    GENERATE_QUERIES,
    QUERIES_SCHEMA,
    five_w1h_prompt,
    queries_prompt,
)
from .providers import Providers, SearchResult

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    queries: tuple[str, ...]
    gained: tuple[str, ...]
    # slots the round's queries were aimed at; empty for the claim-only first round
    missing_slots: tuple[str, ...]
    missing_after: tuple[str, ...]
    errors: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "queries": list(self.queries),
            "gained": list(self.gained),
            "missing_slots": list(self.missing_slots),
            "missing_after": list(self.missing_after),
            "errors": list(self.errors),
        }


@dataclass(frozen=True)
class RetrievalTrace:
    scope: str
    rounds: tuple[RoundRecord, ...] = ()
    stopped_early: bool = False
    image_gained: tuple[str, ...] = ()
    errors: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "scope": self.scope,
            "image_gained": list(self.image_gained),
            "rounds": [r.to_dict() for r in self.rounds],
            "stopped_early": self.stopped_early,
            "errors": list(self.errors),
        }


def _covered(entity: str, evidence_entities: Iterable[str]) -> bool:
    return any(entity in other for other in evidence_entities)


def find_missing_slots(claim: FiveW1H, evidence_slots: Sequence[FiveW1H]) -> set[str]:
    """Slots the claim fills that no evidence record mentions.

    A slot counts as covered when some evidence entity in that slot contains
    one of the claim's entities for it as a substring.
    """
    missing: set[str] = set()
    for slot in SLOTS:
        wanted = claim.slot(slot)
        if not wanted:
            continue
        found = any(_covered(e, ev.slot(slot)) for ev in evidence_slots for e in wanted)
        if not found:
            missing.add(slot)
    return missing


def _ordered(slots: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(slots), key=SLOTS.index))


def results_to_items(results: Iterable[SearchResult], origin: Origin, round_index: int) -> list[EvidenceItem]:
    items = []
    for res in results:
        text = res.evidence_text
        if not text.strip() and not res.image_ref:
            continue
        probe = EvidenceItem(id="probe", origin=origin, text=text, image_ref=res.image_ref, source_url=res.url)
        items.append(
            EvidenceItem(
                id=make_evidence_id(origin, evidence_identity(probe)),
                origin=origin,
                text=text,
                image_ref=res.image_ref,
                source_url=res.url,
                retrieved_round=round_index,
            )
        )
    return items


class Retriever:
    """Claim-level and cluster-level evidence retrieval over one provider set."""

    def __init__(self, providers: Providers, config: PipelineConfig, executor: ThreadPoolExecutor | None = None):
        self.providers = providers
        self.config = config
        self._executor = executor
        self._own_executor = executor is None
        self._slot_cache: dict[str, FiveW1H] = {}
        self._lock = threading.Lock()

    def __enter__(self) -> "Retriever":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._own_executor and self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def _map(self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        if len(items) <= 1 or self.config.max_concurrency == 1:
            return [fn(x) for x in items]
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.config.max_concurrency)
        return list(self._executor.map(fn, items))

    def tolerable(self, exc: BaseException) -> bool:
        """Provider failures degrade the run, except fixture misses in strict mode."""
        if isinstance(exc, FixtureMiss):
            return not self.config.strict_fixture_mode
        return isinstance(exc, ProviderError)

    # -- LLM-backed steps ---------------------------------------------------

    def generate_queries(
        self,
        claim_text: str,
        missing_slots: Iterable[str] | None = None,
        context: str | None = None,
    ) -> list[str]:
        if not normalize_text(claim_text):
            raise ValueError("claim_text must be non-empty")
        missing = set(missing_slots or ())
        limit = self.config.max_queries_per_round
        prompt = queries_prompt(claim_text, limit, missing or None, context)
        data = self.providers.llm_complete(GENERATE_QUERIES, prompt, QUERIES_SCHEMA).data
        out: list[str] = []
        seen: set[str] = set()
        for entry in data["queries"]:
            query = " ".join(entry["query"].split())
            if not query or query.lower() in seen:
                continue
            if missing and not missing.intersection(entry["slots"]):
                continue
            seen.add(query.lower())
            out.append(query)
            if len(out) == limit:
                break
        if not out:
            out.append(" ".join(claim_text.split()))
        return out

    def extract_5w1h(self, text: str) -> FiveW1H:
        text = normalize_text(text)
        if not text:
            return FiveW1H()
        with self._lock:
            cached = self._slot_cache.get(text)
        if cached is not None:
            return cached
        data = self.providers.llm_complete(EXTRACT_5W1H, five_w1h_prompt(text), FIVE_W1H_SCHEMA).data
        slots = FiveW1H.from_mapping(data)
        with self._lock:
            self._slot_cache[text] = slots
        return slots

    def _slots_of(self, items: Sequence[EvidenceItem], errors: list[str]) -> list[FiveW1H]:
        def one(item: EvidenceItem) -> FiveW1H | None:
            try:
                return self.extract_5w1h(item.text)
            except ProviderError as exc:
                if not self.tolerable(exc):
                    raise
                errors.append(f"extract_5w1h {item.id}: {exc}")
                return None

        return [s for s in self._map(one, list(items)) if s is not None]

    def _search_round(self, queries: Sequence[str], round_index: int, errors: list[str]) -> list[EvidenceItem]:
        limit = self.config.results_per_query

        def one(query: str) -> list[SearchResult]:
            try:
                return self.providers.text_search(query, limit)
            except ProviderError as exc:
                if not self.tolerable(exc):
                    raise
                errors.append(f"text_search {query!r}: {exc}")
                return []

        items: list[EvidenceItem] = []
        for results in self._map(one, list(queries)):
            items.extend(results_to_items(results, Origin.TEXT_SEARCH, round_index))
        return items

    # -- claim scope --------------------------------------------------------

    def retrieve_evidence(self, post: Post) -> tuple[EvidenceSet, RetrievalTrace]:
        """Reverse image search once, then up to ``H_claim`` text-search rounds.

        Round 1 queries come from the claim alone; later rounds target the
        5W1H slots the evidence so far still misses, stopping as soon as
        nothing is missing.
        """
        evidence = EvidenceSet()
        trace_errors: list[str] = []
        image_gained: tuple[str, ...] = ()
        try:
            results = self.providers.reverse_image_search(post.image_ref)
        except ProviderError as exc:
            if not self.tolerable(exc):
                raise
            trace_errors.append(f"reverse_image_search: {exc}")
        else:
            evidence, gained = evidence.extend(results_to_items(results, Origin.REVERSE_IMAGE, 0))
            image_gained = tuple(it.id for it in gained)

        try:
            claim_slots = self.extract_5w1h(post.claim_text)
        except ProviderError as exc:
            if not self.tolerable(exc):
                raise
            trace_errors.append(f"extract_5w1h claim: {exc}")
            claim_slots = FiveW1H()

        rounds: list[RoundRecord] = []
        target: set[str] = set()
        stopped_early = False
        H = self.config.H_claim
        for r in range(1, H + 1):
            errors: list[str] = []
            try:
                queries = self.generate_queries(post.claim_text, target or None)
            except ProviderError as exc:
                if not self.tolerable(exc):
                    raise
                errors.append(f"generate_queries: {exc}")
                queries = []
            found = self._search_round(queries, r, errors)
            evidence, gained = evidence.extend(found)
            missing = find_missing_slots(claim_slots, self._slots_of(evidence.items, errors))
            rounds.append(
                RoundRecord(
                    round_index=r,
                    queries=tuple(queries),
                    gained=tuple(it.id for it in gained),
                    missing_slots=_ordered(target),
                    missing_after=_ordered(missing),
                    errors=tuple(sorted(errors)),
                )
            )
            if not missing:
                stopped_early = r < H
                break
            target = missing
        trace = RetrievalTrace(
            scope="claim",
            rounds=tuple(rounds),
            stopped_early=stopped_early,
            image_gained=image_gained,
            errors=tuple(trace_errors),
        )
        return evidence, trace

    # -- cluster scope ------------------------------------------------------

    def refine_cluster_evidence(
        self,
        narrative: str,
        claim_text: str,
        existing: EvidenceSet,
        scope: str = "cluster",
    ) -> tuple[list[EvidenceItem], RetrievalTrace]:
        """Targeted search for claim details the narrative does not mention.

        Runs at most ``H_cluster`` rounds; returned items are new relative to
        ``existing`` and to each other.
        """
        if not normalize_text(narrative):
            raise ValueError("narrative must be non-empty")
        trace_errors: list[str] = []
        try:
            claim_slots = self.extract_5w1h(claim_text)
            narrative_slots = self.extract_5w1h(narrative)
        except ProviderError as exc:
            if not self.tolerable(exc):
                raise
            trace_errors.append(f"extract_5w1h: {exc}")
            return [], RetrievalTrace(scope=scope, errors=tuple(trace_errors))

        known = [narrative_slots]
        missing = find_missing_slots(claim_slots, known)
        pool = existing
        gained_all: list[EvidenceItem] = []
        rounds: list[RoundRecord] = []
        H = self.config.H_cluster
        for r in range(1, H + 1):
            if not missing:
                break
            errors: list[str] = []
            try:
                queries = self.generate_queries(claim_text, missing, context=narrative)
            except ProviderError as exc:
                if not self.tolerable(exc):
                    raise
                errors.append(f"generate_queries: {exc}")
                queries = []
            found = self._search_round(queries, r, errors)
            pool, gained = pool.extend(found)
            gained_all.extend(gained)
            known.extend(self._slots_of(gained, errors))
            target = missing
            missing = find_missing_slots(claim_slots, known)
            rounds.append(
                RoundRecord(
                    round_index=r,
                    queries=tuple(queries),
                    gained=tuple(it.id for it in gained),
                    missing_slots=_ordered(target),
                    missing_after=_ordered(missing),
                    errors=tuple(sorted(errors)),
                )
            )
        trace = RetrievalTrace(
            scope=scope,
            rounds=tuple(rounds),
            stopped_early=not missing and len(rounds) < H,
            errors=tuple(trace_errors),
        )
        return gained_all, trace
