"""Command-line front end: verify, batch, cluster-report and cache."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import textwrap
from pathlib import Path
from typing import Sequence

from .clustering import aggregate_sweeps, clustering_text, dynamic_cluster_analysis, parse_thresholds
from .errors import CraveError
from .evaluation import format_table, load_dataset, metrics_document, run_batch
from .model import PipelineConfig, Post
from .pipeline import Pipeline
from .providers import (
    Backend,
    CachedBackend,
    FixturePackWriter,
    LiveBackend,
    LiveSettings,
    Providers,
    RecordingBackend,
    ReplayBackend,
    cache_clear,
    cache_stats,
    default_cache_dir,
)
from .retrieval import Retriever

log = logging.getLogger("crave")


class UsageError(Exception):
    """Bad invocation detected after argument parsing; exits with status 2."""


def _add_provider_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--fixtures",
        action="append",
        metavar="DIR",
        help="replay recorded responses from this fixture pack (repeatable); omit for live mode",
    )
    p.add_argument("--lenient", action="store_true", help="treat fixture misses on search providers as no results")
    p.add_argument("--record", metavar="DIR", help="live mode only: also write every response to a new fixture pack")
    p.add_argument("--k", type=int, default=PipelineConfig.K, help="number of evidence clusters (default %(default)s)")
    p.add_argument("--seed", type=int, default=PipelineConfig.rng_seed, help="clustering seed (default %(default)s)")
    p.add_argument(
        "--concurrency", type=int, default=PipelineConfig.max_concurrency, help="parallel provider calls"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crave", description="Cluster-based retrieval-augmented claim verification.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="verify one image-text claim")
    p.add_argument("--text", required=True, help="claim text")
    p.add_argument("--image", required=True, help="claim image: local path, URL, or sha256:<digest>")
    p.add_argument("--id", default="cli-post", help="post id used in the report")
    p.add_argument("--report", metavar="OUT.json", help="write the full machine-readable report here")
    _add_provider_flags(p)

    p = sub.add_parser("batch", help="evaluate a labeled JSONL dataset")
    p.add_argument("--dataset", required=True, help="JSONL with id, claim_text, image_ref, label")
    p.add_argument("--out", required=True, metavar="metrics.json")
    _add_provider_flags(p)

    p = sub.add_parser("cluster-report", help="agglomerative threshold sweep over retrieved evidence")
    p.add_argument("--dataset", required=True)
    p.add_argument("--thresholds", default="0.5:0.95:0.05", help="start:stop:step or a comma list")
    p.add_argument("--out", required=True, metavar="sweep.csv")
    _add_provider_flags(p)

    p = sub.add_parser("cache", help="inspect or clear the provider response cache")
    p.add_argument("action", choices=["stats", "clear"])
    p.add_argument("--dir", help="cache directory (default: $CRAVE_CACHE_DIR or ~/.cache/crave)")
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    try:
        return PipelineConfig(K=args.k, rng_seed=args.seed, max_concurrency=args.concurrency)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _backend(args: argparse.Namespace, config: PipelineConfig) -> tuple[Backend, FixturePackWriter | None]:
    if args.fixtures:
        if args.record:
            raise UsageError("--record cannot be combined with --fixtures")
        for d in args.fixtures:
            if not (Path(d) / "manifest.json").is_file():
                raise UsageError(f"{d} is not a fixture pack (no manifest.json)")
        return ReplayBackend(*args.fixtures), None
    settings = LiveSettings.from_env(timeout_s=config.timeout_s)
    missing = settings.missing()
    if missing:
        raise UsageError(
            "live mode needs " + ", ".join(missing) + " (or pass --fixtures DIR to replay a fixture pack)"
        )
    backend: Backend = CachedBackend(LiveBackend(settings), default_cache_dir())
    writer = None
    if args.record:
        writer = FixturePackWriter(args.record, pack_id=Path(args.record).name, description="recorded live run")
        backend = RecordingBackend(backend, writer)
    return backend, writer


def _providers(args: argparse.Namespace, config: PipelineConfig) -> tuple[Providers, FixturePackWriter | None]:
    backend, writer = _backend(args, config)
    return Providers(backend, lenient=args.lenient), writer


def _check_image(ref: str) -> None:
    if ref.startswith(("sha256:", "http://", "https://")):
        return
    if not Path(ref).is_file():
        raise UsageError(f"--image {ref}: no such file")


def cmd_verify(args: argparse.Namespace) -> int:
    _check_image(args.image)
    config = _config(args)
    providers, writer = _providers(args, config)
    report = Pipeline(providers, config).verify(Post(args.id, args.text, args.image))
    if writer is not None:
        writer.finalize()
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    label = report.verdict.value
    if report.binary_verdict:
        label += f" (two-class: {report.binary_verdict})"
    paragraph = f"Verdict: {label}. {report.explanation}"
    print(textwrap.fill(paragraph, width=100))
    return 0


def cmd_batch(args: argparse.Namespace) -> int:
    config = _config(args)
    dataset = load_dataset(args.dataset)
    providers, writer = _providers(args, config)
    rows = run_batch(Pipeline(providers, config), dataset, config.max_concurrency)
    if writer is not None:
        writer.finalize()
    doc = metrics_document(rows)
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(format_table(doc))
    failed = [r for r in rows if r.error]
    for r in failed:
        print(f"error: {r.post_id}: {r.error}", file=sys.stderr)
    return 1 if failed else 0


def cmd_cluster_report(args: argparse.Namespace) -> int:
    try:
        thresholds = parse_thresholds(args.thresholds)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    config = _config(args)
    dataset = load_dataset(args.dataset)
    providers, writer = _providers(args, config)
    sweeps = []
    with Retriever(providers, config) as retriever:
        for lp in dataset:
            evidence, _ = retriever.retrieve_evidence(lp.post)
            if not len(evidence):
                log.info("post %s has no evidence; skipped", lp.post.id)
                continue
            vectors = [providers.embed_text(clustering_text(it)) for it in evidence]
            sweeps.append(dynamic_cluster_analysis(vectors, thresholds))
    if writer is not None:
        writer.finalize()
    if not sweeps:
        print("no post produced any evidence; nothing to report", file=sys.stderr)
        return 1
    result = aggregate_sweeps(sweeps)
    Path(args.out).write_text(result.to_csv(), encoding="utf-8")
    print(f"{len(sweeps)} posts swept; entropy peaks at threshold {result.peak_threshold:g}")
    return 0


def cmd_cache(args: argparse.Namespace) -> int:
    cache_dir = Path(args.dir) if args.dir else default_cache_dir()
    if args.action == "clear":
        print(f"removed {cache_clear(cache_dir)} entries from {cache_dir}")
        return 0
    stats = cache_stats(cache_dir)
    print(f"{sum(stats.values())} entries")
    for provider_id, count in sorted(stats.items()):
        print(f"  {provider_id}: {count}")
    return 0


COMMANDS = {
    "verify": cmd_verify,
    "batch": cmd_batch,
    "cluster-report": cmd_cluster_report,
    "cache": cmd_cache,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"crave {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (CraveError, OSError, ValueError) as exc:
        print(f"crave {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
