"""Regenerate the shipped fixture packs from the scripted scenario worlds.

Each pack holds every provider response a default-config run needs, the
claim image as a blob, and the sample post in its manifest. Run from the
repository root:

    python scripts/build_fixture_packs.py
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
from pathlib import Path

from crave.model import PipelineConfig
from crave.pipeline import Pipeline
from crave.providers import FixturePackWriter, Providers, RecordingBackend
from crave.testing import SCENARIOS

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "crave" / "data" / "packs"

EXPECTED_BINARY = {"true_claim": "true", "ooc": "misleading", "empty": "misleading"}

log = logging.getLogger("build_fixture_packs")


def build(out: Path) -> None:
    dataset = []
    for name, (make_world, post_id) in SCENARIOS.items():
        world = make_world()
        root = out / name
        if root.exists():
            shutil.rmtree(root)
        writer = FixturePackWriter(root, pack_id=name, description=(make_world.__doc__ or "").strip())
        post = world.post(post_id)
        writer.add_blob(world.image_bytes(world.claim_image))
        backend = RecordingBackend(world.backend(), writer)
        report = Pipeline(Providers(backend), PipelineConfig()).verify(post)
        writer.finalize(
            posts=[
                {
                    "id": post.id,
                    "claim_text": post.claim_text,
                    "image_ref": post.image_ref,
                    "expected_verdict": report.verdict.value,
                }
            ]
        )
        log.info("%s: %s (%d provider calls)", name, report.verdict.value, backend.total_calls)
        dataset.append(
            {
                "id": post.id,
                "claim_text": post.claim_text,
                "image_ref": post.image_ref,
                "label": EXPECTED_BINARY[name],
            }
        )
    lines = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in dataset)
    (out / "demo_dataset.jsonl").write_text(lines, encoding="utf-8")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    build(args.out)


if __name__ == "__main__":
    main()
