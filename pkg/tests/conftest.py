from __future__ import annotations

from pathlib import Path

import pytest

import crave
from crave.model import PipelineConfig, Post
from crave.pipeline import Pipeline
from crave.providers import FixturePack, Providers, ReplayBackend

PACKS = Path(crave.__file__).parent / "data" / "packs"
PACK_NAMES = ("true_claim", "ooc", "empty")


def pack_post(name: str) -> Post:
    p = FixturePack(PACKS / name).manifest["posts"][0]
    return Post(p["id"], p["claim_text"], p["image_ref"])


def replay_pipeline(*names: str, config: PipelineConfig | None = None, lenient: bool = False):
    backend = ReplayBackend(*(PACKS / n for n in names))
    return Pipeline(Providers(backend, lenient=lenient), config or PipelineConfig()), backend


@pytest.fixture
def packs_dir() -> Path:
    return PACKS


# -- acceptance summary --------------------------------------------------------

_acceptance: dict[str, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    cid, title = marker.args
    failed = report.failed or (report.when == "call" and report.skipped)
    prev = _acceptance.get(cid, (title, True))
    _acceptance[cid] = (title, prev[1] and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_acceptance, key=lambda c: int(c.removeprefix("AC"))):
        title, ok = _acceptance[cid]
        terminalreporter.write_line(f"{cid} {'PASS' if ok else 'FAIL'}  {title}")
