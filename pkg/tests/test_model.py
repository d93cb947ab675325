import hashlib
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from crave.errors import EmptyClaimText, InvalidConfig, InvalidEvidence, MissingImage, UnserializableRequest
from crave.model import (
    EvidenceItem,
    EvidenceSet,
    FiveW1H,
    Origin,
    PipelineConfig,
    Post,
    canonical_json,
    canonical_key,
    dedup_evidence,
    evidence_identity,
    make_evidence_id,
    normalize_text,
    normalize_url,
    validate_post,
)


def item(i, url="", text="t", image=None, origin=Origin.TEXT_SEARCH):
    return EvidenceItem(id=i, origin=origin, text=text, image_ref=image, source_url=url)


class TestValidatePost:
    def test_valid(self):
        post = Post("p", "IAF plane shot down", "sha256:" + "0" * 64)
        assert validate_post(post) is post

    def test_blank_text(self):
        with pytest.raises(EmptyClaimText):
            validate_post(Post("p", "   ", "img.jpg"))

    def test_missing_image(self):
        with pytest.raises(MissingImage):
            validate_post(Post("p", "x", None))


def test_normalize_text_nfc_and_trim():
    assert normalize_text("  Café ") == "Café"


def test_normalize_url_only_scheme_and_host():
    assert normalize_url("HTTPS://News.Example.COM/Path/A?q=B") == "https://news.example.com/Path/A?q=B"


class TestDedup:
    def test_same_url_first_wins(self):
        a = item("a", url="https://x.org/1", text="one")
        b = item("b", url="HTTPS://X.ORG/1", text="two")
        assert dedup_evidence([a, b]) == [a]

    def test_identical_text_different_urls_kept(self):
        a = item("a", url="https://x.org/1", text="same")
        b = item("b", url="https://x.org/2", text="same")
        assert dedup_evidence([a, b]) == [a, b]

    def test_empty(self):
        assert dedup_evidence([]) == []

    def test_text_identity_without_url(self):
        a, b = item("a", text=" same "), item("b", text="same")
        assert evidence_identity(a) == evidence_identity(b)
        assert dedup_evidence([a, b]) == [a]

    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), max_size=30))
    def test_idempotent_and_unique(self, specs):
        items = [item(f"i{n}", url=f"https://h/{u}", text=f"t{t}") for n, (u, t) in enumerate(specs)]
        once = dedup_evidence(items)
        assert dedup_evidence(once) == once
        assert len({evidence_identity(x) for x in once}) == len(once)


def test_evidence_needs_text_or_image():
    with pytest.raises(InvalidEvidence):
        EvidenceItem("x", Origin.TEXT_SEARCH, text="  ")
    assert EvidenceItem("x", Origin.REVERSE_IMAGE, image_ref="sha256:ab").text == ""


def test_evidence_round_trip():
    x = EvidenceItem("x", Origin.REVERSE_IMAGE, "text", "sha256:ab", "https://a", 2)
    assert EvidenceItem.from_dict(x.to_dict()) == x


class TestEvidenceSet:
    def test_rejects_duplicates(self):
        with pytest.raises(InvalidEvidence):
            EvidenceSet((item("a", url="https://u"), item("b", url="https://u")))
        with pytest.raises(InvalidEvidence):
            EvidenceSet((item("a", url="https://u"), item("a", url="https://v")))

    def test_extend_reports_only_new(self):
        base = EvidenceSet((item("a", url="https://u"),))
        grown, gained = base.extend([item("b", url="https://u"), item("c", url="https://v"), item("d", url="https://v")])
        assert [x.id for x in gained] == ["c"]
        assert grown.ids() == ["a", "c"]

    def test_origin_counts(self):
        s = EvidenceSet((item("a", url="1", origin=Origin.REVERSE_IMAGE), item("b", url="2")))
        assert (s.n_image, s.n_text, len(s)) == (1, 1, 2)


def test_five_w1h_normalizes_and_dedups():
    r = FiveW1H.from_mapping({"who": ["PM  Modi", "pm modi"], "where": "Paris", "why": None})
    assert r.who == ("pm modi",)
    assert r.where == ("paris",)
    assert r.filled_slots() == ["who", "where"]
    assert FiveW1H().is_empty()


class TestConfig:
    def test_defaults(self):
        c = PipelineConfig()
        assert (c.K, c.H_claim, c.H_cluster, c.tau_visual) == (4, 3, 2, 0.9)
        assert c.max_queries_per_round == 3 and c.results_per_query == 10
        assert c.strict_fixture_mode and c.binary_mode

    @pytest.mark.parametrize(
        "changes",
        [{"K": 0}, {"H_claim": 0}, {"H_cluster": -1}, {"tau_visual": 1.5}, {"tau_visual": math.nan}, {"max_concurrency": 0}],
    )
    def test_invalid(self, changes):
        with pytest.raises(InvalidConfig):
            PipelineConfig(**changes)


class TestCanonicalKey:
    def test_field_order_irrelevant(self):
        assert canonical_key("search", {"query": "a", "limit": 3}) == canonical_key("search", {"limit": 3, "query": "a"})

    def test_different_queries(self):
        assert canonical_key("search", {"query": "a"}) != canonical_key("search", {"query": "b"})

    def test_provider_is_part_of_key(self):
        assert canonical_key("a", {"x": 1}) != canonical_key("b", {"x": 1})

    def test_empty_body(self):
        key = canonical_key("llm", "")
        assert key == hashlib.sha256(b"llm\n").hexdigest()
        assert len(key) == 64 and all(c in "0123456789abcdef" for c in key)

    def test_nfc_equivalence(self):
        assert canonical_key("s", {"q": "Café"}) == canonical_key("s", {"q": "Café"})

    def test_rejects_nan_and_objects(self):
        with pytest.raises(UnserializableRequest):
            canonical_json({"x": float("nan")})
        with pytest.raises(UnserializableRequest):
            canonical_json({"x": object()})

    @given(st.dictionaries(st.text(max_size=5), st.integers() | st.text(max_size=5), max_size=6))
    def test_key_is_order_invariant(self, d):
        reordered = dict(reversed(list(d.items())))
        assert canonical_key("p", d) == canonical_key("p", reordered)


def test_evidence_id_prefix_by_origin():
    assert make_evidence_id(Origin.REVERSE_IMAGE, "url:x").startswith("img-")
    assert len(make_evidence_id(Origin.TEXT_SEARCH, "url:x")) == 4 + 16
