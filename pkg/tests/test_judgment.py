import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crave.clustering import Cluster
from crave.errors import ProviderError
from crave.judgment import (
    AlignmentLabel,
    Judge,
    NarrativeAssessment,
    Verdict,
    binarize_verdict,
    ensure_citation,
    label_from_notes,
    rule_verdict,
    template_explanation,
)
from crave.model import EvidenceItem, Origin, PipelineConfig
from crave.pipeline import Pipeline
from crave.prompts import DIMENSIONS
from crave.providers import LLM, Providers
from crave.testing import ScriptedBackend, ooc_world

S, C, I = AlignmentLabel.SUPPORTS, AlignmentLabel.CONFLICTS, AlignmentLabel.IRRELEVANT


def notes(**kw):
    return {d: kw.get(d, "absent") for d in DIMENSIONS}


def a(i, img=None, txt=None):
    return NarrativeAssessment(i, img, txt)


class TestLabelRule:
    def test_any_mismatch_conflicts(self):
        assert label_from_notes(notes(location="mismatch", date="match")) is C

    def test_all_absent_irrelevant(self):
        assert label_from_notes(notes()) is I

    def test_match_without_mismatch_supports(self):
        assert label_from_notes(notes(named_person="match")) is S


class TestRuleVerdict:
    def test_image_support_wins(self):
        assert rule_verdict([a(0, S, C)], False) is Verdict.TRUE

    def test_text_support_when_image_conflicts(self):
        assert rule_verdict([a(0, C, None), a(1, None, S)], False) is Verdict.TRUE

    def test_nothing_supports(self):
        assert rule_verdict([a(0, C, I), a(1, I, C)], False) is Verdict.MISLEADING

    def test_empty_evidence_or_no_assessments(self):
        assert rule_verdict([a(0, S)], True) is Verdict.NOT_ENOUGH_DATA
        assert rule_verdict([], False) is Verdict.NOT_ENOUGH_DATA

    def test_assessment_needs_a_label(self):
        with pytest.raises(ValueError):
            NarrativeAssessment(0)

    labels = st.sampled_from([S, C, I, None])
    assessments = st.lists(st.tuples(labels, labels).filter(lambda t: t != (None, None)), min_size=1, max_size=6)

    @given(assessments, st.randoms())
    def test_permutation_invariant(self, specs, rnd):
        items = [a(i, x, y) for i, (x, y) in enumerate(specs)]
        shuffled = list(items)
        rnd.shuffle(shuffled)
        assert rule_verdict(items, False) is rule_verdict(shuffled, False)

    @given(assessments)
    def test_adding_support_never_lowers(self, specs):
        items = [a(i, x, y) for i, (x, y) in enumerate(specs)]
        assert rule_verdict(items + [a(99, S)], False) is Verdict.TRUE
        assert rule_verdict(items + [a(99, None, S)], False) is Verdict.TRUE


def test_binarize():
    assert binarize_verdict(Verdict.TRUE) == "true"
    assert binarize_verdict(Verdict.MISLEADING) == "misleading"
    assert binarize_verdict(Verdict.NOT_ENOUGH_DATA) == "misleading"


def cluster(index=0, image=("i1",), text=("t1",), narrative="Crash near Barmer in 2016."):
    return Cluster(index, tuple(image), tuple(text), np.zeros(2), narrative, (image + text)[0])


ITEMS = {
    "i1": EvidenceItem("i1", Origin.REVERSE_IMAGE, "Crash near Barmer in 2016.", source_url="https://a"),
    "t1": EvidenceItem("t1", Origin.TEXT_SEARCH, "Fleet grounded.", source_url="https://b"),
}


def judge_with(llm, **kw):
    return Judge(Providers(ScriptedBackend({LLM: llm})), **kw)


class TestAssess:
    def test_failure_degrades_to_irrelevant(self):
        def boom(request):
            raise ProviderError("llm down")

        res = judge_with(boom).assess_cluster("claim", cluster(), ITEMS)
        assert res.failed and (res.image_alignment, res.text_alignment) == (I, I)

    def test_null_group_counts_as_absent(self):
        def llm(request):
            return {"content": {"image_evidence": None, "text_evidence": notes(date="match"), "rationale": "r"}}

        res = judge_with(llm).assess_cluster("claim", cluster(), ITEMS)
        assert res.image_alignment is I and res.text_alignment is S

    def test_missing_origin_has_no_label(self):
        def llm(request):
            return {"content": {"image_evidence": notes(location="mismatch"), "text_evidence": None, "rationale": "r"}}

        res = judge_with(llm).assess_cluster("claim", cluster(text=()), ITEMS)
        assert res.image_alignment is C and res.text_alignment is None

    def test_empty_cluster_rejected(self):
        empty = Cluster(0, (), (), np.zeros(2), "n", "x")
        with pytest.raises(ValueError):
            judge_with(lambda r: {}).assess_cluster("claim", empty, ITEMS)


class TestExplanation:
    def test_rule_overrides_llm_label(self):
        world = ooc_world()
        world.explain_label = "True"
        report = Pipeline(Providers(world.backend()), PipelineConfig()).verify(world.post("p"))
        assert report.verdict is Verdict.MISLEADING
        assert report.override and report.llm_label == "True"

    def test_agreeing_llm_has_no_override(self):
        world = ooc_world()
        report = Pipeline(Providers(world.backend()), PipelineConfig()).verify(world.post("p"))
        assert report.verdict is Verdict.MISLEADING and not report.override

    def test_citation_appended_when_missing(self):
        text = ensure_citation("Looks wrong.", Verdict.MISLEADING, [a(0, C)], {0: "Crash in 2016."})
        assert '"Crash in 2016."' in text

    def test_existing_citation_untouched(self):
        text = "See: Crash in 2016."
        assert ensure_citation(text, Verdict.MISLEADING, [a(0, C)], {0: "Crash in 2016."}) == text

    def test_nod_template(self):
        text = template_explanation(Verdict.NOT_ENOUGH_DATA, [], {})
        assert text.startswith("Not enough data")

    def test_nod_skips_llm(self):
        def llm(request):
            raise AssertionError("explanation should not be requested")

        res = judge_with(llm).judge("claim", [], [], evidence_empty=True)
        assert res.verdict is Verdict.NOT_ENOUGH_DATA and res.explanation_source == "template"

    def test_explain_failure_uses_template(self):
        def llm(request):
            raise ProviderError("down")

        res = judge_with(llm).judge("claim", [cluster()], [a(0, S)], evidence_empty=False)
        assert res.explanation_source == "template" and "Crash near Barmer" in res.explanation

    def test_binary_mode_off(self):
        res = judge_with(lambda r: {}, binary_mode=False).judge("claim", [], [], evidence_empty=True)
        assert res.binary_verdict is None


def test_report_key_order():
    world = ooc_world()
    report = Pipeline(Providers(world.backend()), PipelineConfig()).verify(world.post("p"))
    keys = list(json.loads(report.to_json()))
    assert keys[:4] == ["report_version", "post_id", "claim_text", "verdict"]
    assert keys[-1] == "timings"
    assert "timings" not in json.loads(report.to_json(include_timings=False))
