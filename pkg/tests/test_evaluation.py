import json

import pytest

from skillrec.context import ConversationTurn, Entity, EntityKind, extract_entities
from skillrec.errors import ProviderError
from skillrec.evaluation import (
    EvalSample,
    aggregate,
    aggregate_expert_labels,
    load_eval_dataset,
    score_grounding,
    score_novelty,
    score_rubric_llm,
    score_sample,
    skill_alignment,
    trigram_similarity,
)
from skillrec.gateway import CompletionResult, MockChatProvider
from skillrec.pipeline import Suggestion, substitute_entity_references

from conftest import FIXTURES


def turn(i, role, text, skill=None):
    return ConversationTurn(index=i, role=role, text=text, invoked_skill=skill, entities=tuple(extract_entities(text, source_turn=i)))


def sugg(prompt, skill="GetSignIns"):
    return Suggestion(prompt_text=prompt, skill_id=skill, rank_source="llm")


def test_novelty_exact_duplicate_is_zero():
    turns = [turn(0, "user", "Show me the recent sign-ins")]
    assert score_novelty(sugg("Show me the recent sign-ins"), turns) == 0.0


def test_novelty_disjoint_is_one():
    turns = [turn(0, "user", "compliance drift report")]
    assert score_novelty(sugg("List suspicious activities"), turns) == 1.0


def test_novelty_rephrasing_detected():
    similarity = trigram_similarity("show me recent signins", "show me the recent signins")
    assert similarity >= 0.6
    turns = [turn(0, "user", "show me the recent signins")]
    assert score_novelty(sugg("show me recent signins"), turns) == 0.0


def test_novelty_verbatim_in_assistant_answer():
    turns = [turn(0, "user", "anything"), turn(1, "assistant", "You could try: list risky users now.")]
    assert score_novelty(sugg("List risky users now"), turns) == 0.0


def test_novelty_short_texts_compare_exactly():
    turns = [turn(0, "user", "risky users")]
    assert score_novelty(sugg("Risky users"), turns) == 0.0
    assert score_novelty(sugg("risky admins"), turns) == 1.0


def test_novelty_assistant_rephrasing_does_not_count():
    turns = [turn(0, "assistant", "show me the recent signins")]
    assert score_novelty(sugg("show me recent signins"), turns) == 1.0


def test_trigram_similarity_properties():
    assert trigram_similarity("a b c d", "a b c d") == 1.0
    assert 0.0 <= trigram_similarity("list alerts today", "hunt hashes now") <= 1.0
    assert trigram_similarity("one two", "one two") == 1.0
    assert trigram_similarity("one two", "one three") == 0.0


def test_grounding_present_entity():
    turns = [turn(0, "user", "who used 10.0.0.5")]
    assert score_grounding(sugg("Correlate 10.0.0.5 with alerts"), turns) == 1.0


def test_grounding_absent_entity():
    turns = [turn(0, "user", "show incidents")]
    assert score_grounding(sugg("Correlate 10.0.0.5 with alerts"), turns) == 0.0


def test_grounding_half():
    turns = [turn(0, "user", "who used 10.0.0.5")]
    assert score_grounding(sugg("Correlate 10.0.0.5 with 198.51.100.7"), turns) == 0.5


def test_grounding_no_entities_is_one():
    turns = [turn(0, "user", "show incidents")]
    assert score_grounding(sugg("List suspicious activities related to these sign-ins"), turns) == 1.0


def test_grounding_reference_phrases_count_as_grounded():
    turns = [turn(0, "user", "show incidents")]
    assert score_grounding(sugg("Hunt for this file hash across devices"), turns) == 1.0
    # one ungrounded literal + one reference -> 1/2
    assert score_grounding(sugg("Tie 10.0.0.9 to this file hash"), turns) == 0.5


def test_grounding_never_drops_after_substitution():
    sha = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    turns = [turn(0, "user", f"look at {sha}")]
    history = [Entity(EntityKind.SHA256, sha, 0)]
    before = sugg(f"Pivot from {sha} to 203.0.113.9")
    after = sugg(substitute_entity_references(before.prompt_text, history))
    assert score_grounding(after, turns) >= score_grounding(before, turns)


def test_rubric_mock_judge_consistency_rule(mock_gateway):
    turns = [turn(0, "user", "alerts?", None), turn(1, "assistant", "3 alerts.", "GetSecurityAlerts")]
    consistent = score_rubric_llm("usefulness", sugg("more alerts", "GetSecurityAlerts"), turns, mock_gateway, ["GetSecurityAlerts"])
    other = score_rubric_llm("usefulness", sugg("more alerts", "GetSignIns"), turns, mock_gateway, ["GetSecurityAlerts"])
    assert consistent == 1.0
    assert other == 0.5


class Level1Judge:
    def complete(self, request):
        return CompletionResult(text='{"level": 1}', provider_tag="judge")


class BrokenJudge:
    def __init__(self):
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        raise ProviderError("judge offline")


def test_rubric_level_mapping():
    turns = [turn(0, "user", "x")]
    assert score_rubric_llm("clarity", sugg("p"), turns, Level1Judge()) == 0.5


def test_rubric_failure_returns_none_after_retry():
    judge = BrokenJudge()
    turns = [turn(0, "user", "x")]
    assert score_rubric_llm("relevance", sugg("p"), turns, judge) is None
    assert judge.calls == 2


def test_rubric_unknown_metric():
    with pytest.raises(ValueError):
        score_rubric_llm("beauty", sugg("p"), [], MockChatProvider())


def test_score_sample_counts_exclusions():
    sample = EvalSample(
        session_id="s",
        turns=(turn(0, "user", "x"),),
        suggestions=(sugg("p1"), sugg("p2", "GetAuditLogs")),
    )
    card = score_sample(sample, BrokenJudge())
    assert card.n_suggestions == 2
    assert card.n_excluded == {"usefulness": 2, "clarity": 2, "relevance": 2}
    assert card.mean("usefulness") is None
    assert card.mean("novelty") is not None


def test_sample_rejects_more_than_five():
    with pytest.raises(ValueError):
        EvalSample(session_id="s", turns=(), suggestions=tuple(sugg(f"p{i}") for i in range(6)))


def test_aggregate_mean_and_grouping(mock_gateway):
    samples = load_eval_dataset(FIXTURES / "eval_samples.jsonl")
    scored = [(s, score_sample(s, mock_gateway)) for s in samples]
    report = aggregate(scored)
    tags = [row.config_tag for row in report.rows]
    assert tags == ["full_llm", "markov_hybrid"]
    assert report.overall.n_suggestions == sum(row.n_suggestions for row in report.rows)
    rendered = report.render_text()
    assert "0." in rendered and "(all)" in rendered


def test_aggregate_two_scores_mean():
    s1 = EvalSample(session_id="a", turns=(turn(0, "user", "show x"),), suggestions=(sugg("show x"),))
    s2 = EvalSample(session_id="b", turns=(turn(0, "user", "show y"),), suggestions=(sugg("totally different words here"),))
    scored = [(s, score_sample(s, MockChatProvider())) for s in (s1, s2)]
    report = aggregate(scored)
    assert report.overall.means["novelty"] == pytest.approx(0.5, abs=1e-12)


def test_aggregate_empty():
    report = aggregate([])
    assert report.overall.n_suggestions == 0
    assert report.overall.means["novelty"] is None
    assert report.alignment_pct is None


def test_aggregate_permutation_invariant(mock_gateway):
    samples = load_eval_dataset(FIXTURES / "eval_samples.jsonl")
    scored = [(s, score_sample(s, mock_gateway)) for s in samples]
    a = aggregate(scored).overall
    b = aggregate(list(reversed(scored))).overall
    for metric in ("novelty", "grounding", "usefulness"):
        assert a.means[metric] == pytest.approx(b.means[metric], abs=1e-12)


def test_skill_alignment_examples():
    pairs = [("A", "A"), ("B", "B"), ("C", "C"), ("D", "X"), ("E", "Y")]
    assert skill_alignment(pairs) == 60.0
    assert skill_alignment([("A", "A")] * 4) == 100.0
    assert skill_alignment([]) is None


def test_expert_label_aggregation():
    labels = ["useful"] * 40 + ["extremely_useful"] * 55 + ["not_useful"] * 5
    out = aggregate_expert_labels(labels)
    assert out["useful_pct"] == pytest.approx(95.0)
    assert out["extremely_useful_pct"] == pytest.approx(55.0)
    assert out["not_useful_pct"] == pytest.approx(5.0)
    with pytest.raises(ValueError):
        aggregate_expert_labels(["meh"])


def test_report_json_round_trip(mock_gateway):
    samples = load_eval_dataset(FIXTURES / "eval_samples.jsonl")
    report = aggregate([(s, score_sample(s, mock_gateway)) for s in samples])
    doc = json.loads(json.dumps(report.to_dict()))
    assert doc["overall"]["n_suggestions"] == 11
    assert doc["skill_alignment_pct"] == pytest.approx(200 / 3, abs=1e-9)
