"""Tests for per-tier execution accuracy and its maturity criteria."""

from __future__ import annotations

import dataclasses
from fractions import Fraction

import pytest

from ttq_harness.accuracy import (
    ADJUDICATION_POLICY,
    TierResult,
    adjudicate,
    evaluate_accuracy_category,
    evaluate_tier,
    turn_request,
)
from ttq_harness.adapter import ReplayAdapter
from ttq_harness.fixtures import (
    WRONG_QUERY,
    break_cases,
    degraded_tier_cases,
)
from ttq_harness.rubric import CriterionStatus, Level, default_rubric


@pytest.fixture(scope="module")
def golden_sut(golden_entries):
    return ReplayAdapter(golden_entries)


def case_by_id(suite, case_id):
    return next(c for c in suite.cases if c.case_id == case_id)


class TestTurnRequest:
    def test_history_is_teacher_forced_gold(self, suite):
        case = case_by_id(suite, "les-phone-records")
        req = turn_request(suite, case, 2, suite.default_profile())
        assert req.turn_index == 2
        assert req.history == (
            (case.turns[0].question, case.turns[0].gold_query),
            (case.turns[1].question, case.turns[1].gold_query),
        )

    def test_first_turn_has_empty_history(self, suite):
        case = case_by_id(suite, "les-phone-records")
        req = turn_request(suite, case, 0, suite.default_profile())
        assert req.history == ()

    def test_paraphrase_zero_is_the_authored_question(self, suite):
        case = case_by_id(suite, "hr-names-ages")
        profile = suite.default_profile()
        canonical = turn_request(suite, case, 0, profile)
        variant = turn_request(suite, case, 0, profile, paraphrase_index=2)
        assert canonical.question == case.turns[0].question
        assert variant.question == case.turns[0].paraphrases[1]
        assert variant.question != canonical.question

    def test_request_carries_profile_and_schema(self, suite):
        case = case_by_id(suite, "hr-names-ages")
        profile = suite.settings_variants[1]
        req = turn_request(suite, case, 0, profile, sample_index=3)
        assert req.profile_id == profile.profile_id
        assert req.settings == profile.params
        assert "CREATE TABLE" in req.schema_ddl
        assert req.sample_index == 3


class TestAdjudicate:
    def test_gold_answer_is_equivalent(self, suite, golden_sut):
        case = case_by_id(suite, "hr-names-ages")
        record = golden_sut.generate(
            turn_request(suite, case, 0, suite.default_profile()))
        verdict = adjudicate(suite, case, 0, record)
        assert verdict.is_equivalent

    def test_wrong_answer_is_not_equivalent(self, suite, golden_entries):
        sut = ReplayAdapter(break_cases(golden_entries, ["hr-names-ages"]))
        case = case_by_id(suite, "hr-names-ages")
        record = sut.generate(
            turn_request(suite, case, 0, suite.default_profile()))
        verdict = adjudicate(suite, case, 0, record)
        assert not verdict.is_equivalent

    def test_failed_generation_adjudicates_as_parse_error(
            self, suite, golden_sut):
        case = case_by_id(suite, "hr-names-ages")
        record = golden_sut.generate(
            turn_request(suite, case, 0, suite.default_profile(),
                         sample_index=99))
        assert record.failed
        verdict = adjudicate(suite, case, 0, record)
        assert not verdict.is_equivalent
        assert verdict.status.value == "gen-parse-error"


class TestTierResult:
    def test_accuracy_is_exact(self):
        result = TierResult(tier=Level.I, total=3, correct=2)
        assert result.accuracy == Fraction(2, 3)
        assert result.evaluated

    def test_empty_tier_has_no_accuracy(self):
        result = TierResult(tier=Level.II, total=0, correct=0)
        assert result.accuracy is None
        assert not result.evaluated

    def test_correct_bounded_by_total(self):
        with pytest.raises(ValueError):
            TierResult(tier=Level.I, total=2, correct=3)


# turns per tier in the bundled suite: III has one three-turn conversation
TIER_TURNS = {Level.I: 10, Level.II: 5, Level.III: 5, Level.IV: 10}


class TestEvaluateTier:
    @pytest.mark.parametrize("tier", list(TIER_TURNS))
    def test_golden_sut_is_perfect(self, suite, golden_sut, tier):
        result = evaluate_tier(suite, golden_sut, tier)
        assert result.total == TIER_TURNS[tier]
        assert result.correct == result.total

    def test_turn_not_case_is_the_unit(self, suite, golden_sut):
        result = evaluate_tier(suite, golden_sut, Level.III)
        assert len(suite.cases_in_tier(Level.III)) == 3
        assert result.total == 5
        multi = [o for o in result.outcomes
                 if o.case_id == "les-phone-records"]
        assert [o.turn_index for o in multi] == [0, 1, 2]

    def test_degraded_cases_counted_incorrect(self, suite, golden_entries):
        broken = degraded_tier_cases(suite, Level.I, 4)
        sut = ReplayAdapter(break_cases(golden_entries, broken))
        result = evaluate_tier(suite, sut, Level.I)
        assert result.total == 10
        assert result.correct == 6
        wrong = {o.case_id for o in result.outcomes if not o.correct}
        assert wrong == set(broken)

    def test_outcomes_follow_suite_case_order(self, suite, golden_sut):
        result = evaluate_tier(suite, golden_sut, Level.I)
        expected = [c.case_id for c in suite.cases_in_tier(Level.I)]
        assert [o.case_id for o in result.outcomes] == expected

    def test_worker_count_does_not_change_outcomes(self, suite,
                                                   golden_entries):
        broken = degraded_tier_cases(suite, Level.I, 5)
        entries = break_cases(golden_entries, broken)
        serial = evaluate_tier(suite, ReplayAdapter(entries), Level.I,
                               max_workers=1)
        pooled = evaluate_tier(suite, ReplayAdapter(entries), Level.I,
                               max_workers=8)
        assert serial == pooled

    def test_empty_tier(self, suite, golden_sut):
        pruned = dataclasses.replace(
            suite,
            cases=tuple(c for c in suite.cases if c.tier != Level.II))
        result = evaluate_tier(pruned, golden_sut, Level.II)
        assert result.total == 0
        assert result.outcomes == ()


class TestAccuracyCategory:
    def test_golden_reaches_level_four(self, suite, golden_sut):
        evaluation = evaluate_accuracy_category(
            suite, golden_sut, default_rubric())
        assert evaluation.assigned is Level.IV
        for level, results in evaluation.per_level.items():
            assert {r.criterion_id for r in results} == {
                f"accuracy-threshold-{int(level)}",
                {Level.I: "simple-query-handling",
                 Level.II: "moderate-query-handling",
                 Level.III: "complex-query-handling",
                 Level.IV: "expert-query-handling"}[level],
            }
            assert all(r.status is CriterionStatus.PASS for r in results)

    def test_six_of_ten_meets_level_one_threshold(self, suite,
                                                  golden_entries):
        sut = ReplayAdapter(break_cases(
            golden_entries, degraded_tier_cases(suite, Level.I, 4)))
        evaluation = evaluate_accuracy_category(suite, sut, default_rubric())
        threshold = next(r for r in evaluation.per_level[Level.I]
                         if r.criterion_id == "accuracy-threshold-1")
        assert threshold.status is CriterionStatus.PASS
        assert threshold.measured_value == Fraction(6, 10)

    def test_five_of_ten_drops_to_level_zero(self, suite, golden_entries):
        sut = ReplayAdapter(break_cases(
            golden_entries, degraded_tier_cases(suite, Level.I, 5)))
        evaluation = evaluate_accuracy_category(suite, sut, default_rubric())
        assert evaluation.assigned is Level.NONE
        threshold = next(r for r in evaluation.per_level[Level.I]
                         if r.criterion_id == "accuracy-threshold-1")
        assert threshold.status is CriterionStatus.FAIL
        assert threshold.measured_value == Fraction(1, 2)

    def test_nine_of_ten_fails_strict_top_tier(self, suite, golden_entries):
        sut = ReplayAdapter(break_cases(
            golden_entries, degraded_tier_cases(suite, Level.IV, 1)))
        evaluation = evaluate_accuracy_category(suite, sut, default_rubric())
        # 9/10 meets the level-III bar but not the strict level-IV one.
        assert evaluation.assigned is Level.III

    def test_zero_percent_middle_tier_caps_at_level_one(self, suite,
                                                        golden_entries):
        tier2 = [c.case_id for c in suite.cases_in_tier(Level.II)]
        sut = ReplayAdapter(break_cases(golden_entries, tier2,
                                        query=WRONG_QUERY))
        evaluation = evaluate_accuracy_category(suite, sut, default_rubric())
        assert evaluation.assigned is Level.I
        assert evaluation.metrics["tier_accuracy"]["II"] == {
            "correct": 0, "total": 5}

    def test_missing_tier_is_not_evaluated_and_caps(self, suite, golden_sut):
        pruned = dataclasses.replace(
            suite,
            cases=tuple(c for c in suite.cases if c.tier != Level.III))
        evaluation = evaluate_accuracy_category(
            pruned, golden_sut, default_rubric())
        assert evaluation.assigned is Level.II
        statuses = {r.status for r in evaluation.per_level[Level.III]}
        assert statuses == {CriterionStatus.NOT_EVALUATED}

    def test_metrics_record_policy_and_counts(self, suite, golden_sut):
        evaluation = evaluate_accuracy_category(
            suite, golden_sut, default_rubric())
        assert evaluation.metrics["adjudication"] == ADJUDICATION_POLICY
        assert evaluation.metrics["tier_accuracy"] == {
            "I": {"correct": 10, "total": 10},
            "II": {"correct": 5, "total": 5},
            "III": {"correct": 5, "total": 5},
            "IV": {"correct": 10, "total": 10},
        }

    def test_evidence_names_every_turn(self, suite, golden_sut):
        evaluation = evaluate_accuracy_category(
            suite, golden_sut, default_rubric())
        threshold = next(r for r in evaluation.per_level[Level.I]
                         if r.criterion_id == "accuracy-threshold-1")
        assert threshold.evidence[0] == "tier I: 10/10 turns correct"
        assert len(threshold.evidence) == 11
