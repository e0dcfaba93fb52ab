"""Tests for stability-under-variation scoring and its maturity criteria."""

from __future__ import annotations

import dataclasses
from fractions import Fraction

import pytest

from ttq_harness.adapter import GenerationRecord, ReplayAdapter
from ttq_harness.consistency import (
    ALL_REGIMES,
    StabilityGroup,
    VariantOutcome,
    evaluate_consistency_category,
    run_regime,
    self_consistency_score,
    stability_score,
)
from ttq_harness.fixtures import (
    WRONG_QUERY,
    break_cases,
    break_identical_samples,
    break_linguistic_paraphrases,
)
from ttq_harness.rubric import (
    CriterionStatus,
    EvaluationError,
    Level,
    REGIME_IDENTICAL,
    REGIME_LINGUISTIC,
    REGIME_SETTINGS,
    default_rubric,
)
from ttq_harness.suite import DatabaseFixture, SettingsProfile, Turn
from ttq_harness.suite import TestCase as Case
from ttq_harness.suite import TestSuite as Suite

OPTED_CASES = {"hr-names-ages", "sales-top-products"}


@pytest.fixture(scope="module")
def golden_sut(golden_entries):
    return ReplayAdapter(golden_entries)


class RecordingSut:
    """Returns a fixed query and keeps every request it saw."""

    def __init__(self, query="SELECT COUNT(*) FROM t"):
        self.query = query
        self.requests = []

    def generate(self, req):
        self.requests.append(req)
        return GenerationRecord(request=req, query=self.query)


def variant(correct: bool, key: str, label="v") -> VariantOutcome:
    return VariantOutcome(label=label, status="equivalent" if correct
                          else "not-equivalent", correct=correct,
                          fingerprint_key=key)


def group(*variants: VariantOutcome) -> StabilityGroup:
    return StabilityGroup("case", 0, REGIME_IDENTICAL, tuple(variants))


class TestStabilityGroup:
    def test_needs_at_least_two_variants(self):
        with pytest.raises(EvaluationError, match="at least two"):
            group(variant(True, "a"))

    def test_stability_is_correct_fraction(self):
        g = group(variant(True, "a"), variant(True, "a"), variant(False, "b"))
        assert g.stability == Fraction(2, 3)
        assert g.correct_count == 2
        assert g.size == 3

    def test_self_consistency_is_largest_class(self):
        g = group(variant(False, "b"), variant(True, "a"), variant(False, "b"))
        assert g.self_consistency == Fraction(2, 3)

    def test_self_consistency_ignores_correctness(self):
        # Uniformly wrong output is perfectly self-consistent.
        g = group(variant(False, "b"), variant(False, "b"))
        assert g.self_consistency == Fraction(1)
        assert g.stability == Fraction(0)

    def test_serialization_carries_both_scores(self):
        g = group(variant(True, "a"), variant(False, "b"))
        data = g.to_dict()
        assert data["stability"] == "1/2"
        assert data["self_consistency"] == "1/2"
        assert len(data["variants"]) == 2


class TestScores:
    def test_mean_is_unweighted_across_groups(self):
        small = group(variant(True, "a"), variant(False, "b"))
        large = StabilityGroup("other", 0, REGIME_IDENTICAL, tuple(
            variant(True, "a") for _ in range(4)))
        # (1/2 + 1) / 2, not 5/6 as turn-weighted pooling would give.
        assert stability_score([small, large]) == Fraction(3, 4)

    def test_empty_means_not_evaluated(self):
        assert stability_score([]) is None
        assert self_consistency_score([]) is None


class TestRunRegime:
    def test_only_opted_cases_form_groups(self, suite, golden_sut):
        for regime in ALL_REGIMES:
            groups = run_regime(suite, golden_sut, regime)
            assert {g.case_id for g in groups} == OPTED_CASES
            assert all(g.regime == regime for g in groups)

    def test_identical_runs_repeat_count_samples(self, suite, golden_sut):
        groups = run_regime(suite, golden_sut, REGIME_IDENTICAL)
        for g in groups:
            assert g.size == suite.repeat_count == 5
            assert [v.label for v in g.variants] == [
                f"sample {i}" for i in range(5)]

    def test_settings_runs_once_per_profile(self, suite, golden_sut):
        groups = run_regime(suite, golden_sut, REGIME_SETTINGS)
        for g in groups:
            assert [v.label for v in g.variants] == [
                "profile baseline", "profile exploratory"]

    def test_linguistic_runs_canonical_plus_paraphrases(self, suite,
                                                        golden_sut):
        groups = run_regime(suite, golden_sut, REGIME_LINGUISTIC)
        for g in groups:
            assert g.size == 5
            assert g.variants[0].label == "canonical"
            assert g.variants[1].label == "paraphrase 1"

    def test_golden_sut_is_fully_stable(self, suite, golden_sut):
        for regime in ALL_REGIMES:
            groups = run_regime(suite, golden_sut, regime)
            assert stability_score(groups) == Fraction(1)
            assert self_consistency_score(groups) == Fraction(1)

    def test_unknown_regime_rejected(self, suite, golden_sut):
        with pytest.raises(EvaluationError, match="unknown variation regime"):
            run_regime(suite, golden_sut, "barometric-variation")

    def test_worker_count_does_not_change_groups(self, suite,
                                                 golden_entries):
        entries = break_identical_samples(suite, golden_entries, 1)
        serial = run_regime(suite, ReplayAdapter(entries),
                            REGIME_IDENTICAL, max_workers=1)
        pooled = run_regime(suite, ReplayAdapter(entries),
                            REGIME_IDENTICAL, max_workers=8)
        assert serial == pooled

    def test_measures_the_final_turn_with_gold_history(self):
        db = DatabaseFixture(
            "db", "CREATE TABLE t (x INTEGER);\n",
            "INSERT INTO t (x) VALUES (1);\n")
        case = Case(
            "two-turn", Level.I, "db",
            (Turn("How many rows?", "SELECT COUNT(*) FROM t"),
             Turn("And their sum?", "SELECT SUM(x) FROM t")),
            consistency_regimes=frozenset({REGIME_IDENTICAL}))
        mini = Suite(
            suite_id="mini", name="Minimal", databases={"db": db},
            cases=(case,),
            settings_variants=(SettingsProfile("base", (), True),),
            repeat_count=3)
        sut = RecordingSut("SELECT SUM(x) FROM t")
        groups = run_regime(mini, sut, REGIME_IDENTICAL)
        assert groups[0].turn_index == 1
        assert {r.turn_index for r in sut.requests} == {1}
        assert all(r.history == (("How many rows?",
                                  "SELECT COUNT(*) FROM t"),)
                   for r in sut.requests)
        assert groups[0].stability == Fraction(1)

    def test_identical_requires_repeats(self, suite, golden_sut):
        single = dataclasses.replace(suite, repeat_count=1)
        with pytest.raises(EvaluationError, match="repeat_count"):
            run_regime(single, golden_sut, REGIME_IDENTICAL)

    def test_settings_requires_two_profiles(self, suite, golden_sut):
        lone = dataclasses.replace(
            suite, settings_variants=(suite.default_profile(),))
        with pytest.raises(EvaluationError, match="settings"):
            run_regime(lone, golden_sut, REGIME_SETTINGS)


class TestFingerprintClasses:
    def test_broken_variants_pool_into_invalid_class(self, suite,
                                                     golden_entries):
        entries = break_identical_samples(suite, golden_entries, 2)
        groups = run_regime(suite, ReplayAdapter(entries), REGIME_IDENTICAL)
        for g in groups:
            broken = [v for v in g.variants if not v.correct]
            assert {v.fingerprint_key for v in broken} == {"invalid"}
            assert {v.status for v in broken} == {"gen-parse-error"}

    def test_wrong_but_executable_variants_share_a_class(self, suite,
                                                         golden_entries):
        entries = break_identical_samples(suite, golden_entries, 2,
                                          query=WRONG_QUERY)
        groups = run_regime(suite, ReplayAdapter(entries), REGIME_IDENTICAL)
        for g in groups:
            wrong_keys = {v.fingerprint_key for v in g.variants
                          if not v.correct}
            right_keys = {v.fingerprint_key for v in g.variants if v.correct}
            assert len(wrong_keys) == 1
            assert wrong_keys != {"invalid"}
            assert wrong_keys.isdisjoint(right_keys)


class TestConsistencyCategory:
    def assigned(self, suite, entries):
        evaluation = evaluate_consistency_category(
            suite, ReplayAdapter(entries), default_rubric())
        return evaluation

    def test_golden_reaches_level_four(self, suite, golden_entries):
        evaluation = self.assigned(suite, golden_entries)
        assert evaluation.assigned is Level.IV
        for results in evaluation.per_level.values():
            assert [r.status for r in results] == [CriterionStatus.PASS]

    def test_four_of_five_identical_passes_level_one(self, suite,
                                                     golden_entries):
        entries = break_identical_samples(suite, golden_entries, 1)
        evaluation = self.assigned(suite, entries)
        result = evaluation.per_level[Level.I][0]
        assert result.criterion_id == "stability-identical"
        assert result.status is CriterionStatus.PASS
        assert result.measured_value == Fraction(4, 5)
        assert evaluation.assigned is Level.IV

    def test_three_of_five_identical_fails_to_level_zero(self, suite,
                                                         golden_entries):
        entries = break_identical_samples(suite, golden_entries, 2)
        evaluation = self.assigned(suite, entries)
        result = evaluation.per_level[Level.I][0]
        assert result.status is CriterionStatus.FAIL
        assert result.measured_value == Fraction(3, 5)
        assert evaluation.assigned is Level.NONE

    def test_three_of_five_linguistic_splits_levels_three_and_four(
            self, suite, golden_entries):
        entries = break_linguistic_paraphrases(suite, golden_entries, 2)
        evaluation = self.assigned(suite, entries)
        statuses = {int(level): results[0].status
                    for level, results in evaluation.per_level.items()}
        assert statuses == {
            1: CriterionStatus.PASS,
            2: CriterionStatus.PASS,
            3: CriterionStatus.PASS,
            4: CriterionStatus.FAIL,
        }
        assert evaluation.per_level[Level.III][0].measured_value \
            == Fraction(3, 5)
        assert evaluation.assigned is Level.III

    def test_self_consistency_never_substitutes_for_correctness(
            self, suite, golden_entries):
        # Every variant of every opted case gives the same wrong answer:
        # perfect agreement, zero stability, Level 0.
        entries = break_cases(golden_entries, sorted(OPTED_CASES),
                              query=WRONG_QUERY)
        evaluation = self.assigned(suite, entries)
        assert evaluation.assigned is Level.NONE
        identical = evaluation.metrics["regimes"][REGIME_IDENTICAL]
        assert identical["self_consistency"] == {
            "numerator": 1, "denominator": 1}
        assert identical["stability"] == {"numerator": 0, "denominator": 1}

    def test_no_opted_cases_leaves_category_not_evaluated(self, suite,
                                                          golden_entries):
        loners = dataclasses.replace(
            suite,
            cases=tuple(c for c in suite.cases if not c.consistency_regimes))
        evaluation = evaluate_consistency_category(
            loners, ReplayAdapter(golden_entries), default_rubric())
        assert evaluation.assigned is Level.NONE
        for results in evaluation.per_level.values():
            assert [r.status for r in results] \
                == [CriterionStatus.NOT_EVALUATED]

    def test_metrics_serialize_every_measured_regime(self, suite,
                                                     golden_entries):
        evaluation = self.assigned(suite, golden_entries)
        regimes = evaluation.metrics["regimes"]
        assert set(regimes) == set(ALL_REGIMES)
        for payload in regimes.values():
            assert {g["case_id"] for g in payload["groups"]} == OPTED_CASES

    def test_evidence_names_groups(self, suite, golden_entries):
        evaluation = self.assigned(suite, golden_entries)
        result = evaluation.per_level[Level.III][0]
        assert result.evidence[0].startswith(
            "linguistic-variation: mean stability 1")
        assert any("hr-names-ages" in line for line in result.evidence)
