"""Consistency category evaluation: stability under variation regimes.

A case opts into regimes; each opted case contributes one stability group on
its final (measured) turn:

    identical            k repeats of the same question, default settings
    settings-variation   the same question once per settings profile
    linguistic-variation the authored question plus each paraphrase

Stability is correctness-under-variation: the fraction of a group's variants
that are semantically correct, averaged over groups without weighting. Raw
self-agreement (the largest result-equivalence class over the group size) is
reported as a diagnostic but never gates a level.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .accuracy import _map_tasks, adjudicate, turn_request
from .adapter import GenerationRecord
from .rubric import (
    Category,
    CategoryEvaluation,
    CriterionResult,
    CriterionStatus,
    EvaluationError,
    Level,
    MaturityRubric,
    RUBRIC_LEVELS,
    REGIME_IDENTICAL,
    REGIME_LINGUISTIC,
    REGIME_SETTINGS,
    meets,
)
from .suite import TestCase, TestSuite

ALL_REGIMES = (REGIME_IDENTICAL, REGIME_SETTINGS, REGIME_LINGUISTIC)

# One criterion per level; the regime it reads comes from the rubric.
_CRITERION_IDS = {
    Level.I: "stability-identical",
    Level.II: "stability-settings",
    Level.III: "stability-linguistic",
    Level.IV: "stability-linguistic-strict",
}

# Equivalence-class key for generations that never produced a result set;
# consistently broken output is self-consistent but has zero stability.
_INVALID_CLASS = "invalid"


@dataclass(frozen=True)
class VariantOutcome:
    label: str
    status: str
    correct: bool
    fingerprint_key: str
    generation_error: str | None = None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "status": self.status,
            "correct": self.correct,
            "fingerprint_key": self.fingerprint_key,
            "generation_error": self.generation_error,
        }


@dataclass(frozen=True)
class StabilityGroup:
    case_id: str
    turn_index: int
    regime: str
    variants: tuple[VariantOutcome, ...]

    def __post_init__(self) -> None:
        if len(self.variants) < 2:
            raise EvaluationError(
                f"stability group {self.case_id}[{self.turn_index}] needs at "
                f"least two variants, got {len(self.variants)}")

    @property
    def size(self) -> int:
        return len(self.variants)

    @property
    def correct_count(self) -> int:
        return sum(1 for v in self.variants if v.correct)

    @property
    def stability(self) -> Fraction:
        return Fraction(self.correct_count, self.size)

    @property
    def self_consistency(self) -> Fraction:
        """Largest result-equivalence class over group size, correctness
        ignored; non-executable variants pool into one invalid class."""
        classes: dict[str, int] = {}
        for variant in self.variants:
            classes[variant.fingerprint_key] = \
                classes.get(variant.fingerprint_key, 0) + 1
        return Fraction(max(classes.values()), self.size)

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "turn_index": self.turn_index,
            "regime": self.regime,
            "stability": str(self.stability),
            "self_consistency": str(self.self_consistency),
            "variants": [v.to_dict() for v in self.variants],
        }


def _variant_outcome(suite: TestSuite, case: TestCase, turn_index: int,
                     label: str, record: GenerationRecord) -> VariantOutcome:
    verdict = adjudicate(suite, case, turn_index, record)
    if verdict.generated_fingerprint is None:
        key = _INVALID_CLASS
    else:
        fp = verdict.generated_fingerprint
        order_sensitive = case.turns[turn_index].order_sensitive
        key = f"cols={fp.column_count};{fp.digest(order_sensitive)}"
    return VariantOutcome(
        label=label,
        status=verdict.status.value,
        correct=verdict.is_equivalent,
        fingerprint_key=key,
        generation_error=record.error,
    )


def _group_for_case(suite: TestSuite, sut, case: TestCase,
                    regime: str) -> StabilityGroup:
    turn_index = case.measured_turn_index
    turn = case.turns[turn_index]
    default = suite.default_profile()

    requests: list[tuple[str, object]] = []
    if regime == REGIME_IDENTICAL:
        if suite.repeat_count < 2:
            raise EvaluationError(
                "identical regime needs a repeat_count of at least 2")
        for sample in range(suite.repeat_count):
            requests.append((
                f"sample {sample}",
                turn_request(suite, case, turn_index, default,
                             sample_index=sample),
            ))
    elif regime == REGIME_SETTINGS:
        if len(suite.settings_variants) < 2:
            raise EvaluationError(
                "settings-variation regime needs at least two settings "
                "profiles in the suite")
        for profile in suite.settings_variants:
            requests.append((
                f"profile {profile.profile_id}",
                turn_request(suite, case, turn_index, profile),
            ))
    elif regime == REGIME_LINGUISTIC:
        for index in range(len(turn.paraphrases) + 1):
            label = "canonical" if index == 0 else f"paraphrase {index}"
            requests.append((
                label,
                turn_request(suite, case, turn_index, default,
                             paraphrase_index=index),
            ))
    else:
        raise EvaluationError(f"unknown variation regime {regime!r}")

    variants = tuple(
        _variant_outcome(suite, case, turn_index, label, sut.generate(req))
        for label, req in requests
    )
    return StabilityGroup(case.case_id, turn_index, regime, variants)


def run_regime(suite: TestSuite, sut, regime: str,
               max_workers: int = 1) -> list[StabilityGroup]:
    """One stability group per case opted into the regime, in case order;
    empty list when nothing opted in (regime not evaluated)."""
    if regime not in ALL_REGIMES:
        raise EvaluationError(f"unknown variation regime {regime!r}")
    cases = [c for c in suite.cases if c.participates(regime)]
    return _map_tasks(
        cases,
        lambda case: _group_for_case(suite, sut, case, regime),
        max_workers,
    )


def stability_score(groups: Sequence[StabilityGroup]) -> Fraction | None:
    """Unweighted mean of group stabilities; None when there are no groups."""
    if not groups:
        return None
    return sum((g.stability for g in groups), Fraction(0)) / len(groups)


def self_consistency_score(groups: Sequence[StabilityGroup]) -> Fraction | None:
    if not groups:
        return None
    return sum((g.self_consistency for g in groups), Fraction(0)) / len(groups)


def evaluate_consistency_category(
    suite: TestSuite,
    sut,
    rubric: MaturityRubric,
    max_workers: int = 1,
) -> CategoryEvaluation:
    """Per-level criterion results and the assigned consistency level.

    Each level compares one regime's stability score against the rubric's
    floor for that level; regimes shared between levels (linguistic gates
    both III and IV) are measured once and reused.
    """
    needed = {rubric.stability_thresholds[lv].regime for lv in RUBRIC_LEVELS}
    groups_by_regime = {
        regime: run_regime(suite, sut, regime, max_workers)
        for regime in ALL_REGIMES if regime in needed
    }

    per_level: dict[Level, list[CriterionResult]] = {}
    for level in RUBRIC_LEVELS:
        requirement = rubric.stability_thresholds[level]
        groups = groups_by_regime.get(requirement.regime, [])
        criterion_id = _CRITERION_IDS[level]
        if not groups:
            per_level[level] = [CriterionResult(
                criterion_id,
                CriterionStatus.NOT_EVALUATED,
                (f"no cases opted into the {requirement.regime} regime",),
            )]
            continue
        score = stability_score(groups)
        assert score is not None
        passed = meets(requirement.threshold, score.numerator,
                       score.denominator)
        evidence = tuple(
            [f"{requirement.regime}: mean stability {score} over "
             f"{len(groups)} group(s)"]
            + [f"group {g.case_id}[{g.turn_index}]: "
               f"{g.correct_count}/{g.size} correct"
               for g in groups]
        )
        per_level[level] = [CriterionResult(
            criterion_id,
            CriterionStatus.PASS if passed else CriterionStatus.FAIL,
            evidence,
            measured_value=score,
        )]

    metrics: dict = {"regimes": {}}
    for regime, groups in groups_by_regime.items():
        score = stability_score(groups)
        agreement = self_consistency_score(groups)
        metrics["regimes"][regime] = {
            "groups": [g.to_dict() for g in groups],
            "stability": None if score is None else {
                "numerator": score.numerator,
                "denominator": score.denominator,
            },
            "self_consistency": None if agreement is None else {
                "numerator": agreement.numerator,
                "denominator": agreement.denominator,
            },
        }
    return CategoryEvaluation.assemble(Category.CONSISTENCY, per_level, metrics)
