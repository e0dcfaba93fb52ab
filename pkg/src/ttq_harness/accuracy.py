"""Accuracy category evaluation: per-tier execution accuracy.

Each turn of each case in a tier is answered once at the default settings
profile and adjudicated by executing the generated query against the case
fixture. Multi-turn conversations use teacher forcing: the history sent with
turn t is the prior questions paired with their gold queries, never the
system's own earlier output, so every turn measures translation quality in
isolation.

The accuracy unit is the turn; tier accuracy is correct turns over total
turns as an exact rational.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import sqlcheck
from .adapter import GenerationRecord, GenerationRequest
from .rubric import (
    Category,
    CategoryEvaluation,
    CriterionResult,
    CriterionStatus,
    Level,
    MaturityRubric,
    meets,
)
from .suite import SettingsProfile, TestCase, TestSuite

ADJUDICATION_POLICY = "execution-match"

# Per-level companion criterion to the threshold: passes iff the tier slice
# exists and clears its threshold (suite composition realizes the capability).
_HANDLING_IDS = {
    Level.I: "simple-query-handling",
    Level.II: "moderate-query-handling",
    Level.III: "complex-query-handling",
    Level.IV: "expert-query-handling",
}

_THRESHOLD_IDS = {
    Level.I: "accuracy-threshold-1",
    Level.II: "accuracy-threshold-2",
    Level.III: "accuracy-threshold-3",
    Level.IV: "accuracy-threshold-4",
}


@dataclass(frozen=True)
class TurnOutcome:
    case_id: str
    turn_index: int
    status: str
    correct: bool
    diagnostics: str | None = None
    generation_error: str | None = None

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "turn_index": self.turn_index,
            "status": self.status,
            "correct": self.correct,
            "diagnostics": self.diagnostics,
            "generation_error": self.generation_error,
        }


@dataclass(frozen=True)
class TierResult:
    tier: Level
    total: int
    correct: int
    outcomes: tuple[TurnOutcome, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.correct <= self.total:
            raise ValueError("correct count must lie within 0..total")

    @property
    def evaluated(self) -> bool:
        return self.total > 0

    @property
    def accuracy(self) -> Fraction | None:
        if self.total == 0:
            return None
        return Fraction(self.correct, self.total)

    def to_dict(self) -> dict:
        return {
            "tier": self.tier.roman,
            "total": self.total,
            "correct": self.correct,
            "outcomes": [o.to_dict() for o in self.outcomes],
        }


def turn_request(
    suite: TestSuite,
    case: TestCase,
    turn_index: int,
    profile: SettingsProfile,
    sample_index: int = 0,
    paraphrase_index: int = 0,
) -> GenerationRequest:
    """Request for one turn with gold history and the chosen question variant
    (paraphrase_index 0 is the authored question, i>0 its i-th paraphrase)."""
    turn = case.turns[turn_index]
    if paraphrase_index == 0:
        question = turn.question
    else:
        question = turn.paraphrases[paraphrase_index - 1]
    history = tuple(
        (case.turns[i].question, case.turns[i].gold_query)
        for i in range(turn_index)
    )
    fixture = suite.database_for(case)
    return GenerationRequest(
        suite_id=suite.suite_id,
        case_id=case.case_id,
        turn_index=turn_index,
        question=question,
        schema_ddl=fixture.schema_script,
        history=history,
        settings=profile.params,
        profile_id=profile.profile_id,
        sample_index=sample_index,
        paraphrase_index=paraphrase_index,
    )


def adjudicate(
    suite: TestSuite,
    case: TestCase,
    turn_index: int,
    record: GenerationRecord,
) -> sqlcheck.EquivalenceVerdict:
    """Execution-match verdict of a record against the turn's gold query."""
    turn = case.turns[turn_index]
    fixture = suite.database_for(case)
    return sqlcheck.equivalent(
        fixture,
        record.query,
        turn.gold_query,
        order_sensitive=turn.order_sensitive,
    )


def _map_tasks(tasks: Sequence, fn: Callable, max_workers: int) -> list:
    """Apply fn over tasks, optionally on a thread pool; output order always
    follows input order so schedules never change results."""
    if max_workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, tasks))


def _evaluate_case(suite: TestSuite, sut, case: TestCase,
                   profile: SettingsProfile) -> list[TurnOutcome]:
    outcomes: list[TurnOutcome] = []
    for turn_index in range(len(case.turns)):
        request = turn_request(suite, case, turn_index, profile)
        record = sut.generate(request)
        verdict = adjudicate(suite, case, turn_index, record)
        outcomes.append(TurnOutcome(
            case_id=case.case_id,
            turn_index=turn_index,
            status=verdict.status.value,
            correct=verdict.is_equivalent,
            diagnostics=verdict.diagnostics,
            generation_error=record.error,
        ))
    return outcomes


def evaluate_tier(
    suite: TestSuite,
    sut,
    tier: Level,
    profile: SettingsProfile | None = None,
    max_workers: int = 1,
) -> TierResult:
    """Accuracy over every turn of every case in one tier.

    Cases run independently (optionally concurrently); turns within a case
    stay sequential to preserve conversation order.
    """
    profile = profile or suite.default_profile()
    cases = suite.cases_in_tier(tier)
    per_case = _map_tasks(
        cases,
        lambda case: _evaluate_case(suite, sut, case, profile),
        max_workers,
    )
    outcomes = tuple(outcome for group in per_case for outcome in group)
    return TierResult(
        tier=tier,
        total=len(outcomes),
        correct=sum(1 for o in outcomes if o.correct),
        outcomes=outcomes,
    )


def evaluate_accuracy_category(
    suite: TestSuite,
    sut,
    rubric: MaturityRubric,
    max_workers: int = 1,
) -> CategoryEvaluation:
    """Per-level criterion results and the assigned accuracy level.

    Level N is gated by the tier-N slice: its threshold criterion applies the
    rubric comparison to the slice's exact correct/total counts, and its
    handling criterion passes only when the slice is populated and clears the
    same threshold. An empty tier leaves the level not evaluated, which caps
    the assignment below it.
    """
    profile = suite.default_profile()
    tier_results = {
        level: evaluate_tier(suite, sut, level, profile, max_workers)
        for level in (Level.I, Level.II, Level.III, Level.IV)
    }

    per_level: dict[Level, list[CriterionResult]] = {}
    for level, result in tier_results.items():
        threshold = rubric.accuracy_thresholds[level]
        if not result.evaluated:
            reason = (f"tier {level.roman}: no cases in suite",)
            per_level[level] = [
                CriterionResult(_THRESHOLD_IDS[level],
                                CriterionStatus.NOT_EVALUATED, reason),
                CriterionResult(_HANDLING_IDS[level],
                                CriterionStatus.NOT_EVALUATED, reason),
            ]
            continue
        passed = meets(threshold, result.correct, result.total)
        evidence = tuple(
            [f"tier {level.roman}: {result.correct}/{result.total} "
             f"turns correct"]
            + [f"turn {o.case_id}[{o.turn_index}]: {o.status}"
               for o in result.outcomes]
        )
        status = CriterionStatus.PASS if passed else CriterionStatus.FAIL
        per_level[level] = [
            CriterionResult(_THRESHOLD_IDS[level], status, evidence,
                            measured_value=result.accuracy),
            CriterionResult(
                _HANDLING_IDS[level], status,
                (f"tier {level.roman} populated with "
                 f"{len(suite.cases_in_tier(level))} case(s); threshold "
                 f"{'met' if passed else 'not met'}",),
                measured_value=result.accuracy,
            ),
        ]

    metrics = {
        "adjudication": ADJUDICATION_POLICY,
        "tier_accuracy": {
            level.roman: {
                "correct": result.correct,
                "total": result.total,
            }
            for level, result in tier_results.items()
        },
    }
    return CategoryEvaluation.assemble(Category.ACCURACY, per_level, metrics)
