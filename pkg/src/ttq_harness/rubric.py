"""Maturity rubric: categories, levels, thresholds, and the level-assignment rule.

Every number the harness applies lives here, in one serializable snapshot, so a
report can always be re-derived from its embedded rubric plus raw counts.
Threshold checks use exact rational arithmetic; boundary cases like 6/10 vs a
0.60 floor are decided by integer cross-multiplication, never by float rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class EvaluationError(Exception):
    """A measurement or threshold check was asked something ill-posed."""


class Category(str, enum.Enum):
    ACCURACY = "accuracy"
    CONSISTENCY = "consistency"
    TRANSPARENCY = "transparency"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class Level(enum.IntEnum):
    """Maturity level ordinal. 0 means "below Level I" and is only ever an
    assignment result, never a rubric row."""

    NONE = 0
    I = 1
    II = 2
    III = 3
    IV = 4

    @property
    def roman(self) -> str:
        return ("0", "I", "II", "III", "IV")[int(self)]

    @classmethod
    def from_label(cls, label: object) -> "Level":
        """Accept 1..4, "1".."4", or Roman numerals "I".."IV"."""
        if isinstance(label, Level):
            return label
        if isinstance(label, int):
            return cls(label)
        text = str(label).strip().upper()
        romans = {"I": 1, "II": 2, "III": 3, "IV": 4}
        if text in romans:
            return cls(romans[text])
        try:
            return cls(int(text))
        except ValueError as exc:
            raise EvaluationError(f"unknown level label {label!r}") from exc


RUBRIC_LEVELS = (Level.I, Level.II, Level.III, Level.IV)

# Variation regime names; the consistency module owns the enum, the rubric
# only stores the name attached to each stability threshold.
REGIME_IDENTICAL = "identical"
REGIME_SETTINGS = "settings-variation"
REGIME_LINGUISTIC = "linguistic-variation"

GE = ">="
GT = ">"


def as_fraction(value: object) -> Fraction:
    """Parse a fraction from Fraction, int, "p/q", or a decimal string/float.

    Floats go through str() so a config literal 0.6 means exactly 3/5, not the
    nearest binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise EvaluationError(f"not a fraction: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise EvaluationError(f"not a fraction: {value!r}") from exc
    raise EvaluationError(f"not a fraction: {value!r}")


@dataclass(frozen=True)
class Threshold:
    """A fraction floor plus its comparison (inclusive ">=" or strict ">")."""

    fraction: Fraction
    comparison: str = GE

    def __post_init__(self) -> None:
        if self.comparison not in (GE, GT):
            raise EvaluationError(f"unknown comparison {self.comparison!r}")
        if not 0 <= self.fraction <= 1:
            raise EvaluationError(f"threshold fraction {self.fraction} outside [0,1]")

    def to_dict(self) -> dict:
        return {"fraction": str(self.fraction), "comparison": self.comparison}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Threshold":
        return cls(as_fraction(data["fraction"]), data.get("comparison", GE))


@dataclass(frozen=True)
class StabilityRequirement:
    """Which variation regime a level is measured under, and its floor."""

    regime: str
    threshold: Threshold

    def to_dict(self) -> dict:
        return {"regime": self.regime, **self.threshold.to_dict()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "StabilityRequirement":
        return cls(data["regime"], Threshold.from_dict(data))


CHECK_MACHINE = "machine"
CHECK_ATTESTED = "attested"


@dataclass(frozen=True)
class CriterionSpec:
    id: str
    description: str
    check_kind: str = CHECK_MACHINE

    def to_dict(self) -> dict:
        return {"id": self.id, "description": self.description, "check_kind": self.check_kind}

    @classmethod
    def from_dict(cls, data: Mapping) -> "CriterionSpec":
        return cls(data["id"], data["description"], data.get("check_kind", CHECK_MACHINE))


class CriterionStatus(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    ATTESTED_PASS = "attested-pass"
    NOT_EVALUATED = "not-evaluated"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


PASSING_STATUSES = (CriterionStatus.PASS, CriterionStatus.ATTESTED_PASS)


@dataclass(frozen=True)
class CriterionResult:
    """Outcome of one criterion check with its evidence pointers."""

    criterion_id: str
    status: CriterionStatus
    evidence: tuple[str, ...] = ()
    measured_value: Fraction | None = None

    def __post_init__(self) -> None:
        if self.status in PASSING_STATUSES and not self.evidence:
            raise EvaluationError(
                f"criterion {self.criterion_id!r} cannot pass without evidence"
            )

    @property
    def passed(self) -> bool:
        return self.status in PASSING_STATUSES

    def to_dict(self) -> dict:
        return {
            "criterion_id": self.criterion_id,
            "status": self.status.value,
            "evidence": list(self.evidence),
            "measured_value": None if self.measured_value is None else str(self.measured_value),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CriterionResult":
        value = data.get("measured_value")
        return cls(
            criterion_id=data["criterion_id"],
            status=CriterionStatus(data["status"]),
            evidence=tuple(data.get("evidence", ())),
            measured_value=None if value is None else as_fraction(value),
        )


def meets(threshold: Threshold, numerator: int, denominator: int) -> bool:
    """Exact rational comparison of numerator/denominator against a threshold."""
    if denominator <= 0:
        raise EvaluationError("meets() requires a positive denominator")
    if numerator < 0:
        raise EvaluationError("meets() requires a nonnegative numerator")
    ratio = Fraction(numerator, denominator)
    if threshold.comparison == GT:
        return ratio > threshold.fraction
    return ratio >= threshold.fraction


def assign_level(per_level_results: Mapping[Level, Sequence[CriterionResult]]) -> Level:
    """Highest level L such that every level <= L has all criteria passing.

    Levels are cumulative: the first level that fails, is empty, or is missing
    caps the assignment below it. A Level I failure assigns 0.
    """
    achieved = Level.NONE
    for level in RUBRIC_LEVELS:
        results = per_level_results.get(level)
        if not results:
            break
        if not all(r.passed for r in results):
            break
        achieved = level
    return achieved


# --- transparency criterion catalogue -------------------------------------

def _transparency_catalogue() -> dict[Level, tuple[CriterionSpec, ...]]:
    return {
        Level.I: (
            CriterionSpec(
                "query-logging",
                "Every generation is logged in both directions (request and response).",
            ),
            CriterionSpec(
                "basic-model-documentation",
                "A model-documentation document is registered and non-empty.",
            ),
            CriterionSpec(
                "minimal-traceability",
                "Declared compliance with the deployment's minimal traceability standards.",
                CHECK_ATTESTED,
            ),
        ),
        Level.II: (
            CriterionSpec(
                "enhanced-logging",
                "All log entries carry timestamp, session, and case metadata.",
            ),
            CriterionSpec(
                "interpretability-signal",
                "Successful generations carry a non-empty explanation.",
            ),
            CriterionSpec(
                "data-documentation",
                "A data-documentation document is registered and non-empty.",
            ),
        ),
        Level.III: (
            CriterionSpec(
                "stepwise-reasoning",
                "Successful generations carry a stepwise trace leading to the query.",
            ),
            CriterionSpec(
                "feedback-observability",
                "Declared availability of observability/feedback surfaces for users.",
                CHECK_ATTESTED,
            ),
            CriterionSpec(
                "comprehensive-documentation",
                "A performance-and-limitations document is registered and non-empty.",
            ),
        ),
        Level.IV: (
            CriterionSpec(
                "per-decision-logs",
                "Every trace step has a matching decision log entry.",
            ),
            CriterionSpec(
                "ethical-documentation",
                "An ethical-and-societal-impact document is registered and non-empty.",
            ),
            CriterionSpec(
                "bias-mitigation",
                "A bias-mitigation document exists and its framework is attested.",
                CHECK_ATTESTED,
            ),
        ),
    }


@dataclass(frozen=True)
class MaturityRubric:
    """The full threshold/criteria table for all three categories."""

    accuracy_thresholds: dict[Level, Threshold]
    stability_thresholds: dict[Level, StabilityRequirement]
    transparency_criteria: dict[Level, tuple[CriterionSpec, ...]]
    # Presence floors for explanation/trace signals (harness defaults, not
    # paper numbers); keyed by criterion id.
    presence_thresholds: dict[str, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for level in RUBRIC_LEVELS:
            if level not in self.accuracy_thresholds:
                raise EvaluationError(f"accuracy threshold missing for level {level.roman}")
            if level not in self.stability_thresholds:
                raise EvaluationError(f"stability threshold missing for level {level.roman}")
        fractions = [self.accuracy_thresholds[lv].fraction for lv in RUBRIC_LEVELS]
        if any(a > b for a, b in zip(fractions, fractions[1:])):
            raise EvaluationError("accuracy thresholds must be nondecreasing in level")
        seen: set[str] = set()
        for specs in self.transparency_criteria.values():
            for spec in specs:
                if spec.id in seen:
                    raise EvaluationError(f"duplicate criterion id {spec.id!r}")
                seen.add(spec.id)

    def criterion_specs(self) -> Iterable[CriterionSpec]:
        for level in RUBRIC_LEVELS:
            yield from self.transparency_criteria.get(level, ())

    def presence_threshold(self, criterion_id: str) -> Threshold:
        return Threshold(self.presence_thresholds.get(criterion_id, Fraction(19, 20)), GE)

    def to_dict(self) -> dict:
        return {
            "accuracy_thresholds": {
                str(int(lv)): self.accuracy_thresholds[lv].to_dict() for lv in RUBRIC_LEVELS
            },
            "stability_thresholds": {
                str(int(lv)): self.stability_thresholds[lv].to_dict() for lv in RUBRIC_LEVELS
            },
            "transparency_criteria": {
                str(int(lv)): [s.to_dict() for s in self.transparency_criteria[lv]]
                for lv in RUBRIC_LEVELS
            },
            "presence_thresholds": {
                key: str(value) for key, value in sorted(self.presence_thresholds.items())
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MaturityRubric":
        return cls(
            accuracy_thresholds={
                Level.from_label(k): Threshold.from_dict(v)
                for k, v in data["accuracy_thresholds"].items()
            },
            stability_thresholds={
                Level.from_label(k): StabilityRequirement.from_dict(v)
                for k, v in data["stability_thresholds"].items()
            },
            transparency_criteria={
                Level.from_label(k): tuple(CriterionSpec.from_dict(s) for s in v)
                for k, v in data["transparency_criteria"].items()
            },
            presence_thresholds={
                k: as_fraction(v) for k, v in data.get("presence_thresholds", {}).items()
            },
        )

    def with_overrides(self, overrides: Mapping | None) -> "MaturityRubric":
        """Apply configuration overrides; unknown sections are rejected.

        Accepted shape (all sections optional, level keys Roman or numeric):
          {"accuracy": {"I": {"fraction": "0.7", "comparison": ">="}},
           "stability": {"III": {"fraction": "0.65", "regime": "..."}},
           "presence": {"stepwise-reasoning": "0.9"}}
        A bare number/string is shorthand for {"fraction": ...}.
        """
        if not overrides:
            return self
        known = {"accuracy", "stability", "presence"}
        unknown = set(overrides) - known
        if unknown:
            raise EvaluationError(f"unknown rubric override sections: {sorted(unknown)}")

        accuracy = dict(self.accuracy_thresholds)
        for key, spec in overrides.get("accuracy", {}).items():
            level = Level.from_label(key)
            base = accuracy[level]
            if not isinstance(spec, Mapping):
                spec = {"fraction": spec}
            accuracy[level] = Threshold(
                as_fraction(spec.get("fraction", base.fraction)),
                spec.get("comparison", base.comparison),
            )

        stability = dict(self.stability_thresholds)
        for key, spec in overrides.get("stability", {}).items():
            level = Level.from_label(key)
            base = stability[level]
            if not isinstance(spec, Mapping):
                spec = {"fraction": spec}
            stability[level] = StabilityRequirement(
                spec.get("regime", base.regime),
                Threshold(
                    as_fraction(spec.get("fraction", base.threshold.fraction)),
                    spec.get("comparison", base.threshold.comparison),
                ),
            )

        presence = dict(self.presence_thresholds)
        for key, value in overrides.get("presence", {}).items():
            presence[key] = as_fraction(value)

        return replace(
            self,
            accuracy_thresholds=accuracy,
            stability_thresholds=stability,
            presence_thresholds=presence,
        )


def default_rubric() -> MaturityRubric:
    """The rubric with its default thresholds.

    Accuracy floors: 60%, 80%, 90% inclusive, then strictly above 90%.
    Stability floors: 80% under identical repeats, 80% under settings
    variation, then 60% and 90% under linguistic variation.
    """
    return MaturityRubric(
        accuracy_thresholds={
            Level.I: Threshold(Fraction(3, 5), GE),
            Level.II: Threshold(Fraction(4, 5), GE),
            Level.III: Threshold(Fraction(9, 10), GE),
            Level.IV: Threshold(Fraction(9, 10), GT),
        },
        stability_thresholds={
            Level.I: StabilityRequirement(REGIME_IDENTICAL, Threshold(Fraction(4, 5), GE)),
            Level.II: StabilityRequirement(REGIME_SETTINGS, Threshold(Fraction(4, 5), GE)),
            Level.III: StabilityRequirement(REGIME_LINGUISTIC, Threshold(Fraction(3, 5), GE)),
            Level.IV: StabilityRequirement(REGIME_LINGUISTIC, Threshold(Fraction(9, 10), GE)),
        },
        transparency_criteria=_transparency_catalogue(),
        presence_thresholds={
            "interpretability-signal": Fraction(19, 20),
            "stepwise-reasoning": Fraction(19, 20),
        },
    )


@dataclass
class CategoryEvaluation:
    """Per-category bundle: criterion results by level, metrics, assigned level."""

    category: Category
    per_level: dict[Level, list[CriterionResult]]
    assigned: Level
    metrics: dict

    @classmethod
    def assemble(
        cls,
        category: Category,
        per_level: Mapping[Level, Sequence[CriterionResult]],
        metrics: dict,
    ) -> "CategoryEvaluation":
        stored = {lv: list(per_level.get(lv, ())) for lv in RUBRIC_LEVELS}
        return cls(category, stored, assign_level(stored), metrics)
