"""Assessment report assembly and rendering.

The JSON form is the canonical artifact: schema-stable, sorted keys, raw
counts next to every threshold decision so any pass/fail can be re-derived
from the embedded rubric snapshot without rerunning. The markdown form
presents the same content as a category-by-level matrix for humans.

Timestamps live only in the run metadata block and come from an injectable
clock, so fixed-clock runs render byte-identical reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from .rubric import (
    Category,
    CategoryEvaluation,
    CriterionStatus,
    Level,
    MaturityRubric,
    RUBRIC_LEVELS,
)
from .transparency import format_timestamp

SCHEMA_VERSION = "1"

FORMAT_JSON = "json"
FORMAT_MARKDOWN = "markdown"
FORMATS = (FORMAT_JSON, FORMAT_MARKDOWN)

CATEGORY_TITLES = {
    "accuracy": "Accuracy / Efficacy",
    "consistency": "Consistency / Robustness",
    "transparency": "Transparency / Traceability",
}

_STATUS_MARKERS = {
    CriterionStatus.PASS.value: "pass",
    CriterionStatus.FAIL.value: "fail",
    CriterionStatus.ATTESTED_PASS.value: "pass (attested)",
    CriterionStatus.NOT_EVALUATED.value: "not evaluated",
}


@dataclass(frozen=True)
class RunContext:
    """Everything the report needs besides the category evaluations."""

    suite_id: str
    sut_summary: dict
    rubric: MaturityRubric
    harness_version: str
    started_at: float
    finished_at: float
    concurrency: int = 1
    seed: int | None = None
    fixed_clock: bool = False
    failed_generations: int = 0
    total_generations: int = 0


@dataclass(frozen=True)
class AssessmentReport:
    schema_version: str
    harness_version: str
    suite_id: str
    sut: dict
    rubric: dict
    adjudication: str
    categories: dict
    maturity_vector: dict
    run: dict

    def assigned_level(self, category: str) -> Level | None:
        entry = self.categories.get(category)
        if not entry or not entry.get("evaluated"):
            return None
        return Level(entry["assigned_level"])

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "harness_version": self.harness_version,
            "suite_id": self.suite_id,
            "sut": self.sut,
            "rubric": self.rubric,
            "adjudication": self.adjudication,
            "categories": self.categories,
            "maturity_vector": self.maturity_vector,
            "run": self.run,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AssessmentReport":
        return cls(
            schema_version=data["schema_version"],
            harness_version=data["harness_version"],
            suite_id=data["suite_id"],
            sut=dict(data["sut"]),
            rubric=dict(data["rubric"]),
            adjudication=data["adjudication"],
            categories=dict(data["categories"]),
            maturity_vector=dict(data["maturity_vector"]),
            run=dict(data["run"]),
        )


def _category_payload(evaluation: CategoryEvaluation | None) -> dict:
    if evaluation is None:
        return {"evaluated": False, "criteria": {}, "metrics": {}}
    return {
        "evaluated": True,
        "assigned_level": int(evaluation.assigned),
        "assigned_label": evaluation.assigned.roman,
        "criteria": {
            str(int(level)): [r.to_dict() for r in results]
            for level, results in evaluation.per_level.items()
        },
        "metrics": evaluation.metrics,
    }


def build_report(
    accuracy: CategoryEvaluation | None,
    consistency: CategoryEvaluation | None,
    transparency: CategoryEvaluation | None,
    context: RunContext,
) -> AssessmentReport:
    """Deterministic assembly of the final report; categories that did not
    run are marked unevaluated and stay out of the maturity vector."""
    evaluations = {
        Category.ACCURACY.value: accuracy,
        Category.CONSISTENCY.value: consistency,
        Category.TRANSPARENCY.value: transparency,
    }
    categories = {
        name: _category_payload(evaluation)
        for name, evaluation in evaluations.items()
    }
    vector = {
        name: int(evaluation.assigned)
        for name, evaluation in evaluations.items()
        if evaluation is not None
    }
    # Worker count is a nuisance parameter: reports must not depend on it.
    run = {
        "started_at": format_timestamp(context.started_at),
        "finished_at": format_timestamp(context.finished_at),
        "seed": context.seed,
        "fixed_clock": context.fixed_clock,
        "failure_rate": {
            "failed": context.failed_generations,
            "total": context.total_generations,
        },
    }
    return AssessmentReport(
        schema_version=SCHEMA_VERSION,
        harness_version=context.harness_version,
        suite_id=context.suite_id,
        sut=dict(context.sut_summary),
        rubric=context.rubric.to_dict(),
        adjudication="execution-match",
        categories=categories,
        maturity_vector=vector,
        run=run,
    )


def to_json(report: AssessmentReport) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=True,
                      ensure_ascii=False) + "\n"


def from_json(text: str) -> AssessmentReport:
    return AssessmentReport.from_dict(json.loads(text))


def _level_cell(results: list[dict]) -> str:
    if not results:
        return "-"
    statuses = [r["status"] for r in results]
    if any(s == CriterionStatus.FAIL.value for s in statuses):
        return "fail"
    if any(s == CriterionStatus.NOT_EVALUATED.value for s in statuses):
        return "not evaluated"
    if any(s == CriterionStatus.ATTESTED_PASS.value for s in statuses):
        return "pass (attested)"
    return "pass"


def _markdown_metrics(name: str, metrics: dict, lines: list[str]) -> None:
    if name == "accuracy" and "tier_accuracy" in metrics:
        lines.append("")
        lines.append("| Tier | Correct | Total |")
        lines.append("| --- | --- | --- |")
        for tier, counts in metrics["tier_accuracy"].items():
            lines.append(f"| {tier} | {counts['correct']} "
                         f"| {counts['total']} |")
    if name == "consistency" and "regimes" in metrics:
        lines.append("")
        lines.append("| Regime | Stability | Self-consistency |")
        lines.append("| --- | --- | --- |")
        for regime, data in metrics["regimes"].items():
            def _ratio(entry: dict | None) -> str:
                if not entry:
                    return "-"
                return f"{entry['numerator']}/{entry['denominator']}"
            lines.append(f"| {regime} | {_ratio(data.get('stability'))} "
                         f"| {_ratio(data.get('self_consistency'))} |")
    if name == "transparency" and "explanation_presence" in metrics:
        explanation = metrics["explanation_presence"]
        trace = metrics["trace_presence"]
        lines.append("")
        lines.append(f"- Explanations on {explanation['carrying']}/"
                     f"{explanation['successful']} successful generations")
        lines.append(f"- Traces on {trace['carrying']}/"
                     f"{trace['successful']} successful generations")
        lines.append(f"- Log entries: {metrics.get('log_entries', 0)}")


def to_markdown(report: AssessmentReport) -> str:
    lines: list[str] = []
    lines.append("# Text-to-Query Maturity Assessment")
    lines.append("")
    lines.append(f"- Suite: `{report.suite_id}`")
    lines.append(f"- SUT kind: `{report.sut.get('kind', 'unknown')}`")
    lines.append(f"- Adjudication: {report.adjudication}")
    lines.append(f"- Generated: {report.run.get('finished_at', '')}")
    failure = report.run.get("failure_rate", {})
    if failure.get("total"):
        lines.append(f"- Generation failures: {failure.get('failed', 0)}"
                     f"/{failure.get('total', 0)}")
    lines.append("")
    lines.append("## Maturity Vector")
    lines.append("")
    lines.append("| Category | Assigned Level |")
    lines.append("| --- | --- |")
    for name in ("accuracy", "consistency", "transparency"):
        entry = report.categories.get(name, {})
        if entry.get("evaluated"):
            label = Level(entry["assigned_level"]).roman
        else:
            label = "not evaluated"
        lines.append(f"| {CATEGORY_TITLES[name]} | {label} |")
    lines.append("")
    lines.append("## Criteria by Level")
    lines.append("")
    lines.append("| Category | I | II | III | IV |")
    lines.append("| --- | --- | --- | --- | --- |")
    for name in ("accuracy", "consistency", "transparency"):
        entry = report.categories.get(name, {})
        cells = []
        for level in RUBRIC_LEVELS:
            results = entry.get("criteria", {}).get(str(int(level)), [])
            cells.append(_level_cell(results) if entry.get("evaluated")
                         else "-")
        lines.append(f"| {CATEGORY_TITLES[name]} | " + " | ".join(cells)
                     + " |")

    for name in ("accuracy", "consistency", "transparency"):
        entry = report.categories.get(name, {})
        if not entry.get("evaluated"):
            continue
        lines.append("")
        lines.append(f"## {CATEGORY_TITLES[name]} - Level "
                     f"{Level(entry['assigned_level']).roman}")
        for level in RUBRIC_LEVELS:
            results = entry.get("criteria", {}).get(str(int(level)), [])
            if not results:
                continue
            lines.append("")
            lines.append(f"### Level {level.roman}")
            for result in results:
                marker = _STATUS_MARKERS.get(result["status"],
                                             result["status"])
                value = result.get("measured_value")
                measured = f" (measured {value})" if value is not None else ""
                lines.append(f"- **{result['criterion_id']}**: "
                             f"{marker}{measured}")
        _markdown_metrics(name, entry.get("metrics", {}), lines)
    lines.append("")
    return "\n".join(lines)


def render(report: AssessmentReport, fmt: str) -> str:
    """Render to one of the supported formats; unknown names are a usage
    error for the caller to surface."""
    if fmt == FORMAT_JSON:
        return to_json(report)
    if fmt == FORMAT_MARKDOWN:
        return to_markdown(report)
    raise ValueError(f"unknown report format {fmt!r} "
                     f"(expected one of {', '.join(FORMATS)})")
