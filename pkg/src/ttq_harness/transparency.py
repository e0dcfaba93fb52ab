"""Transparency category evaluation: audit of records, logs, and documents.

The audit only reports what it can prove. Machine criteria are checked
against generation records and the harness run log; document criteria check
that a registered file exists and is non-empty; organizational claims the
harness cannot verify (traceability standards, feedback surfaces, the
effectiveness of a bias framework) come from manifest attestations and are
reported as attested-pass, visibly distinct from a machine pass.

Because the harness is the only "user" driving the system under test,
session_id plus case_id stand in for user identity in log entries.
"""

from __future__ import annotations

import hashlib
import json
import threading
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .adapter import GenerationRecord, GenerationRequest
from .rubric import (
    Category,
    CategoryEvaluation,
    CriterionResult,
    CriterionSpec,
    CriterionStatus,
    EvaluationError,
    Level,
    MaturityRubric,
    meets,
)

DIRECTION_REQUEST = "request"
DIRECTION_RESPONSE = "response"
DIRECTION_DECISION = "decision"

DOC_KINDS = (
    "model-documentation",
    "data-documentation",
    "performance-limitations",
    "ethical-societal",
    "bias-mitigation",
)

# Criterion id → document kind for the document-existence checks.
_DOC_CRITERIA = {
    "basic-model-documentation": "model-documentation",
    "data-documentation": "data-documentation",
    "comprehensive-documentation": "performance-limitations",
    "ethical-documentation": "ethical-societal",
}


class ManifestError(Exception):
    pass


def canonical_digest(payload: Mapping) -> str:
    """Stable content digest of a JSON-serializable payload."""
    text = json.dumps(payload, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def format_timestamp(epoch_seconds: float) -> str:
    return datetime.fromtimestamp(epoch_seconds, tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ")


# --- manifest ----------------------------------------------------------------


@dataclass(frozen=True)
class DocumentRef:
    doc_id: str
    path: Path
    kind: str
    attested: bool = False


@dataclass(frozen=True)
class TransparencyManifest:
    """SUT-declared documents and feature attestations."""

    documents: tuple[DocumentRef, ...] = ()
    features: tuple[tuple[str, bool], ...] = ()

    def documents_of_kind(self, kind: str) -> tuple[DocumentRef, ...]:
        return tuple(d for d in self.documents if d.kind == kind)

    def attests(self, feature_id: str) -> bool:
        return dict(self.features).get(feature_id, False)


def load_manifest(path: str | Path) -> TransparencyManifest:
    """Read a manifest JSON file; document paths resolve against its folder."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: {exc}")
    if not isinstance(data, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    documents: list[DocumentRef] = []
    raw_docs = data.get("documents", {})
    if not isinstance(raw_docs, dict):
        raise ManifestError(f"{path}: 'documents' must be an object")
    for doc_id in sorted(raw_docs):
        entry = raw_docs[doc_id]
        if not isinstance(entry, dict) or "path" not in entry \
                or "kind" not in entry:
            raise ManifestError(
                f"{path}: document {doc_id!r} needs 'path' and 'kind'")
        kind = entry["kind"]
        if kind not in DOC_KINDS:
            raise ManifestError(
                f"{path}: document {doc_id!r} has unknown kind {kind!r}")
        doc_path = Path(entry["path"])
        if not doc_path.is_absolute():
            doc_path = path.parent / doc_path
        documents.append(DocumentRef(
            doc_id=doc_id,
            path=doc_path,
            kind=kind,
            attested=bool(entry.get("attested", False)),
        ))
    raw_features = data.get("features", {})
    if not isinstance(raw_features, dict):
        raise ManifestError(f"{path}: 'features' must be an object")
    features = tuple(sorted(
        (str(k), bool(v)) for k, v in raw_features.items()))
    return TransparencyManifest(tuple(documents), features)


# --- run log -------------------------------------------------------------------


@dataclass(frozen=True)
class LogEntry:
    entry_id: int
    timestamp: str
    session_id: str
    case_id: str
    turn_index: int
    direction: str
    payload_digest: str

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "timestamp": self.timestamp,
            "session_id": self.session_id,
            "case_id": self.case_id,
            "turn_index": self.turn_index,
            "direction": self.direction,
            "payload_digest": self.payload_digest,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "LogEntry":
        return cls(
            entry_id=int(data["entry_id"]),
            timestamp=str(data.get("timestamp", "")),
            session_id=str(data.get("session_id", "")),
            case_id=str(data.get("case_id", "")),
            turn_index=int(data.get("turn_index", -1)),
            direction=str(data["direction"]),
            payload_digest=str(data["payload_digest"]),
        )


class RunLog:
    """Append-only log with strictly increasing entry ids; appends are
    serialized through one lock so concurrent evaluation cannot interleave
    partial writes."""

    def __init__(self, session_id: str,
                 clock: Callable[[], float] | None = None,
                 path: str | Path | None = None):
        import time as _time
        self.session_id = session_id
        self._clock = clock or _time.time
        self._lock = threading.Lock()
        self._entries: list[LogEntry] = []
        self._path = Path(path) if path is not None else None
        self._handle = None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self._path.open("w", encoding="utf-8")

    def append(self, case_id: str, turn_index: int, direction: str,
               payload_digest: str) -> LogEntry:
        if direction not in (DIRECTION_REQUEST, DIRECTION_RESPONSE,
                             DIRECTION_DECISION):
            raise EvaluationError(f"unknown log direction {direction!r}")
        with self._lock:
            entry = LogEntry(
                entry_id=len(self._entries) + 1,
                timestamp=format_timestamp(self._clock()),
                session_id=self.session_id,
                case_id=case_id,
                turn_index=turn_index,
                direction=direction,
                payload_digest=payload_digest,
            )
            self._entries.append(entry)
            if self._handle is not None:
                self._handle.write(json.dumps(entry.to_dict(),
                                              sort_keys=True) + "\n")
                self._handle.flush()
        return entry

    @property
    def entries(self) -> tuple[LogEntry, ...]:
        with self._lock:
            return tuple(self._entries)

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None

    @classmethod
    def from_entries(cls, session_id: str,
                     entries: Iterable[LogEntry]) -> "RunLog":
        log = cls(session_id)
        log._entries = sorted(entries, key=lambda e: e.entry_id)
        return log


def load_runlog(path: str | Path, session_id: str = "") -> RunLog:
    entries = []
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entries.append(LogEntry.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise EvaluationError(f"{path}:{lineno}: bad log entry: {exc}")
    return RunLog.from_entries(session_id, entries)


# --- logging wrapper ------------------------------------------------------------


def request_digest(request: GenerationRequest) -> str:
    return canonical_digest(request.to_dict())


def record_digest(record: GenerationRecord) -> str:
    return canonical_digest(record.stable_dict())


def decision_digest(record: GenerationRecord, step_index: int) -> str:
    assert record.trace is not None
    step = record.trace[step_index - 1]
    return canonical_digest({
        "record": record_digest(record),
        "step": step.to_dict(),
    })


class LoggingSut:
    """Adapter wrapper that logs every generation in both directions plus one
    decision entry per trace step, and keeps the records for the audit."""

    def __init__(self, inner, log: RunLog):
        self._inner = inner
        self._log = log
        self._lock = threading.Lock()
        self._records: list[GenerationRecord] = []

    @property
    def kind(self) -> str:
        return getattr(self._inner, "kind", "unknown")

    def generate(self, request: GenerationRequest) -> GenerationRecord:
        self._log.append(request.case_id, request.turn_index,
                         DIRECTION_REQUEST, request_digest(request))
        record = self._inner.generate(request)
        self._log.append(request.case_id, request.turn_index,
                         DIRECTION_RESPONSE, record_digest(record))
        if record.trace:
            for step in record.trace:
                self._log.append(request.case_id, request.turn_index,
                                 DIRECTION_DECISION,
                                 decision_digest(record, step.step_index))
        with self._lock:
            self._records.append(record)
        return record

    @property
    def records(self) -> tuple[GenerationRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def close(self) -> None:
        self._inner.close()


# --- audit -----------------------------------------------------------------------


def _check_document(manifest: TransparencyManifest, kind: str
                    ) -> tuple[bool, tuple[str, ...]]:
    docs = manifest.documents_of_kind(kind)
    if not docs:
        return False, (f"no {kind} document registered in manifest",)
    evidence: list[str] = []
    for doc in docs:
        if not doc.path.is_file():
            return False, (f"missing file: {doc.path}",)
        if doc.path.stat().st_size == 0:
            return False, (f"empty file: {doc.path}",)
        evidence.append(f"document {doc.doc_id}: {doc.path}")
    return True, tuple(evidence)


def _presence_check(records: Sequence[GenerationRecord],
                    has_signal: Callable[[GenerationRecord], bool],
                    threshold) -> tuple[bool, Fraction | None, str]:
    successful = [r for r in records if not r.failed]
    if not successful:
        return True, None, "no successful generations to inspect"
    carrying = sum(1 for r in successful if has_signal(r))
    passed = meets(threshold, carrying, len(successful))
    return passed, Fraction(carrying, len(successful)), \
        f"{carrying}/{len(successful)} successful generations carry the signal"


def _machine_result(spec: CriterionSpec, passed: bool,
                    evidence: tuple[str, ...],
                    measured: Fraction | None = None) -> CriterionResult:
    status = CriterionStatus.PASS if passed else CriterionStatus.FAIL
    return CriterionResult(spec.id, status, evidence, measured_value=measured)


def _attested_result(spec: CriterionSpec, manifest: TransparencyManifest,
                     extra_ok: bool = True,
                     extra_evidence: tuple[str, ...] = ()) -> CriterionResult:
    attested = manifest.attests(spec.id)
    if attested and extra_ok:
        evidence = (f"manifest attestation: {spec.id}",) + extra_evidence
        return CriterionResult(spec.id, CriterionStatus.ATTESTED_PASS, evidence)
    if not attested:
        evidence = (f"manifest does not attest {spec.id}",)
    else:
        evidence = extra_evidence
    return CriterionResult(spec.id, CriterionStatus.FAIL, evidence)


def audit(
    records: Sequence[GenerationRecord],
    log: RunLog,
    manifest: TransparencyManifest,
    rubric: MaturityRubric,
) -> CategoryEvaluation:
    """Evaluate the transparency criterion catalogue over an evaluation run's
    records, the harness log, and the SUT manifest. Read-only and repeatable."""
    entries = log.entries
    by_direction: dict[str, Counter] = {
        DIRECTION_REQUEST: Counter(),
        DIRECTION_RESPONSE: Counter(),
        DIRECTION_DECISION: Counter(),
    }
    for entry in entries:
        if entry.direction in by_direction:
            by_direction[entry.direction][entry.payload_digest] += 1

    results: dict[str, CriterionResult] = {}
    specs = {spec.id: spec for spec in rubric.criterion_specs()}

    def put(result: CriterionResult) -> None:
        results[result.criterion_id] = result

    # Level 1: query-logging - every record logged in both directions.
    spec = specs["query-logging"]
    missing: list[str] = []
    wanted_requests = Counter(request_digest(r.request) for r in records)
    wanted_responses = Counter(record_digest(r) for r in records)
    for digest, count in wanted_requests.items():
        if by_direction[DIRECTION_REQUEST][digest] < count:
            missing.append(f"request entry missing (digest {digest[:12]})")
    for digest, count in wanted_responses.items():
        if by_direction[DIRECTION_RESPONSE][digest] < count:
            missing.append(f"response entry missing (digest {digest[:12]})")
    if records:
        put(_machine_result(
            spec, not missing,
            tuple(sorted(missing)[:10]) if missing else
            (f"all {len(records)} generations logged in both directions",),
        ))
    else:
        put(CriterionResult(spec.id, CriterionStatus.NOT_EVALUATED,
                            ("no generation records to audit",)))

    put(_machine_result(specs["basic-model-documentation"],
                        *_check_document(manifest, "model-documentation")))
    put(_attested_result(specs["minimal-traceability"], manifest))

    # Level 2: enhanced-logging - entry metadata completeness.
    spec = specs["enhanced-logging"]
    if entries:
        incomplete = [
            f"entry {e.entry_id} lacks "
            + ", ".join(name for name, value in (
                ("timestamp", e.timestamp), ("session_id", e.session_id),
                ("case_id", e.case_id)) if not value)
            for e in entries
            if not (e.timestamp and e.session_id and e.case_id)
        ]
        put(_machine_result(
            spec, not incomplete,
            tuple(incomplete[:10]) if incomplete else
            (f"all {len(entries)} log entries carry timestamp, session_id, "
             f"and case_id",),
        ))
    else:
        put(CriterionResult(spec.id, CriterionStatus.NOT_EVALUATED,
                            ("run log is empty",)))

    spec = specs["interpretability-signal"]
    passed, measured, note = _presence_check(
        records,
        lambda r: bool(r.explanation and r.explanation.strip()),
        rubric.presence_threshold(spec.id),
    )
    put(_machine_result(spec, passed, (note,), measured))

    put(_machine_result(specs["data-documentation"],
                        *_check_document(manifest, "data-documentation")))

    # Level 3
    spec = specs["stepwise-reasoning"]
    passed, measured, note = _presence_check(
        records,
        lambda r: bool(r.trace),
        rubric.presence_threshold(spec.id),
    )
    put(_machine_result(spec, passed, (note,), measured))

    put(_attested_result(specs["feedback-observability"], manifest))
    put(_machine_result(specs["comprehensive-documentation"],
                        *_check_document(manifest, "performance-limitations")))

    # Level 4: per-decision-logs - one decision entry per trace step.
    spec = specs["per-decision-logs"]
    wanted_decisions: Counter = Counter()
    step_total = 0
    for record in records:
        if record.trace:
            for step in record.trace:
                wanted_decisions[decision_digest(record, step.step_index)] += 1
                step_total += 1
    if step_total == 0:
        put(CriterionResult(spec.id, CriterionStatus.FAIL,
                            ("no trace steps were produced, so no decision "
                             "trail exists",)))
    else:
        missing_steps = [
            f"decision entry missing (digest {digest[:12]})"
            for digest, count in wanted_decisions.items()
            if by_direction[DIRECTION_DECISION][digest] < count
        ]
        put(_machine_result(
            spec, not missing_steps,
            tuple(sorted(missing_steps)[:10]) if missing_steps else
            (f"all {step_total} trace steps have decision log entries",),
        ))

    put(_machine_result(specs["ethical-documentation"],
                        *_check_document(manifest, "ethical-societal")))

    doc_ok, doc_evidence = _check_document(manifest, "bias-mitigation")
    put(_attested_result(specs["bias-mitigation"], manifest,
                         extra_ok=doc_ok,
                         extra_evidence=doc_evidence))

    per_level: dict[Level, list[CriterionResult]] = {}
    for level, level_specs in rubric.transparency_criteria.items():
        per_level[level] = [results[s.id] for s in level_specs]

    successful = [r for r in records if not r.failed]
    metrics = {
        "log_entries": len(entries),
        "records": len(records),
        "successful_records": len(successful),
        "explanation_presence": {
            "carrying": sum(1 for r in successful
                            if r.explanation and r.explanation.strip()),
            "successful": len(successful),
        },
        "trace_presence": {
            "carrying": sum(1 for r in successful if r.trace),
            "successful": len(successful),
        },
        "documents": {
            kind: len(manifest.documents_of_kind(kind)) for kind in DOC_KINDS
        },
        "attestations": {k: v for k, v in manifest.features},
    }
    return CategoryEvaluation.assemble(Category.TRANSPARENCY, per_level,
                                       metrics)
