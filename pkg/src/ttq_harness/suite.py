"""Test suite model: database fixtures, tiered cases, and settings profiles.

A suite lives in a directory:

    suite.json                          suite_id, name, repeat_count,
                                        settings_variants
    databases/<db_id>/schema.sql        DDL
    databases/<db_id>/data.sql          seed DML (may be empty)
    cases/<tier>/<case_id>.json         tier in {I, II, III, IV}

Suites are immutable after load. Provisioning always builds a fresh private
in-memory database, so case executions never share state.
"""

from __future__ import annotations

import json
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from . import sqlcheck
from .rubric import (
    Level,
    REGIME_IDENTICAL,
    REGIME_LINGUISTIC,
    REGIME_SETTINGS,
)

ALL_REGIMES = (REGIME_IDENTICAL, REGIME_SETTINGS, REGIME_LINGUISTIC)
DEFAULT_REPEAT_COUNT = 5
IMPLICIT_INTENT_TAG = "implicit-intent"


class SuiteLoadError(Exception):
    """Raised for structural problems found while loading a suite directory."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ProvisioningError(Exception):
    def __init__(self, db_id: str, statement: str, detail: str):
        self.db_id = db_id
        self.statement = statement
        self.detail = detail
        super().__init__(
            f"fixture {db_id!r} failed on statement {statement!r}: {detail}")


@dataclass(frozen=True)
class DatabaseFixture:
    db_id: str
    schema_script: str
    data_script: str

    def provision(self) -> sqlite3.Connection:
        """Fresh isolated in-memory database seeded from the scripts."""
        conn = sqlite3.connect(":memory:")
        for script in (self.schema_script, self.data_script):
            try:
                statements = sqlcheck.split_statements(script)
            except sqlcheck.TokenizeError as exc:
                conn.close()
                raise ProvisioningError(self.db_id, script.strip()[:80], str(exc))
            for statement in statements:
                try:
                    conn.execute(statement)
                except sqlite3.Error as exc:
                    conn.close()
                    raise ProvisioningError(self.db_id, statement, str(exc))
        conn.commit()
        return conn


@dataclass(frozen=True)
class Turn:
    question: str
    gold_query: str
    paraphrases: tuple[str, ...] = ()
    order_sensitive: bool = False
    notes: str = ""


@dataclass(frozen=True)
class TestCase:
    case_id: str
    tier: Level
    db_id: str
    turns: tuple[Turn, ...]
    consistency_regimes: frozenset[str] = frozenset()
    tags: tuple[str, ...] = ()

    @property
    def measured_turn_index(self) -> int:
        """Consistency regimes measure the final turn of the conversation."""
        return len(self.turns) - 1

    def participates(self, regime: str) -> bool:
        return regime in self.consistency_regimes


@dataclass(frozen=True)
class SettingsProfile:
    profile_id: str
    params: tuple[tuple[str, Any], ...] = ()
    is_default: bool = False

    def params_dict(self) -> dict[str, Any]:
        return dict(self.params)


@dataclass(frozen=True)
class TestSuite:
    suite_id: str
    name: str
    databases: dict[str, DatabaseFixture]
    cases: tuple[TestCase, ...]
    settings_variants: tuple[SettingsProfile, ...]
    repeat_count: int = DEFAULT_REPEAT_COUNT

    def case(self, case_id: str) -> TestCase:
        for case in self.cases:
            if case.case_id == case_id:
                return case
        raise KeyError(case_id)

    def cases_in_tier(self, tier: Level) -> tuple[TestCase, ...]:
        return tuple(c for c in self.cases if c.tier == tier)

    def default_profile(self) -> SettingsProfile:
        for profile in self.settings_variants:
            if profile.is_default:
                return profile
        return self.settings_variants[0]

    def database_for(self, case: TestCase) -> DatabaseFixture:
        return self.databases[case.db_id]


@dataclass(frozen=True)
class Finding:
    """One suite validation problem; findings are data, never exceptions."""
    kind: str
    message: str
    case_id: str | None = None
    turn_index: int | None = None
    db_id: str | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, "message": self.message}
        if self.case_id is not None:
            out["case_id"] = self.case_id
        if self.turn_index is not None:
            out["turn_index"] = self.turn_index
        if self.db_id is not None:
            out["db_id"] = self.db_id
        return out


def _require(mapping: dict, key: str, kind: type, location: str) -> Any:
    if key not in mapping:
        raise SuiteLoadError(f"missing field {key!r}", location)
    value = mapping[key]
    if kind is not object and not isinstance(value, kind):
        raise SuiteLoadError(
            f"field {key!r} must be {kind.__name__}, got {type(value).__name__}",
            location)
    return value


def _load_json(path: Path) -> dict:
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SuiteLoadError(str(exc), str(path))
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SuiteLoadError(f"malformed JSON: {exc}", str(path))
    if not isinstance(data, dict):
        raise SuiteLoadError("top-level JSON value must be an object", str(path))
    return data


def _parse_profile(entry: Any, location: str) -> SettingsProfile:
    if not isinstance(entry, dict):
        raise SuiteLoadError("settings variant must be an object", location)
    profile_id = _require(entry, "profile_id", str, location)
    params = entry.get("params", {})
    if not isinstance(params, dict):
        raise SuiteLoadError(f"profile {profile_id!r}: params must be an object",
                             location)
    is_default = bool(entry.get("default", False))
    return SettingsProfile(
        profile_id=profile_id,
        params=tuple(sorted(params.items())),
        is_default=is_default,
    )


def _parse_turn(entry: Any, location: str, index: int) -> Turn:
    where = f"{location} turns[{index}]"
    if not isinstance(entry, dict):
        raise SuiteLoadError("turn must be an object", where)
    question = _require(entry, "question", str, where)
    gold_query = _require(entry, "gold_query", str, where)
    if not question.strip():
        raise SuiteLoadError("question is empty", where)
    if not gold_query.strip():
        raise SuiteLoadError("gold_query is empty", where)
    paraphrases = entry.get("paraphrases", [])
    if not isinstance(paraphrases, list) or not all(
            isinstance(p, str) for p in paraphrases):
        raise SuiteLoadError("paraphrases must be a list of strings", where)
    order_sensitive = entry.get("order_sensitive", False)
    if not isinstance(order_sensitive, bool):
        raise SuiteLoadError("order_sensitive must be a boolean", where)
    notes = entry.get("notes", "")
    if not isinstance(notes, str):
        raise SuiteLoadError("notes must be a string", where)
    return Turn(question=question, gold_query=gold_query,
                paraphrases=tuple(paraphrases),
                order_sensitive=order_sensitive, notes=notes)


def _parse_case(path: Path, tier_dir: str, known_dbs: Iterable[str]) -> TestCase:
    location = str(path)
    data = _load_json(path)
    case_id = _require(data, "case_id", str, location)
    if case_id != path.stem:
        raise SuiteLoadError(
            f"case_id {case_id!r} does not match file name {path.stem!r}",
            location)
    tier_label = _require(data, "tier", object, location)
    try:
        tier = Level.from_label(tier_label)
    except (ValueError, TypeError) as exc:
        raise SuiteLoadError(f"field 'tier': {exc}", location)
    if tier is Level.NONE:
        raise SuiteLoadError("tier 0 is not a valid case tier", location)
    if tier.roman != tier_dir:
        raise SuiteLoadError(
            f"tier {tier.roman} disagrees with directory {tier_dir!r}", location)
    db_id = _require(data, "db", str, location)
    if db_id not in set(known_dbs):
        raise SuiteLoadError(
            f"case {case_id!r} references unknown database {db_id!r}", location)
    regimes = data.get("consistency_regimes", [])
    if not isinstance(regimes, list):
        raise SuiteLoadError("consistency_regimes must be a list", location)
    for regime in regimes:
        if regime not in ALL_REGIMES:
            raise SuiteLoadError(
                f"unknown consistency regime {regime!r} "
                f"(expected one of {', '.join(ALL_REGIMES)})", location)
    tags = data.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise SuiteLoadError("tags must be a list of strings", location)
    turns_raw = _require(data, "turns", list, location)
    if not turns_raw:
        raise SuiteLoadError(f"case {case_id!r} has no turns", location)
    turns = tuple(_parse_turn(t, location, i) for i, t in enumerate(turns_raw))
    return TestCase(
        case_id=case_id,
        tier=tier,
        db_id=db_id,
        turns=turns,
        consistency_regimes=frozenset(regimes),
        tags=tuple(tags),
    )


def load_suite(path: str | Path) -> TestSuite:
    """Parse and cross-link a suite directory; raises SuiteLoadError with the
    offending file and field on any structural problem."""
    root = Path(path)
    manifest_path = root / "suite.json"
    if not manifest_path.is_file():
        raise SuiteLoadError("suite.json missing", str(root))
    manifest = _load_json(manifest_path)
    location = str(manifest_path)

    suite_id = _require(manifest, "suite_id", str, location)
    if not suite_id:
        raise SuiteLoadError("suite_id is empty", location)
    name = _require(manifest, "name", str, location)
    repeat_count = manifest.get("repeat_count", DEFAULT_REPEAT_COUNT)
    if not isinstance(repeat_count, int) or isinstance(repeat_count, bool) \
            or repeat_count < 1:
        raise SuiteLoadError("repeat_count must be a positive integer", location)

    variants_raw = _require(manifest, "settings_variants", list, location)
    if not variants_raw:
        raise SuiteLoadError("settings_variants is empty", location)
    profiles = [_parse_profile(v, location) for v in variants_raw]
    seen_profiles: set[str] = set()
    for profile in profiles:
        if profile.profile_id in seen_profiles:
            raise SuiteLoadError(
                f"duplicate profile_id {profile.profile_id!r}", location)
        seen_profiles.add(profile.profile_id)
    defaults = [p for p in profiles if p.is_default]
    if len(defaults) > 1:
        raise SuiteLoadError("more than one settings variant marked default",
                             location)
    if not defaults:
        if len(profiles) == 1:
            profiles[0] = SettingsProfile(profiles[0].profile_id,
                                          profiles[0].params, True)
        else:
            raise SuiteLoadError("no settings variant marked default", location)

    databases: dict[str, DatabaseFixture] = {}
    db_root = root / "databases"
    if db_root.is_dir():
        for db_dir in sorted(p for p in db_root.iterdir() if p.is_dir()):
            schema_path = db_dir / "schema.sql"
            data_path = db_dir / "data.sql"
            for required in (schema_path, data_path):
                if not required.is_file():
                    raise SuiteLoadError(f"{required.name} missing", str(db_dir))
            databases[db_dir.name] = DatabaseFixture(
                db_id=db_dir.name,
                schema_script=schema_path.read_text(encoding="utf-8"),
                data_script=data_path.read_text(encoding="utf-8"),
            )

    cases: list[TestCase] = []
    seen_cases: set[str] = set()
    cases_root = root / "cases"
    if cases_root.is_dir():
        for tier_dir in sorted(p for p in cases_root.iterdir() if p.is_dir()):
            for case_path in sorted(tier_dir.glob("*.json")):
                case = _parse_case(case_path, tier_dir.name, databases)
                if case.case_id in seen_cases:
                    raise SuiteLoadError(
                        f"duplicate case_id {case.case_id!r}", str(case_path))
                seen_cases.add(case.case_id)
                cases.append(case)
    if not cases:
        raise SuiteLoadError("suite contains no cases", str(cases_root))
    cases.sort(key=lambda c: (int(c.tier), c.case_id))

    return TestSuite(
        suite_id=suite_id,
        name=name,
        databases=databases,
        cases=tuple(cases),
        settings_variants=tuple(profiles),
        repeat_count=repeat_count,
    )


def provision(db: DatabaseFixture) -> sqlite3.Connection:
    return db.provision()


def validate_suite(suite: TestSuite) -> list[Finding]:
    """Execute every fixture script and gold query; check case shape rules.

    Returns an empty list iff everything passes. Problems come back as data so
    callers can render them all at once.
    """
    findings: list[Finding] = []

    live: dict[str, sqlite3.Connection] = {}
    for db_id, fixture in suite.databases.items():
        try:
            live[db_id] = fixture.provision()
        except ProvisioningError as exc:
            findings.append(Finding(
                kind="fixture-script-failure",
                message=f"statement {exc.statement!r}: {exc.detail}",
                db_id=db_id,
            ))

    if len(suite.settings_variants) < 2 and any(
            c.participates(REGIME_SETTINGS) for c in suite.cases):
        findings.append(Finding(
            kind="settings-profile-shortage",
            message="settings-variation cases need at least two settings "
                    "variants in the suite",
        ))

    for case in suite.cases:
        if case.db_id not in suite.databases:
            findings.append(Finding(
                kind="dangling-db",
                message=f"references unknown database {case.db_id!r}",
                case_id=case.case_id,
            ))
            continue
        if case.tier == Level.III and len(case.turns) < 2 \
                and IMPLICIT_INTENT_TAG not in case.tags:
            findings.append(Finding(
                kind="tier-shape",
                message="tier-III case needs at least two turns or the "
                        f"{IMPLICIT_INTENT_TAG!r} tag",
                case_id=case.case_id,
            ))
        if case.participates(REGIME_LINGUISTIC):
            measured = case.turns[case.measured_turn_index]
            if len(measured.paraphrases) < 2:
                findings.append(Finding(
                    kind="paraphrase-shortage",
                    message="linguistic-variation case needs at least two "
                            "paraphrases on the measured turn",
                    case_id=case.case_id,
                    turn_index=case.measured_turn_index,
                ))
        conn = live.get(case.db_id)
        for index, turn in enumerate(case.turns):
            canon = sqlcheck.canonicalize(turn.gold_query)
            if not canon.ok:
                findings.append(Finding(
                    kind="gold-parse-failure",
                    message=canon.detail or "gold query does not parse",
                    case_id=case.case_id,
                    turn_index=index,
                ))
                continue
            if sqlcheck.has_top_level_order_by(turn.gold_query) \
                    != turn.order_sensitive:
                findings.append(Finding(
                    kind="order-sensitivity-mismatch",
                    message="order_sensitive flag disagrees with the gold "
                            "query's top-level ORDER BY",
                    case_id=case.case_id,
                    turn_index=index,
                ))
            if conn is None:
                continue
            try:
                sqlcheck.execute(conn, canon.canonical)
            except sqlcheck.ExecutionError as exc:
                findings.append(Finding(
                    kind="gold-exec-failure",
                    message=f"{exc.kind}: {exc.detail}",
                    case_id=case.case_id,
                    turn_index=index,
                ))

    for conn in live.values():
        conn.close()
    return findings


def _dump_json(path: Path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")


def write_suite(suite: TestSuite, path: str | Path) -> None:
    """Render a suite back to the directory layout; inverse of load_suite."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    variants = []
    for profile in suite.settings_variants:
        entry: dict[str, Any] = {
            "profile_id": profile.profile_id,
            "params": profile.params_dict(),
        }
        if profile.is_default:
            entry["default"] = True
        variants.append(entry)
    _dump_json(root / "suite.json", {
        "suite_id": suite.suite_id,
        "name": suite.name,
        "repeat_count": suite.repeat_count,
        "settings_variants": variants,
    })

    for db_id, fixture in suite.databases.items():
        db_dir = root / "databases" / db_id
        db_dir.mkdir(parents=True, exist_ok=True)
        (db_dir / "schema.sql").write_text(fixture.schema_script,
                                           encoding="utf-8")
        (db_dir / "data.sql").write_text(fixture.data_script, encoding="utf-8")

    for case in suite.cases:
        case_dir = root / "cases" / case.tier.roman
        case_dir.mkdir(parents=True, exist_ok=True)
        turns = []
        for turn in case.turns:
            turn_entry: dict[str, Any] = {
                "question": turn.question,
                "paraphrases": list(turn.paraphrases),
                "gold_query": turn.gold_query,
                "order_sensitive": turn.order_sensitive,
            }
            if turn.notes:
                turn_entry["notes"] = turn.notes
            turns.append(turn_entry)
        _dump_json(case_dir / f"{case.case_id}.json", {
            "case_id": case.case_id,
            "tier": case.tier.roman,
            "db": case.db_id,
            "consistency_regimes": sorted(case.consistency_regimes),
            "tags": list(case.tags),
            "turns": turns,
        })
