"""Tests for the bundled demo suite, replays, manifests, and descriptors."""

from __future__ import annotations

from pathlib import Path

import pytest

from ttq_harness import sqlcheck
from ttq_harness.adapter import load_descriptor, record_replay
from ttq_harness.fixtures import (
    BROKEN_QUERY,
    SUITE_ID,
    WRONG_QUERY,
    break_cases,
    break_identical_samples,
    break_linguistic_paraphrases,
    build_assets,
    degraded_tier_cases,
    les_demo_suite,
    strip_explanations,
    strip_traces,
)
from ttq_harness.rubric import Level, REGIME_IDENTICAL, REGIME_LINGUISTIC
from ttq_harness.suite import load_suite, provision, validate_suite
from ttq_harness.transparency import load_manifest

EXPECTED_REPLAYS = {
    "golden", "tier1-6of10", "tier1-5of10", "tier4-9of10", "skip-tier2",
    "identical-4of5", "identical-3of5", "linguistic-3of5", "no-trace",
    "no-explanation",
}

EXPECTED_SUTS = {
    "golden-replay", "tier1-6of10", "tier1-5of10", "tier4-9of10",
    "skip-tier2", "identical-4of5", "identical-3of5", "linguistic-3of5",
    "ladder-level1", "ladder-level2", "ladder-level3", "ladder-level4",
    "no-explanation",
}


class TestBundledSuite:
    def test_validator_finds_nothing(self, suite):
        assert validate_suite(suite) == []

    def test_shape(self, suite):
        assert suite.suite_id == SUITE_ID
        assert len(suite.cases) == 28
        assert suite.repeat_count == 5
        assert [p.profile_id for p in suite.settings_variants] \
            == ["baseline", "exploratory"]
        assert set(suite.databases) == {"exercise", "hr", "les", "sales"}

    def test_thirty_turns_for_a_clean_failure_percentage(self, suite):
        # 30 turns divide evenly by 5, so a fail-every-fifth SUT shows an
        # exact 20% failure rate.
        assert sum(len(c.turns) for c in suite.cases) == 30

    def test_two_cases_opt_into_every_regime(self, suite):
        opted = [c.case_id for c in suite.cases if c.consistency_regimes]
        assert opted == ["hr-names-ages", "sales-top-products"]
        for case_id in opted:
            case = suite.case(case_id)
            assert case.participates(REGIME_IDENTICAL)
            assert case.participates(REGIME_LINGUISTIC)
            measured = case.turns[case.measured_turn_index]
            assert len(measured.paraphrases) == 4

    def test_gold_queries_return_rows(self, suite):
        for case in suite.cases:
            conn = provision(suite.database_for(case))
            try:
                for turn in case.turns:
                    fingerprint = sqlcheck.execute(conn, turn.gold_query)
                    assert fingerprint.row_count >= 1, case.case_id
            finally:
                conn.close()


class TestGoldenEntries:
    def test_covers_the_full_request_space(self, suite, golden_entries):
        expected = 0
        for case in suite.cases:
            for turn in case.turns:
                expected += (len(suite.settings_variants)
                             * (len(turn.paraphrases) + 1)
                             * suite.repeat_count)
        assert len(golden_entries) == expected == 380

    def test_every_response_is_fully_transparent(self, golden_entries):
        for response in golden_entries.values():
            assert response["query"]
            assert response["explanation"]
            steps = response["trace"]
            assert len(steps) == 3
            assert steps[-1]["query"] == response["query"]

    def test_responses_echo_the_gold_query(self, suite, golden_entries):
        case = suite.case("hr-names-ages")
        key = (case.case_id, 0, "baseline", 0, 0)
        assert golden_entries[key]["query"] == case.turns[0].gold_query


class TestDegradationHelpers:
    def test_strip_traces_only_removes_traces(self, golden_entries):
        stripped = strip_traces(golden_entries)
        assert set(stripped) == set(golden_entries)
        for key, response in stripped.items():
            assert "trace" not in response
            assert response["explanation"] \
                == golden_entries[key]["explanation"]

    def test_strip_explanations_only_removes_explanations(self,
                                                          golden_entries):
        stripped = strip_explanations(golden_entries)
        for key, response in stripped.items():
            assert "explanation" not in response
            assert response["trace"] == golden_entries[key]["trace"]

    def test_break_cases_replaces_every_entry_of_named_cases(
            self, golden_entries):
        broken = break_cases(golden_entries, ["hr-youngest"])
        for key, response in broken.items():
            if key[0] == "hr-youngest":
                assert response["query"] == WRONG_QUERY
            else:
                assert response == golden_entries[key]

    def test_degraded_tier_cases_spares_consistency_cases(self, suite):
        picked = degraded_tier_cases(suite, Level.I, 4)
        assert len(picked) == 4
        assert picked == sorted(picked)
        assert "hr-names-ages" not in picked
        assert degraded_tier_cases(suite, Level.I, 4) == picked

    def test_degraded_tier_cases_bounded_by_eligible_pool(self, suite):
        # 10 tier-I cases minus the consistency case leaves 9 to break.
        assert len(degraded_tier_cases(suite, Level.I, 9)) == 9
        with pytest.raises(ValueError, match="only 9"):
            degraded_tier_cases(suite, Level.I, 10)

    def test_break_identical_samples_never_touches_sample_zero(
            self, suite, golden_entries):
        broken = break_identical_samples(suite, golden_entries, 2)
        changed = {key for key in broken
                   if broken[key] != golden_entries[key]}
        assert changed == {
            ("hr-names-ages", 0, "baseline", 0, 4),
            ("hr-names-ages", 0, "baseline", 0, 3),
            ("sales-top-products", 0, "baseline", 0, 4),
            ("sales-top-products", 0, "baseline", 0, 3),
        }
        for key in changed:
            assert broken[key]["query"] == BROKEN_QUERY
        with pytest.raises(ValueError, match="sample 0"):
            break_identical_samples(suite, golden_entries, 5)

    def test_break_linguistic_paraphrases_spares_the_canonical(
            self, suite, golden_entries):
        broken = break_linguistic_paraphrases(suite, golden_entries, 2)
        changed = {key for key in broken
                   if broken[key] != golden_entries[key]}
        assert changed == {
            ("hr-names-ages", 0, "baseline", 4, 0),
            ("hr-names-ages", 0, "baseline", 3, 0),
            ("sales-top-products", 0, "baseline", 4, 0),
            ("sales-top-products", 0, "baseline", 3, 0),
        }
        with pytest.raises(ValueError, match="canonical"):
            break_linguistic_paraphrases(suite, golden_entries, 5)

    def test_wrong_query_executes_but_broken_does_not_parse(self, suite):
        conn = provision(suite.databases["hr"])
        try:
            fingerprint = sqlcheck.execute(conn, WRONG_QUERY)
            assert fingerprint.row_count == 1
        finally:
            conn.close()
        assert sqlcheck.canonicalize(BROKEN_QUERY).status == "parse-error"


class TestBuildAssets:
    def test_layout_is_complete(self, assets_root):
        replays = {p.stem for p in (assets_root / "replays").glob("*.jsonl")}
        suts = {p.stem for p in (assets_root / "suts").glob("*.json")}
        manifests = {p.parent.name for p in
                     (assets_root / "manifests").glob("*/manifest.json")}
        assert replays == EXPECTED_REPLAYS
        assert suts == EXPECTED_SUTS
        assert manifests == {"full", "no-ethics", "basic"}

    def test_suite_round_trips_from_disk(self, assets_root):
        loaded = load_suite(assets_root / "suites" / SUITE_ID)
        assert loaded == les_demo_suite()

    def test_replays_parse_and_golden_matches_builder(self, assets_root,
                                                      golden_entries):
        for path in (assets_root / "replays").glob("*.jsonl"):
            adapter = record_replay(path)
            assert len(adapter) == 380, path.name
        golden = record_replay(assets_root / "replays/golden.jsonl")
        assert golden._entries == golden_entries

    def test_descriptors_resolve_to_real_files(self, assets_root):
        for path in (assets_root / "suts").glob("*.json"):
            descriptor = load_descriptor(path)
            assert descriptor.kind == "replay"
            assert (assets_root / "replays"
                    / descriptor.replay_path.split("/")[-1]).is_file()
            load_manifest(descriptor.manifest_path)

    def test_builds_are_reproducible(self, assets_root, tmp_path):
        rebuilt = tmp_path / "again"
        build_assets(rebuilt)
        for relative in (
            f"suites/{SUITE_ID}/suite.json",
            "replays/golden.jsonl",
            "replays/identical-3of5.jsonl",
            "manifests/full/manifest.json",
            "suts/golden-replay.json",
        ):
            assert (rebuilt / relative).read_bytes() \
                == (assets_root / relative).read_bytes(), relative

    def test_checked_in_assets_match_the_builders(self, assets_root):
        # The repository copies must never drift from the code that
        # generates them.
        repo_root = Path(__file__).resolve().parent.parent
        for relative in (
            f"suites/{SUITE_ID}/suite.json",
            "replays/golden.jsonl",
            "manifests/full/manifest.json",
            "suts/golden-replay.json",
        ):
            assert (repo_root / relative).read_bytes() \
                == (assets_root / relative).read_bytes(), relative
