"""Command-line entry point.

Subcommands:

    assess          run every requested category and write the report
    accuracy        accuracy category only
    consistency     consistency category only
    transparency    transparency audit (runs a generation pass for records)
    validate-suite  structural and gold-query checks on a suite directory
    render          re-render a stored JSON report

Exit status: 0 on successful evaluation regardless of achieved level, 1 on
usage or configuration errors, 2 on harness-internal failure, 3 only when a
--min-level gate is requested and not met. Every flag has a config-file
equivalent (JSON, same spelling with underscores); flags win over the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
import time
import uuid
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import __version__
from .accuracy import evaluate_accuracy_category, evaluate_tier
from .adapter import AdapterError, build_adapter, load_descriptor
from .consistency import evaluate_consistency_category
from .report import (
    FORMAT_JSON,
    FORMAT_MARKDOWN,
    FORMATS,
    RunContext,
    build_report,
    from_json,
    render,
)
from .rubric import (
    Category,
    EvaluationError,
    Level,
    RUBRIC_LEVELS,
    default_rubric,
)
from .sqlcheck import SqlCheckError
from .suite import SuiteLoadError, load_suite, validate_suite
from .transparency import (
    LoggingSut,
    ManifestError,
    RunLog,
    TransparencyManifest,
    audit,
    load_manifest,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INTERNAL = 2
EXIT_GATE = 3

# 2000-01-01T00:00:00Z; deterministic runs timestamp everything with this.
FIXED_CLOCK_EPOCH = 946684800.0

ALL_CATEGORIES = ("accuracy", "consistency", "transparency")

log = logging.getLogger("ttq")


class UsageError(Exception):
    pass


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"config file {path}: {exc}")
    if not isinstance(data, dict):
        raise UsageError(f"config file {path}: must be a JSON object")
    return data


def _parse_formats(value: Any) -> list[str]:
    if value is None:
        return [FORMAT_JSON]
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
    elif isinstance(value, list):
        parts = [str(p) for p in value]
    else:
        raise UsageError("formats must be a comma list or array")
    for part in parts:
        if part not in FORMATS:
            raise UsageError(f"unknown report format {part!r} "
                             f"(expected one of {', '.join(FORMATS)})")
    return parts or [FORMAT_JSON]


def _parse_categories(value: Any) -> list[str]:
    if value is None:
        return list(ALL_CATEGORIES)
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
    elif isinstance(value, list):
        parts = [str(p) for p in value]
    else:
        raise UsageError("categories must be a comma list or array")
    for part in parts:
        if part not in ALL_CATEGORIES:
            raise UsageError(f"unknown category {part!r}")
    if not parts:
        raise UsageError("category list is empty")
    return parts


def _parse_min_levels(value: Any) -> dict[str, Level]:
    """Accept CLI ["accuracy=3", ...] or config {"accuracy": 3}."""
    gates: dict[str, Level] = {}
    if value is None:
        return gates
    if isinstance(value, Mapping):
        items = list(value.items())
    else:
        items = []
        for item in value:
            if "=" not in str(item):
                raise UsageError(
                    f"--min-level expects category=LEVEL, got {item!r}")
            name, _, level = str(item).partition("=")
            items.append((name.strip(), level.strip()))
    for name, level in items:
        if name not in ALL_CATEGORIES:
            raise UsageError(f"unknown category in min-level gate: {name!r}")
        try:
            gates[name] = Level.from_label(level)
        except (EvaluationError, ValueError, TypeError):
            raise UsageError(f"bad level in min-level gate: {level!r}")
    return gates


def _parse_overrides(value: Any) -> dict:
    if value is None:
        return {}
    if isinstance(value, Mapping):
        return dict(value)
    text = str(value).strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad rubric override JSON: {exc}")
    try:
        return json.loads(Path(text).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"rubric override file {text}: {exc}")


@dataclasses.dataclass
class Settings:
    """Merged command-line and config-file options for an evaluation run."""

    suite: str
    sut: str
    out: str | None
    formats: list[str]
    categories: list[str]
    concurrency: int
    seed: int | None
    fixed_clock: bool
    repeat_count: int | None
    rubric_overrides: dict
    min_levels: dict[str, Level]
    log_path: str | None


def _merge_settings(args: argparse.Namespace,
                    categories: list[str] | None) -> Settings:
    config = _load_config_file(getattr(args, "config", None))

    def pick(flag_name: str, config_key: str, default: Any = None) -> Any:
        flag_value = getattr(args, flag_name, None)
        if flag_value is not None:
            return flag_value
        return config.get(config_key, default)

    suite = pick("suite", "suite")
    sut = pick("sut", "sut")
    if not suite:
        raise UsageError("a suite path is required (--suite or config)")
    if not sut:
        raise UsageError("a SUT descriptor is required (--sut or config)")
    if categories is None:
        categories = _parse_categories(pick("categories", "categories"))
    concurrency = int(pick("concurrency", "concurrency", 1))
    if concurrency < 1:
        raise UsageError("concurrency must be >= 1")
    repeat_count = pick("repeat_count", "repeat_count")
    fixed_clock = bool(getattr(args, "fixed_clock", False)
                       or config.get("fixed_clock", False))
    return Settings(
        suite=str(suite),
        sut=str(sut),
        out=pick("out", "out"),
        formats=_parse_formats(pick("formats", "formats")),
        categories=categories,
        concurrency=concurrency,
        seed=(None if pick("seed", "seed") is None
              else int(pick("seed", "seed"))),
        fixed_clock=fixed_clock,
        repeat_count=None if repeat_count is None else int(repeat_count),
        rubric_overrides=_parse_overrides(
            pick("rubric_override", "rubric_overrides")),
        min_levels=_parse_min_levels(
            getattr(args, "min_level", None) or config.get("min_level")),
        log_path=pick("log", "log"),
    )


def _markdown_path(out: Path) -> Path:
    if out.suffix == ".json":
        return out.with_suffix(".md")
    return out.with_name(out.name + ".md")


def _run_assessment(settings: Settings) -> int:
    suite = load_suite(settings.suite)
    if settings.repeat_count is not None:
        if settings.repeat_count < 1:
            raise UsageError("repeat_count must be >= 1")
        suite = dataclasses.replace(suite,
                                    repeat_count=settings.repeat_count)
    rubric = default_rubric().with_overrides(settings.rubric_overrides)
    descriptor = load_descriptor(settings.sut)

    clock = (lambda: FIXED_CLOCK_EPOCH) if settings.fixed_clock else time.time
    session_id = ("session-fixed" if settings.fixed_clock
                  else f"session-{uuid.uuid4().hex[:12]}")

    adapter = build_adapter(descriptor)
    run_log = RunLog(session_id, clock=clock, path=settings.log_path)
    sut = LoggingSut(adapter, run_log)
    started = clock()
    log.info("loaded suite %s (%d cases); evaluating: %s",
             suite.suite_id, len(suite.cases), ", ".join(settings.categories))

    accuracy_eval = consistency_eval = transparency_eval = None
    try:
        if "accuracy" in settings.categories:
            accuracy_eval = evaluate_accuracy_category(
                suite, sut, rubric, settings.concurrency)
            log.info("accuracy level: %s", accuracy_eval.assigned.roman)
        if "consistency" in settings.categories:
            consistency_eval = evaluate_consistency_category(
                suite, sut, rubric, settings.concurrency)
            log.info("consistency level: %s", consistency_eval.assigned.roman)
        if "transparency" in settings.categories:
            if not sut.records:
                # Nothing has exercised the SUT yet; drive one accuracy-style
                # pass so the audit has records and log entries to inspect.
                profile = suite.default_profile()
                for tier in RUBRIC_LEVELS:
                    evaluate_tier(suite, sut, tier, profile,
                                  settings.concurrency)
            if descriptor.manifest_path:
                manifest = load_manifest(descriptor.manifest_path)
            else:
                manifest = TransparencyManifest()
            transparency_eval = audit(sut.records, run_log, manifest, rubric)
            log.info("transparency level: %s",
                     transparency_eval.assigned.roman)
    finally:
        sut.close()
        run_log.close()

    records = sut.records
    context = RunContext(
        suite_id=suite.suite_id,
        sut_summary=descriptor.to_dict(),
        rubric=rubric,
        harness_version=__version__,
        started_at=started,
        finished_at=clock(),
        concurrency=settings.concurrency,
        seed=settings.seed,
        fixed_clock=settings.fixed_clock,
        failed_generations=sum(1 for r in records if r.failed),
        total_generations=len(records),
    )
    report = build_report(accuracy_eval, consistency_eval, transparency_eval,
                          context)

    rendered_json = render(report, FORMAT_JSON)
    if settings.out:
        out_path = Path(settings.out)
        if FORMAT_JSON in settings.formats:
            _atomic_write(out_path, rendered_json)
            log.info("wrote %s", out_path)
        if FORMAT_MARKDOWN in settings.formats:
            md_path = _markdown_path(out_path)
            _atomic_write(md_path, render(report, FORMAT_MARKDOWN))
            log.info("wrote %s", md_path)
    else:
        if FORMAT_MARKDOWN in settings.formats \
                and FORMAT_JSON not in settings.formats:
            sys.stdout.write(render(report, FORMAT_MARKDOWN))
        else:
            sys.stdout.write(rendered_json)

    for name, minimum in sorted(settings.min_levels.items()):
        assigned = report.assigned_level(name)
        if assigned is None or assigned < minimum:
            reached = assigned.roman if assigned is not None else "none"
            log.error("gate not met: %s level %s < required %s",
                      name, reached, minimum.roman)
            return EXIT_GATE
    return EXIT_OK


def _run_validate(args: argparse.Namespace) -> int:
    config = _load_config_file(getattr(args, "config", None))
    suite_path = getattr(args, "suite", None) or config.get("suite")
    if not suite_path:
        raise UsageError("a suite path is required (--suite or config)")
    suite = load_suite(suite_path)
    findings = validate_suite(suite)
    for finding in findings:
        where = finding.case_id or finding.db_id or suite.suite_id
        turn = (f" turn {finding.turn_index}"
                if finding.turn_index is not None else "")
        print(f"{finding.kind}: {where}{turn}: {finding.message}")
    print(f"{len(findings)} findings")
    return EXIT_OK if not findings else EXIT_USAGE


def _run_render(args: argparse.Namespace) -> int:
    try:
        text = Path(args.report).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(str(exc))
    try:
        report = from_json(text)
    except (json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"{args.report}: not a report file: {exc}")
    try:
        rendered = render(report, args.format)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.out:
        _atomic_write(Path(args.out), rendered)
    else:
        sys.stdout.write(rendered)
    return EXIT_OK


def _add_eval_flags(parser: argparse.ArgumentParser,
                    with_categories: bool) -> None:
    parser.add_argument("--suite", help="suite directory")
    parser.add_argument("--sut", help="SUT descriptor JSON file")
    parser.add_argument("--out", help="report output path (JSON)")
    parser.add_argument("--format", dest="formats",
                        help="comma list of report formats: json,markdown")
    if with_categories:
        parser.add_argument("--categories",
                            help="comma list of categories to evaluate")
    parser.add_argument("--config", help="JSON config file with flag defaults")
    parser.add_argument("--concurrency", type=int, default=None,
                        help="worker pool size (default 1)")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed recorded in run metadata")
    parser.add_argument("--fixed-clock", action="store_true", default=False,
                        help="use a constant clock for byte-stable reports")
    parser.add_argument("--repeat-count", type=int, default=None,
                        help="override the suite's identical-regime k")
    parser.add_argument("--rubric-override", default=None,
                        help="JSON object or file with threshold overrides")
    parser.add_argument("--min-level", action="append", default=None,
                        metavar="CATEGORY=LEVEL",
                        help="fail with exit 3 if the category lands below "
                             "LEVEL (repeatable)")
    parser.add_argument("--log", default=None,
                        help="write the run log (JSON lines) to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttq",
        description="Grade a text-to-query system against the maturity model.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text, categories in (
        ("assess", "run the requested categories and write a report", None),
        ("accuracy", "accuracy category only", ["accuracy"]),
        ("consistency", "consistency category only", ["consistency"]),
        ("transparency", "transparency audit only", ["transparency"]),
    ):
        cmd = sub.add_parser(name, help=help_text)
        _add_eval_flags(cmd, with_categories=categories is None)
        cmd.set_defaults(fixed_categories=categories)

    validate = sub.add_parser("validate-suite",
                              help="check a suite directory and print findings")
    validate.add_argument("--suite", help="suite directory")
    validate.add_argument("--config",
                          help="JSON config file with flag defaults")

    rerender = sub.add_parser("render", help="re-render a stored JSON report")
    rerender.add_argument("--report", required=True,
                          help="stored JSON report path")
    rerender.add_argument("--format", default=FORMAT_MARKDOWN,
                          help="output format: json or markdown")
    rerender.add_argument("--out", default=None, help="output path")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; keep 0 for --help/--version.
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        if args.command == "validate-suite":
            return _run_validate(args)
        if args.command == "render":
            return _run_render(args)
        settings = _merge_settings(args, getattr(args, "fixed_categories",
                                                 None))
        return _run_assessment(settings)
    except (UsageError, SuiteLoadError, AdapterError, ManifestError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (EvaluationError, SqlCheckError) as exc:
        log.error("internal failure: %s", exc)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        log.exception("unexpected failure: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
