"""Batch assessment harness grading text-to-query systems against a
three-category maturity model (accuracy, consistency, transparency)."""

__version__ = "0.1.0"

from .rubric import (
    Category,
    CategoryEvaluation,
    CriterionResult,
    CriterionSpec,
    CriterionStatus,
    EvaluationError,
    Level,
    MaturityRubric,
    StabilityRequirement,
    Threshold,
    assign_level,
    default_rubric,
    meets,
)
from .suite import (
    DatabaseFixture,
    Finding,
    ProvisioningError,
    SettingsProfile,
    SuiteLoadError,
    TestCase,
    TestSuite,
    Turn,
    load_suite,
    provision,
    validate_suite,
    write_suite,
)
from .sqlcheck import (
    CanonicalQuery,
    EquivalenceVerdict,
    ExecutionError,
    ResultFingerprint,
    SqlCheckError,
    VerdictStatus,
    canonicalize,
    equivalent,
    execute,
)
from .adapter import (
    AdapterError,
    GenerationRecord,
    GenerationRequest,
    SutDescriptor,
    TraceStep,
    build_adapter,
    generate,
    load_descriptor,
    record_replay,
    write_replay,
)
from .accuracy import TierResult, TurnOutcome, evaluate_accuracy_category, evaluate_tier
from .consistency import (
    StabilityGroup,
    VariantOutcome,
    evaluate_consistency_category,
    run_regime,
    stability_score,
)
from .transparency import (
    LoggingSut,
    LogEntry,
    RunLog,
    TransparencyManifest,
    audit,
    load_manifest,
    load_runlog,
)
from .report import AssessmentReport, RunContext, build_report, render
from .fixtures import build_assets, golden_replay_entries, les_demo_suite

__all__ = [name for name in dir() if not name.startswith("_")]
