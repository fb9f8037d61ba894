"""Video-based shoulder range-of-motion diagnosis workbench.

Reproduces the frame-baseline, single-call video, and two-stage
describe-then-judge diagnosis pipelines over pluggable model backends, plus
the full evaluation apparatus: rubric grading with blind dual rating,
three-scenario constrained relabeling, bootstrapped classification metrics,
and the usability index.
"""

from .errors import RomdxError
from .evaluation import (
    ConfusionMatrix,
    EvalConfig,
    bootstrap_ci,
    build_confusion,
    compute_metrics,
    effective_prediction,
    rule_oracle,
    usability_block,
    usability_index,
)
from .gateway import (
    BackendConfig,
    DefectProfile,
    ModelGateway,
    SyntheticCaseSpec,
    generate_synthetic_corpus,
)
from .grading import AdjudicatedGrade, GradingRecord, GradingStore
from .ingest import (
    CaseRecord,
    CaseSet,
    check_privacy_gate,
    ingest_manifest,
    plan_preprocess,
    sample_frames,
)
from .ladder import LADDER, Landmark
from .pipelines import (
    CaseResult,
    DiagnosisOutput,
    parse_output,
    run_baseline,
    run_dvdx,
    run_hmvdx,
)
from .prompts import (
    PromptKind,
    PromptText,
    RuleSet,
    default_rule_set,
    lint_prompt,
    load_rule_set,
    render_prompt,
)

__version__ = "0.1.0"

__all__ = [
    "AdjudicatedGrade",
    "BackendConfig",
    "CaseRecord",
    "CaseResult",
    "CaseSet",
    "ConfusionMatrix",
    "DefectProfile",
    "DiagnosisOutput",
    "EvalConfig",
    "GradingRecord",
    "GradingStore",
    "LADDER",
    "Landmark",
    "ModelGateway",
    "PromptKind",
    "PromptText",
    "RomdxError",
    "RuleSet",
    "SyntheticCaseSpec",
    "bootstrap_ci",
    "build_confusion",
    "check_privacy_gate",
    "compute_metrics",
    "default_rule_set",
    "effective_prediction",
    "generate_synthetic_corpus",
    "ingest_manifest",
    "lint_prompt",
    "load_rule_set",
    "parse_output",
    "plan_preprocess",
    "render_prompt",
    "rule_oracle",
    "run_baseline",
    "run_dvdx",
    "run_hmvdx",
    "sample_frames",
    "usability_block",
    "usability_index",
]
