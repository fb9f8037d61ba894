"""Rule oracle, scenario relabeling, classification metrics, usability scoring.

The three scenarios progressively constrain which model outputs count as
effective predictions before standard classification metrics are computed:

  S1  bottom line: the final verdict alone.
  S2  logical: the final verdict counts only when the movement judgment was
      completely rational; otherwise the prediction is forced to 0.
  S3  full link: additionally requires complete movement recognition.

Confidence intervals are nonparametric percentile bootstraps over cases,
seeded for bit-reproducibility.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .errors import (
    CardinalityMismatch,
    EmptyMatrix,
    EmptySample,
    IncompleteInputs,
    MissingGrade,
    MissingTruth,
)
from .ladder import UNREACHABLE, asymmetry_steps

if TYPE_CHECKING:
    from .gateway import SyntheticCaseSpec
    from .grading import AdjudicatedGrade
    from .prompts import RuleSet

SCENARIOS = ("S1", "S2", "S3")
FRAMEWORK_ORDER = ("baseline", "dvdx", "hmvdx")
METRIC_ORDER = ("accuracy", "f1", "precision", "recall")

#: Movements a synthetic subject performs; the oracle checks each of them.
_SCREENING_MOVEMENTS = ("forward_elevation", "hands_on_head", "hand_behind_back")


@dataclass(frozen=True)
class EvalConfig:
    w_d: float = 0.5
    w_r: float = 0.3
    w_a: float = 0.2
    bootstrap_b: int = 10000
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if abs(self.w_d + self.w_r + self.w_a - 1.0) > 1e-9:
            raise ValueError("usability weights must sum to 1")
        if self.bootstrap_b < 1:
            raise ValueError("bootstrap_b must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")


# --- rule oracle -----------------------------------------------------------------


def rule_oracle(spec: "SyntheticCaseSpec", rules: "RuleSet") -> str:
    """Ground-truth label for a synthetic case, straight from the rule set.

    Abnormal when any screening movement's reach sits at or below its limited
    threshold, any reach is flat-out unachievable, or a bilaterally compared
    movement shows at least one ladder step of asymmetry.
    """
    for kind in _SCREENING_MOVEMENTS:
        rule = rules.rule_for(kind)
        left = spec.reach(kind, "left")
        right = spec.reach(kind, "right")
        for reach in (left, right):
            if reach == UNREACHABLE:
                return "abnormal"
            if reach.is_at_or_below(rule.limited_if_at_or_below):
                return "abnormal"
        if rule.bilateral_compare and asymmetry_steps(left, right) >= 1:
            return "abnormal"
    return "normal"


# --- scenario relabeling ---------------------------------------------------------

INVALID = "invalid"


@dataclass(frozen=True)
class EffectivePrediction:
    case_id: str
    framework: str
    scenario: str
    value: int | str   # 1, 0, or "invalid" (S1 only)


def effective_prediction(scenario: str, final: str, grade: "AdjudicatedGrade") -> EffectivePrediction:
    """Apply one scenario's constraint rule to a model's final verdict."""
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    if final not in ("positive", "negative", "invalid"):
        raise ValueError(f"bad final verdict {final!r}")
    if grade is None:
        raise MissingGrade("effective_prediction requires an adjudicated grade")
    if scenario == "S1":
        value: int | str = {"positive": 1, "negative": 0, "invalid": INVALID}[final]
    elif scenario == "S2":
        value = {"positive": 1, "negative": 0, "invalid": 0}[final] if grade.r == 1 else 0
    else:
        passes = grade.a == 1 and grade.r == 1
        value = {"positive": 1, "negative": 0, "invalid": 0}[final] if passes else 0
    return EffectivePrediction(
        case_id=grade.case_id, framework=grade.framework, scenario=scenario, value=value
    )


# --- confusion matrix and metrics ----------------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    invalid_pos: int = 0
    invalid_neg: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn + self.invalid_pos + self.invalid_neg


def build_confusion(
    preds: Sequence[EffectivePrediction | int | str], truths: Sequence[str]
) -> ConfusionMatrix:
    """Count predictions against truth labels; invalids get their own cells."""
    if len(preds) != len(truths):
        raise CardinalityMismatch(f"{len(preds)} predictions vs {len(truths)} truths")
    counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0, "invalid_pos": 0, "invalid_neg": 0}
    for pred, truth in zip(preds, truths):
        value = pred.value if isinstance(pred, EffectivePrediction) else pred
        positive = truth == "abnormal"
        if value == INVALID:
            counts["invalid_pos" if positive else "invalid_neg"] += 1
        elif value == 1:
            counts["tp" if positive else "fp"] += 1
        elif value == 0:
            counts["fn" if positive else "tn"] += 1
        else:
            raise ValueError(f"bad prediction value {value!r}")
    return ConfusionMatrix(**counts)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def compute_metrics(cm: ConfusionMatrix) -> dict[str, float]:
    """Accuracy, precision, recall, F1 with explicit zero-division conventions.

    Invalid outcomes stay in the accuracy and recall denominators (a case the
    model could not decide is never a correct one) but never in a numerator.
    """
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no cases")
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) else 0.0
    recall_den = cm.tp + cm.fn + cm.invalid_pos
    recall = cm.tp / recall_den if recall_den else 0.0
    return {
        "accuracy": (cm.tp + cm.tn) / cm.total,
        "precision": precision,
        "recall": recall,
        "f1": f1_score(precision, recall),
    }


# --- bootstrap ------------------------------------------------------------------------


def derive_seed(base: int, *tokens) -> int:
    """Stable sub-stream seed for (base, tokens); hash-based, platform independent."""
    text = "|".join([str(base), *(str(token) for token in tokens)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def bootstrap_ci(
    sample: Sequence[float],
    b: int = 10000,
    alpha: float = 0.05,
    seed: int = 0,
    statistic=None,
) -> tuple[float, float]:
    """Percentile bootstrap interval for a statistic of the sample (default: mean).

    Cases are resampled with replacement b times; the empirical alpha/2 and
    1 - alpha/2 quantiles of the replicate statistics form the interval.
    """
    values = np.asarray(sample, dtype=float)
    if values.size == 0:
        raise EmptySample("bootstrap_ci requires a non-empty sample")
    if b < 1:
        raise ValueError("b must be >= 1")
    rng = np.random.default_rng(seed)
    indices = rng.integers(0, values.size, size=(b, values.size))
    if statistic is None:
        stats = values[indices].mean(axis=1)
    else:
        stats = np.array([statistic(values[row]) for row in indices])
    lo, hi = np.quantile(stats, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(lo), float(hi)


# prediction/truth cell codes for the vectorized metric bootstrap
_CELL_TP, _CELL_FP, _CELL_FN, _CELL_TN, _CELL_IP, _CELL_IN = range(6)


def _cell_codes(preds: Sequence[EffectivePrediction | int | str], truths: Sequence[str]) -> np.ndarray:
    codes = []
    for pred, truth in zip(preds, truths):
        value = pred.value if isinstance(pred, EffectivePrediction) else pred
        positive = truth == "abnormal"
        if value == INVALID:
            codes.append(_CELL_IP if positive else _CELL_IN)
        elif value == 1:
            codes.append(_CELL_TP if positive else _CELL_FP)
        else:
            codes.append(_CELL_FN if positive else _CELL_TN)
    return np.asarray(codes, dtype=np.int8)


def _metrics_from_counts(counts: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorized metric computation; counts has shape (..., 6)."""
    tp = counts[..., _CELL_TP].astype(float)
    fp = counts[..., _CELL_FP].astype(float)
    fn = counts[..., _CELL_FN].astype(float)
    tn = counts[..., _CELL_TN].astype(float)
    ip = counts[..., _CELL_IP].astype(float)
    total = counts.sum(axis=-1).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
        recall = np.where(tp + fn + ip > 0, tp / np.maximum(tp + fn + ip, 1), 0.0)
        f1 = np.where(precision + recall > 0, 2 * precision * recall / np.maximum(precision + recall, 1e-300), 0.0)
        accuracy = (tp + tn) / total
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1}


def bootstrap_metric_cis(
    preds: Sequence[EffectivePrediction | int | str],
    truths: Sequence[str],
    b: int = 10000,
    alpha: float = 0.05,
    seed: int = 0,
) -> dict[str, tuple[float, float]]:
    """One case-level bootstrap shared by all four metrics."""
    if len(preds) != len(truths):
        raise CardinalityMismatch(f"{len(preds)} predictions vs {len(truths)} truths")
    codes = _cell_codes(preds, truths)
    if codes.size == 0:
        raise EmptySample("bootstrap requires at least one case")
    rng = np.random.default_rng(seed)
    n = codes.size
    counts = np.zeros((b, 6), dtype=np.int64)
    # resample in chunks to bound memory at large b
    chunk = max(1, min(b, 2_000_000 // max(n, 1)))
    row = 0
    while row < b:
        rows = min(chunk, b - row)
        idx = rng.integers(0, n, size=(rows, n))
        resampled = codes[idx]
        for cell in range(6):
            counts[row : row + rows, cell] = (resampled == cell).sum(axis=1)
        row += rows
    stats = _metrics_from_counts(counts)
    out = {}
    for metric, values in stats.items():
        lo, hi = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0])
        out[metric] = (float(lo), float(hi))
    return out


@dataclass(frozen=True)
class MetricBlock:
    """Mean and bootstrap interval for each classification metric."""

    accuracy: tuple[float, float, float]
    precision: tuple[float, float, float]
    recall: tuple[float, float, float]
    f1: tuple[float, float, float]

    def __post_init__(self) -> None:
        for name in ("accuracy", "precision", "recall", "f1"):
            _, lo, hi = getattr(self, name)
            assert lo <= hi, f"{name}: ci_lo {lo} > ci_hi {hi}"

    def value(self, metric: str) -> tuple[float, float, float]:
        return getattr(self, metric if metric != "f1-score" else "f1")


def metric_block(
    preds: Sequence[EffectivePrediction | int | str],
    truths: Sequence[str],
    cfg: EvalConfig,
    seed: int | None = None,
) -> MetricBlock:
    means = compute_metrics(build_confusion(preds, truths))
    cis = bootstrap_metric_cis(
        preds, truths, b=cfg.bootstrap_b, alpha=cfg.alpha,
        seed=cfg.seed if seed is None else seed,
    )
    return MetricBlock(
        accuracy=(means["accuracy"], *cis["accuracy"]),
        precision=(means["precision"], *cis["precision"]),
        recall=(means["recall"], *cis["recall"]),
        f1=(means["f1"], *cis["f1"]),
    )


# --- usability index ----------------------------------------------------------------------


def usability_index(grade: "AdjudicatedGrade", cfg: EvalConfig | None = None) -> float:
    """Weighted combination of final-judgment, rationality, and recognition scores."""
    cfg = cfg or EvalConfig()
    return cfg.w_d * grade.d + cfg.w_r * grade.r + cfg.w_a * grade.a


@dataclass(frozen=True)
class UsabilityBlock:
    normal: tuple[float, float, float]
    abnormal: tuple[float, float, float]
    overall: tuple[float, float, float]

    def value(self, dimension: str) -> tuple[float, float, float]:
        return getattr(self, dimension)


def usability_block(
    grades: Sequence["AdjudicatedGrade"],
    truths: dict[str, str],
    cfg: EvalConfig | None = None,
) -> UsabilityBlock:
    """Per-class and overall usability means with bootstrap intervals."""
    cfg = cfg or EvalConfig()
    scores: dict[str, list[float]] = {"normal": [], "abnormal": [], "overall": []}
    for grade in grades:
        if grade.case_id not in truths:
            raise MissingTruth(f"no truth label for case {grade.case_id}")
        score = usability_index(grade, cfg)
        scores[truths[grade.case_id]].append(score)
        scores["overall"].append(score)
    blocks = {}
    for dimension in ("normal", "abnormal", "overall"):
        values = scores[dimension]
        if not values:
            blocks[dimension] = (float("nan"), float("nan"), float("nan"))
            continue
        mean = float(np.mean(values))
        lo, hi = bootstrap_ci(
            values, b=cfg.bootstrap_b, alpha=cfg.alpha,
            seed=derive_seed(cfg.seed, "usability", dimension),
        )
        blocks[dimension] = (mean, lo, hi)
    return UsabilityBlock(**blocks)


# --- report -----------------------------------------------------------------------------------


def format_3dp(value: float) -> str:
    """Half-up rounding to three decimals, as in the reported tables."""
    if value != value:  # NaN
        return "nan"
    return str(Decimal(repr(value)).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class EvalReport:
    metric_rows: tuple[tuple[str, str, str, float, float, float], ...]
    usability_rows: tuple[tuple[str, str, float, float, float], ...]


def _framework_sort_key(framework: str):
    try:
        return (0, FRAMEWORK_ORDER.index(framework))
    except ValueError:
        return (1, framework)


def evaluate(
    finals: dict[tuple[str, str], str],
    grades: dict[tuple[str, str], "AdjudicatedGrade"],
    truths: dict[str, str],
    cfg: EvalConfig | None = None,
    scenarios: Iterable[str] = SCENARIOS,
) -> EvalReport:
    """Produce every metric and usability row for the graded results.

    `finals` maps (framework, case_id) to the parsed final verdict; `grades`
    must cover every key of `finals`.
    """
    cfg = cfg or EvalConfig()
    if not finals:
        raise IncompleteInputs("no case results to evaluate")
    if not grades:
        raise IncompleteInputs("no grades to evaluate")
    ungraded = sorted(key for key in finals if key not in grades)
    if ungraded:
        names = ", ".join(f"{fw}:{cid}" for fw, cid in ungraded[:20])
        raise MissingGrade(f"{len(ungraded)} ungraded case(s): {names}")
    frameworks = sorted({fw for fw, _ in finals}, key=_framework_sort_key)
    metric_rows = []
    usability_rows = []
    for framework in frameworks:
        keys = sorted(case_id for fw, case_id in finals if fw == framework)
        for case_id in keys:
            if case_id not in truths:
                raise MissingTruth(f"no truth label for case {case_id}")
        for scenario in scenarios:
            preds = [
                effective_prediction(scenario, finals[(framework, cid)], grades[(framework, cid)])
                for cid in keys
            ]
            block = metric_block(
                preds, [truths[cid] for cid in keys], cfg,
                seed=derive_seed(cfg.seed, "metrics", framework, scenario),
            )
            for metric in METRIC_ORDER:
                mean, lo, hi = block.value(metric)
                metric_rows.append((scenario, framework, metric, mean, lo, hi))
        ublock = usability_block(
            [grades[(framework, cid)] for cid in keys], truths,
            EvalConfig(
                w_d=cfg.w_d, w_r=cfg.w_r, w_a=cfg.w_a, bootstrap_b=cfg.bootstrap_b,
                alpha=cfg.alpha, seed=derive_seed(cfg.seed, "usability", framework),
            ),
        )
        for dimension in ("normal", "abnormal", "overall"):
            mean, lo, hi = ublock.value(dimension)
            usability_rows.append((framework, dimension, mean, lo, hi))
    return EvalReport(metric_rows=tuple(metric_rows), usability_rows=tuple(usability_rows))


def build_report(
    finals: dict[tuple[str, str], str],
    grades: dict[tuple[str, str], "AdjudicatedGrade"],
    truths: dict[str, str],
    cfg: EvalConfig | None = None,
    out_dir: str | Path = "reports",
    scenarios: Iterable[str] = SCENARIOS,
) -> dict[str, Path]:
    """Write the two report CSVs plus a readable summary; deterministic output."""
    report = evaluate(finals, grades, truths, cfg, scenarios)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / "comprehensive_metrics.csv"
    with metrics_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scenario", "framework", "metric", "mean", "ci_lo", "ci_hi"])
        for scenario, framework, metric, mean, lo, hi in report.metric_rows:
            writer.writerow([scenario, framework, metric, format_3dp(mean), format_3dp(lo), format_3dp(hi)])
    usability_path = out / "usability_index.csv"
    with usability_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["framework", "dimension", "mean", "ci_lo", "ci_hi"])
        for framework, dimension, mean, lo, hi in report.usability_rows:
            writer.writerow([framework, dimension, format_3dp(mean), format_3dp(lo), format_3dp(hi)])
    summary_path = out / "report.md"
    summary_path.write_text(render_markdown(report), encoding="utf-8")
    return {"metrics": metrics_path, "usability": usability_path, "summary": summary_path}


def render_markdown(report: EvalReport) -> str:
    lines = ["# Evaluation report", "", "## Comprehensive metrics", ""]
    lines.append("| Scenario | Framework | Metric | Mean | 95% CI lower | 95% CI upper |")
    lines.append("|---|---|---|---|---|---|")
    for scenario, framework, metric, mean, lo, hi in report.metric_rows:
        lines.append(
            f"| {scenario} | {framework} | {metric} | {format_3dp(mean)} | {format_3dp(lo)} | {format_3dp(hi)} |"
        )
    lines.extend(["", "## Usability index", ""])
    lines.append("| Framework | Dimension | Mean | 95% CI lower | 95% CI upper |")
    lines.append("|---|---|---|---|---|")
    for framework, dimension, mean, lo, hi in report.usability_rows:
        lines.append(
            f"| {framework} | {dimension} | {format_3dp(mean)} | {format_3dp(lo)} | {format_3dp(hi)} |"
        )
    lines.append("")
    return "\n".join(lines)
