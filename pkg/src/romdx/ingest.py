"""Case manifest ingestion, privacy gating, preprocessing plans, frame sampling.

The manifest is a clinician-editable CSV with a fixed header. Ingestion
validates and rejects; it never repairs rows. Actual transcoding (face
masking, audio stripping, cropping, compression) is delegated to an external
command template; this module only plans the work, runs the command, and
flips the per-case privacy flags on success.
"""

from __future__ import annotations

import csv
import json
import shlex
import subprocess
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    DuplicateCaseId,
    EmptyManifest,
    InvalidFrameCount,
    InvalidRow,
    MissingFile,
    UnknownLabel,
    UnresolvableVideoRef,
)

MANIFEST_HEADER = ["case_id", "video_path", "label", "age_band", "gender", "view", "duration_s"]
LABELS = ("abnormal", "normal")
VIEWS = ("front", "back", "side", "mixed")


@dataclass(frozen=True)
class CaseRecord:
    """One subject video plus its ground-truth label and processing state."""

    case_id: str
    video_path: str
    label: str                 # "abnormal" | "normal"
    age_band: str              # decade bin, e.g. "50-59"
    gender: str
    view: str                  # front | back | side | mixed
    duration_s: float
    privacy_state: str = "raw"      # raw | masked
    audio_state: str = "present"    # present | removed

    @property
    def preprocess_done(self) -> bool:
        return self.privacy_state == "masked" and self.audio_state == "removed"

    def to_json_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "video_path": self.video_path,
            "label": self.label,
            "age_band": self.age_band,
            "gender": self.gender,
            "view": self.view,
            "duration_s": self.duration_s,
            "privacy_state": self.privacy_state,
            "audio_state": self.audio_state,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CaseRecord":
        try:
            record = cls(
                case_id=str(obj["case_id"]),
                video_path=str(obj["video_path"]),
                label=str(obj["label"]),
                age_band=str(obj["age_band"]),
                gender=str(obj["gender"]),
                view=str(obj["view"]),
                duration_s=float(obj["duration_s"]),
                privacy_state=str(obj.get("privacy_state", "raw")),
                audio_state=str(obj.get("audio_state", "present")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidRow(f"bad case record: {exc}") from exc
        _validate_record(record)
        return record


def _validate_record(record: CaseRecord) -> None:
    if record.label not in LABELS:
        raise UnknownLabel(f"case {record.case_id}: label {record.label!r} not in {LABELS}")
    if record.duration_s <= 0:
        raise InvalidRow(f"case {record.case_id}: duration_s must be > 0, got {record.duration_s}")
    if record.view not in VIEWS:
        raise InvalidRow(f"case {record.case_id}: view {record.view!r} not in {VIEWS}")
    if record.privacy_state not in ("raw", "masked"):
        raise InvalidRow(f"case {record.case_id}: bad privacy_state {record.privacy_state!r}")
    if record.audio_state not in ("present", "removed"):
        raise InvalidRow(f"case {record.case_id}: bad audio_state {record.audio_state!r}")


@dataclass(frozen=True)
class CaseSet:
    """Ordered, validated collection of cases plus recomputed summary counts."""

    cases: tuple[CaseRecord, ...]

    @property
    def summary(self) -> dict:
        by_label: dict[str, int] = {label: 0 for label in LABELS}
        by_age: dict[str, int] = {}
        by_gender: dict[str, int] = {}
        for case in self.cases:
            by_label[case.label] += 1
            by_age[case.age_band] = by_age.get(case.age_band, 0) + 1
            by_gender[case.gender] = by_gender.get(case.gender, 0) + 1
        return {
            "total": len(self.cases),
            "abnormal": by_label["abnormal"],
            "normal": by_label["normal"],
            "age_bands": dict(sorted(by_age.items())),
            "genders": dict(sorted(by_gender.items())),
        }

    def by_id(self, case_id: str) -> CaseRecord:
        for case in self.cases:
            if case.case_id == case_id:
                return case
        raise KeyError(case_id)


def _check_unique_ids(cases: list[CaseRecord]) -> None:
    seen: set[str] = set()
    for case in cases:
        if case.case_id in seen:
            raise DuplicateCaseId(f"duplicate case_id {case.case_id!r}")
        seen.add(case.case_id)


def ingest_manifest(path: str | Path) -> CaseSet:
    """Load and validate a manifest CSV. Bad rows abort the whole ingest."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"manifest not found: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        rows = [row for row in reader if row]
    if not rows:
        raise EmptyManifest(f"manifest is empty: {path}")
    header = rows[0]
    if header != MANIFEST_HEADER:
        raise InvalidRow(
            f"manifest header must be {','.join(MANIFEST_HEADER)!r}, got {','.join(header)!r}"
        )
    if len(rows) == 1:
        raise EmptyManifest(f"manifest has a header but no rows: {path}")
    cases: list[CaseRecord] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(MANIFEST_HEADER):
            raise InvalidRow(f"line {lineno}: expected {len(MANIFEST_HEADER)} columns, got {len(row)}")
        values = dict(zip(MANIFEST_HEADER, row))
        try:
            duration = float(values["duration_s"])
        except ValueError as exc:
            raise InvalidRow(f"line {lineno}: duration_s is not a number: {values['duration_s']!r}") from exc
        record = CaseRecord(
            case_id=values["case_id"],
            video_path=values["video_path"],
            label=values["label"],
            age_band=values["age_band"],
            gender=values["gender"],
            view=values["view"],
            duration_s=duration,
        )
        _validate_record(record)
        cases.append(record)
    _check_unique_ids(cases)
    return CaseSet(cases=tuple(cases))


def save_caseset(cases: CaseSet, path: str | Path) -> None:
    """Export as JSON Lines, one record per line, manifest field names."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for case in cases.cases:
            handle.write(json.dumps(case.to_json_dict(), sort_keys=True) + "\n")


def load_caseset(path: str | Path) -> CaseSet:
    """Re-ingest an exported case set; round-trips save_caseset exactly."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"case set not found: {path}")
    cases: list[CaseRecord] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        cases.append(CaseRecord.from_json_dict(json.loads(line)))
    if not cases:
        raise EmptyManifest(f"case set is empty: {path}")
    _check_unique_ids(cases)
    return CaseSet(cases=tuple(cases))


# --- privacy gate ---------------------------------------------------------------

@dataclass(frozen=True)
class GateDecision:
    passed: bool
    reasons: tuple[str, ...] = ()


def check_privacy_gate(case: CaseRecord) -> GateDecision:
    """A case may leave the machine only with faces masked and audio removed."""
    reasons = []
    if case.privacy_state != "masked":
        reasons.append("faces_unmasked")
    if case.audio_state != "removed":
        reasons.append("audio_present")
    return GateDecision(passed=not reasons, reasons=tuple(reasons))


# --- preprocessing ---------------------------------------------------------------

DEFAULT_EXEC_TEMPLATE = "transcode {input} {output} --crop {crop} --bitrate {target_kbps}"


@dataclass(frozen=True)
class PrepConfig:
    crop: str = "in_w:in_h*0.9:0:0"
    target_kbps: int = 800
    enable_crop: bool = True
    enable_compress: bool = True
    exec_template: str = DEFAULT_EXEC_TEMPLATE
    output_suffix: str = ".masked.mp4"


@dataclass(frozen=True)
class PreprocessPlan:
    """Deterministic step list plus the fully rendered external command."""

    case_id: str
    steps: tuple[str, ...]
    command: str

    def __post_init__(self) -> None:
        assert "mask_faces" in self.steps and "strip_audio" in self.steps


def plan_preprocess(case: CaseRecord, config: PrepConfig | None = None) -> PreprocessPlan:
    """Build the privacy-first processing plan for one case.

    Face masking and audio stripping are mandatory regardless of config;
    cropping and compression are the optional engineering steps.
    """
    config = config or PrepConfig()
    if not case.video_path:
        raise UnresolvableVideoRef(f"case {case.case_id}: empty video reference")
    steps = ["mask_faces", "strip_audio"]
    if config.enable_crop:
        steps.append(f"crop({config.crop})")
    if config.enable_compress:
        steps.append(f"compress({config.target_kbps}kbps)")
    output = case.video_path + config.output_suffix
    command = config.exec_template.format(
        input=case.video_path,
        output=output,
        crop=config.crop if config.enable_crop else "none",
        target_kbps=config.target_kbps if config.enable_compress else 0,
    )
    return PreprocessPlan(case_id=case.case_id, steps=tuple(steps), command=command)


def run_preprocess(
    case: CaseRecord,
    config: PrepConfig | None = None,
    runner=None,
) -> CaseRecord:
    """Execute the plan's external command; flip state flags only on success.

    `runner` takes the argv list and returns an exit code (default: run the
    real subprocess). Nonzero exit leaves the case untouched and raises.
    """
    plan = plan_preprocess(case, config)
    if runner is None:
        runner = lambda argv: subprocess.run(argv, check=False).returncode  # noqa: E731
    code = runner(shlex.split(plan.command))
    if code != 0:
        raise UnresolvableVideoRef(
            f"case {case.case_id}: preprocess command exited {code}: {plan.command}"
        )
    return replace(case, privacy_state="masked", audio_state="removed")


# --- frame sampling -----------------------------------------------------------------

def sample_frames(duration_s: float, n: int) -> list[float]:
    """Timestamps at the midpoints of n equal windows over (0, duration_s).

    Midpoints avoid the degenerate first/last frames an endpoint scheme
    would produce on short clips.
    """
    if n < 1:
        raise InvalidFrameCount(f"frame count must be >= 1, got {n}")
    if duration_s <= 0:
        raise ValueError(f"duration_s must be > 0, got {duration_s}")
    return [(k + 0.5) * duration_s / n for k in range(n)]
