"""End-to-end diagnosis pipelines and the transcript parser.

Three frameworks share one result shape:

  baseline  sampled still frames, one diagnose call
  dvdx      whole video, one diagnose call
  hmvdx     describe call, then a judge call on the returned description

Parsing is total: every transcript yields a DiagnosisOutput plus a
diagnostics list; an unrecoverable final verdict downgrades to "invalid"
rather than raising.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import transcript as tr
from .errors import DescribeFailed, GatewayError, JudgeFailed, RomdxError
from .gateway import FrameSet, ModelGateway
from .ingest import CaseRecord, sample_frames
from .ladder import UNREACHABLE, Landmark, parse_landmark
from .prompts import PromptKind, RuleSet, render_prompt

FRAMEWORKS = ("baseline", "dvdx", "hmvdx")


@dataclass(frozen=True)
class MotionObservation:
    kind: str                      # movement vocabulary kind, or "unknown"
    side: str                      # left | right | bilateral | unspecified
    reach: Landmark | str | None   # Landmark, "unreachable", or None
    symmetry_note: str = "n/a"     # symmetric | affected_lower | n/a
    compensation: frozenset[str] = frozenset()
    smoothness: str = "n/a"        # smooth | jerky | n/a

    def to_json_dict(self) -> dict:
        reach = self.reach.value if isinstance(self.reach, Landmark) else self.reach
        return {
            "kind": self.kind,
            "side": self.side,
            "reach": reach,
            "symmetry_note": self.symmetry_note,
            "compensation": sorted(self.compensation),
            "smoothness": self.smoothness,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MotionObservation":
        reach = obj.get("reach")
        if reach not in (None, UNREACHABLE):
            reach = parse_landmark(reach)
        return cls(
            kind=obj["kind"],
            side=obj["side"],
            reach=reach,
            symmetry_note=obj.get("symmetry_note", "n/a"),
            compensation=frozenset(obj.get("compensation", ())),
            smoothness=obj.get("smoothness", "n/a"),
        )


@dataclass(frozen=True)
class MovementJudgment:
    kind: str                      # movement vocabulary kind, or "unknown"
    verdict: str                   # limited | normal | indeterminate
    evidence: str

    def __post_init__(self) -> None:
        assert self.verdict in ("limited", "normal", "indeterminate")

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "verdict": self.verdict, "evidence": self.evidence}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MovementJudgment":
        return cls(kind=obj["kind"], verdict=obj["verdict"], evidence=obj.get("evidence", ""))


@dataclass(frozen=True)
class Diagnostic:
    code: str                      # MissingSection | UnknownMovement | AmbiguousVerdict | CompoundActionUnsplit
    detail: str


@dataclass(frozen=True)
class DiagnosisOutput:
    observations: tuple[MotionObservation, ...]
    judgments: tuple[MovementJudgment, ...]
    final: str                     # positive | negative | invalid
    raw: str
    framework: str
    intermediate_description: str = ""
    diagnostics: tuple[Diagnostic, ...] = ()

    def __post_init__(self) -> None:
        assert self.final in ("positive", "negative", "invalid")
        if self.framework == "hmvdx":
            assert self.intermediate_description, "two-stage results must keep the description"

    def diagnostic_codes(self) -> set[str]:
        return {diag.code for diag in self.diagnostics}


def parse_output(raw: str, rules: RuleSet, framework: str = "dvdx",
                 intermediate_description: str = "") -> DiagnosisOutput:
    """Parse a transcript into structured observations, judgments, and final.

    Never raises on content: unrecognized movements are kept with
    kind="unknown", and a missing or unreadable FINAL section downgrades the
    verdict to invalid with a MissingSection diagnostic.
    """
    sections = tr.split_sections(raw)
    diagnostics: list[Diagnostic] = []
    known_kinds = {rule.kind for rule in rules.movements}

    movement_lines = sections.get("movements")
    if movement_lines is None:
        diagnostics.append(Diagnostic("MissingSection", "no == MOVEMENTS == section"))
        movement_lines = sections.get("preamble", [])
    compensation: frozenset[str] = frozenset()
    parsed_movements: list[tr.MovementLine] = []
    for line in movement_lines:
        signs = tr.parse_compensation_line(line)
        if signs is not None:
            compensation = compensation | signs
            continue
        movement = tr.parse_movement_line(line)
        if movement is None:
            continue
        parsed_movements.append(movement)
        if movement.kind is None:
            if movement.compound:
                diagnostics.append(
                    Diagnostic("CompoundActionUnsplit",
                               f"compound action not decomposable: {movement.name!r}")
                )
            else:
                diagnostics.append(
                    Diagnostic("UnknownMovement", f"unrecognized movement: {movement.name!r}")
                )
        elif movement.kind not in known_kinds:
            diagnostics.append(
                Diagnostic("UnknownMovement", f"movement outside the rule set: {movement.name!r}")
            )

    observations: list[MotionObservation] = []
    for movement in parsed_movements:
        kind = movement.kind or "unknown"
        symmetry = "affected_lower" if movement.symmetry.startswith("affected_lower") else movement.symmetry
        if movement.reaches:
            for clause in movement.reaches:
                observations.append(
                    MotionObservation(
                        kind=kind,
                        side=clause.side,
                        reach=clause.reach,
                        symmetry_note=symmetry,
                        smoothness=movement.smoothness,
                    )
                )
        else:
            observations.append(
                MotionObservation(kind=kind, side="unspecified", reach=None,
                                  symmetry_note=symmetry, smoothness=movement.smoothness)
            )
    if compensation:
        observations = [
            MotionObservation(
                kind=obs.kind, side=obs.side, reach=obs.reach,
                symmetry_note=obs.symmetry_note, compensation=compensation,
                smoothness=obs.smoothness,
            )
            for obs in observations
        ]

    judgments: list[MovementJudgment] = []
    judgment_lines = sections.get("judgments")
    if judgment_lines is None:
        diagnostics.append(Diagnostic("MissingSection", "no == JUDGMENTS == section"))
        judgment_lines = []
    for line in judgment_lines:
        parsed = tr.parse_judgment_line(line)
        if parsed is None:
            continue
        kind = parsed.kind or "unknown"
        if parsed.kind is None:
            diagnostics.append(Diagnostic("UnknownMovement", f"unrecognized judgment target: {parsed.name!r}"))
        if parsed.verdict == "indeterminate":
            diagnostics.append(Diagnostic("AmbiguousVerdict", f"no clear verdict for {parsed.name!r}"))
        evidence = parsed.evidence
        if parsed.verdict != "indeterminate" and not evidence:
            evidence = line.strip()
        judgments.append(MovementJudgment(kind=kind, verdict=parsed.verdict, evidence=evidence))

    final_lines = sections.get("final")
    if final_lines is None:
        diagnostics.append(Diagnostic("MissingSection", "no == FINAL == section"))
        final = "invalid"
    else:
        final = tr.parse_final_lines(final_lines)
        if final == "invalid":
            diagnostics.append(Diagnostic("MissingSection", "FINAL section has no verdict line"))

    return DiagnosisOutput(
        observations=tuple(observations),
        judgments=tuple(judgments),
        final=final,
        raw=raw,
        framework=framework,
        intermediate_description=intermediate_description,
        diagnostics=tuple(diagnostics),
    )


# --- case results ------------------------------------------------------------------


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    output: DiagnosisOutput
    model_id: str
    backend: str
    started_at: str
    finished_at: str

    @property
    def framework(self) -> str:
        return self.output.framework

    @property
    def final(self) -> str:
        return self.output.final

    def to_json_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "framework": self.output.framework,
            "final": self.output.final,
            "observations": [obs.to_json_dict() for obs in self.output.observations],
            "judgments": [judgment.to_json_dict() for judgment in self.output.judgments],
            "intermediate_description": self.output.intermediate_description,
            "raw": self.output.raw,
            "diagnostics": [
                {"code": diag.code, "detail": diag.detail} for diag in self.output.diagnostics
            ],
            "model_id": self.model_id,
            "backend": self.backend,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CaseResult":
        output = DiagnosisOutput(
            observations=tuple(
                MotionObservation.from_json_dict(item) for item in obj.get("observations", ())
            ),
            judgments=tuple(
                MovementJudgment.from_json_dict(item) for item in obj.get("judgments", ())
            ),
            final=obj["final"],
            raw=obj.get("raw", ""),
            framework=obj["framework"],
            intermediate_description=obj.get("intermediate_description", ""),
            diagnostics=tuple(
                Diagnostic(item["code"], item.get("detail", ""))
                for item in obj.get("diagnostics", ())
            ),
        )
        return cls(
            case_id=obj["case_id"],
            output=output,
            model_id=obj.get("model_id", "unknown"),
            backend=obj.get("backend", "unknown"),
            started_at=obj.get("started_at", ""),
            finished_at=obj.get("finished_at", ""),
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_baseline(case: CaseRecord, n_frames: int, rules: RuleSet, gateway: ModelGateway) -> CaseResult:
    """Frame-sequence pipeline: sample stills, one diagnose call, parse."""
    started = _now()
    frames = FrameSet(case=case, timestamps=tuple(sample_frames(case.duration_s, n_frames)))
    prompt = render_prompt(PromptKind.DIAGNOSE, rules)
    response = gateway.diagnose_direct(frames, prompt)
    output = parse_output(response.text, rules, framework="baseline")
    return CaseResult(
        case_id=case.case_id, output=output, model_id=response.model_id,
        backend=response.backend, started_at=started, finished_at=_now(),
    )


def run_dvdx(case: CaseRecord, rules: RuleSet, gateway: ModelGateway) -> CaseResult:
    """Single-call video pipeline: whole video to diagnosis in one step."""
    started = _now()
    prompt = render_prompt(PromptKind.DIAGNOSE, rules)
    response = gateway.diagnose_direct(case, prompt)
    output = parse_output(response.text, rules, framework="dvdx")
    return CaseResult(
        case_id=case.case_id, output=output, model_id=response.model_id,
        backend=response.backend, started_at=started, finished_at=_now(),
    )


def run_hmvdx(case: CaseRecord, rules: RuleSet, gateway: ModelGateway) -> CaseResult:
    """Two-stage pipeline: describe the motion, then judge the description.

    The judge receives the stored description verbatim; a describe failure
    aborts before any judge call.
    """
    started = _now()
    try:
        described = gateway.describe_video(case, render_prompt(PromptKind.DESCRIBE, rules))
    except GatewayError as exc:
        raise DescribeFailed(f"describe stage failed for {case.case_id}: {exc}") from exc
    try:
        judged = gateway.judge_text(described.text, render_prompt(PromptKind.JUDGE, rules))
    except GatewayError as exc:
        raise JudgeFailed(f"judge stage failed for {case.case_id}: {exc}") from exc
    output = parse_output(
        judged.text, rules, framework="hmvdx", intermediate_description=described.text
    )
    return CaseResult(
        case_id=case.case_id, output=output,
        model_id=f"{described.model_id}+{judged.model_id}",
        backend=judged.backend, started_at=started, finished_at=_now(),
    )


# --- results store -------------------------------------------------------------------


class ResultsStore:
    """JSON Lines store, one file per framework, append-only, single writer."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path_for(self, framework: str) -> Path:
        return self.root / f"{framework}.jsonl"

    def append(self, result: CaseResult) -> None:
        line = json.dumps(result.to_json_dict(), sort_keys=True)
        with self._lock:
            with self.path_for(result.framework).open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")
                handle.flush()

    def load(self, framework: str) -> list[CaseResult]:
        path = self.path_for(framework)
        if not path.exists():
            return []
        results = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                results.append(CaseResult.from_json_dict(json.loads(line)))
        return results

    def completed_ids(self, framework: str) -> set[str]:
        return {result.case_id for result in self.load(framework)}

    def frameworks(self) -> list[str]:
        return sorted(
            path.stem for path in self.root.glob("*.jsonl") if path.stem in FRAMEWORKS
        )


@dataclass
class RunOutcome:
    completed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)


def run_cases(
    cases,
    framework: str,
    rules: RuleSet,
    gateway: ModelGateway,
    store: ResultsStore,
    n_frames: int = 16,
    concurrency: int = 1,
) -> RunOutcome:
    """Run one framework over many cases with bounded parallelism.

    Already-stored (case, framework) pairs are skipped, so an interrupted run
    can simply be repeated. Per-case failures are recorded and the run
    continues; the failing cases stay absent from the store for retry.
    """
    if framework not in FRAMEWORKS:
        raise ValueError(f"framework must be one of {FRAMEWORKS}, got {framework!r}")
    outcome = RunOutcome()
    done = store.completed_ids(framework)

    def _one(case: CaseRecord) -> CaseResult:
        if framework == "baseline":
            return run_baseline(case, n_frames, rules, gateway)
        if framework == "dvdx":
            return run_dvdx(case, rules, gateway)
        return run_hmvdx(case, rules, gateway)

    pending = []
    for case in cases:
        if case.case_id in done:
            outcome.skipped.append(case.case_id)
        else:
            pending.append(case)
    if not pending:
        return outcome
    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        futures = {pool.submit(_one, case): case for case in pending}
        for future in as_completed(futures):
            case = futures[future]
            try:
                result = future.result()
            except RomdxError as exc:
                outcome.failures[case.case_id] = str(exc)
                continue
            store.append(result)
            outcome.completed.append(case.case_id)
    outcome.completed.sort()
    return outcome
