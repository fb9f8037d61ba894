"""Uniform access to inference backends.

Two backends sit behind one facade: a remote HTTP service (any provider that
speaks the minimal describe/judge/diagnose POST protocol) and a deterministic
simulated expert that renders transcripts from synthetic case specs. The
simulated backend, together with its fault injector, is what makes the whole
pipeline verifiable offline: every defect it injects is recorded, so the
rubric grades a case should receive are known in advance.
"""

from __future__ import annotations

import os
import random
import re
import threading
import time
from dataclasses import dataclass

from . import transcript as tr
from .errors import (
    EmptyDescription,
    EmptyFrameSet,
    GatewayTimeout,
    MalformedResponse,
    NotSynthetic,
    PrivacyGateRejected,
    RateLimited,
)
from .evaluation import rule_oracle
from .ingest import CaseRecord, check_privacy_gate
from .ladder import UNREACHABLE, Landmark, asymmetry_steps, parse_landmark
from .prompts import PromptText, RuleSet, default_rule_set, movement_phrase

#: The movements every synthetic subject performs (screening sequence).
CORE_MOVEMENTS = ("forward_elevation", "hands_on_head", "hand_behind_back")


@dataclass(frozen=True)
class BackendConfig:
    backend: str = "simulated"           # simulated | remote
    endpoint: str | None = None          # remote only
    api_key: str | None = None
    timeout_s: float = 30.0
    max_retries: int = 2
    rate_limit_per_min: float = 60.0
    seed: int = 0                        # simulated only

    def __post_init__(self) -> None:
        if self.backend not in ("simulated", "remote"):
            raise ValueError(f"backend must be simulated or remote, got {self.backend!r}")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.rate_limit_per_min <= 0:
            raise ValueError("rate_limit_per_min must be > 0")

    @classmethod
    def remote_from_env(cls, **overrides) -> "BackendConfig":
        endpoint = os.environ.get("ROMDX_ENDPOINT")
        if not endpoint:
            raise ValueError("ROMDX_ENDPOINT is not set")
        timeout = float(os.environ.get("ROMDX_TIMEOUT_S", "30"))
        return cls(
            backend="remote",
            endpoint=endpoint,
            api_key=os.environ.get("ROMDX_API_KEY"),
            timeout_s=overrides.pop("timeout_s", timeout),
            **overrides,
        )


# --- synthetic case specifications ------------------------------------------------


def _reach_to_json(reach: Landmark | str) -> str:
    return reach.value if isinstance(reach, Landmark) else reach


def _reach_from_json(value: str) -> Landmark | str:
    if value == UNREACHABLE:
        return UNREACHABLE
    return parse_landmark(value)


@dataclass(frozen=True)
class SideSpec:
    """Reach achieved by one arm in each screening movement."""

    elevation_reach: Landmark
    hands_on_head_reach: Landmark | str      # Landmark or UNREACHABLE
    behind_back_reach: Landmark

    def to_json_dict(self) -> dict:
        return {
            "elevation_reach": _reach_to_json(self.elevation_reach),
            "hands_on_head_reach": _reach_to_json(self.hands_on_head_reach),
            "behind_back_reach": _reach_to_json(self.behind_back_reach),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SideSpec":
        elevation = _reach_from_json(obj["elevation_reach"])
        behind = _reach_from_json(obj["behind_back_reach"])
        assert isinstance(elevation, Landmark) and isinstance(behind, Landmark)
        return cls(
            elevation_reach=elevation,
            hands_on_head_reach=_reach_from_json(obj["hands_on_head_reach"]),
            behind_back_reach=behind,
        )


@dataclass(frozen=True)
class SyntheticCaseSpec:
    left: SideSpec
    right: SideSpec
    compensation: frozenset[str] = frozenset()
    affected_side: str = "none"              # left | right | none | both
    smoothness: str = "smooth"               # smooth | jerky

    def __post_init__(self) -> None:
        if self.affected_side not in ("left", "right", "none", "both"):
            raise ValueError(f"bad affected_side {self.affected_side!r}")
        if self.smoothness not in ("smooth", "jerky"):
            raise ValueError(f"bad smoothness {self.smoothness!r}")
        if self.affected_side == "none" and self.left != self.right:
            raise ValueError("affected_side=none requires bilaterally symmetric reaches")

    def reach(self, kind: str, side: str) -> Landmark | str:
        side_spec = self.left if side == "left" else self.right
        if kind == "forward_elevation":
            return side_spec.elevation_reach
        if kind == "hands_on_head":
            return side_spec.hands_on_head_reach
        if kind == "hand_behind_back":
            return side_spec.behind_back_reach
        raise KeyError(kind)

    def to_json_dict(self) -> dict:
        return {
            "left": self.left.to_json_dict(),
            "right": self.right.to_json_dict(),
            "compensation": sorted(self.compensation),
            "affected_side": self.affected_side,
            "smoothness": self.smoothness,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SyntheticCaseSpec":
        return cls(
            left=SideSpec.from_json_dict(obj["left"]),
            right=SideSpec.from_json_dict(obj["right"]),
            compensation=frozenset(obj.get("compensation", ())),
            affected_side=obj.get("affected_side", "none"),
            smoothness=obj.get("smoothness", "smooth"),
        )


@dataclass(frozen=True)
class DefectProfile:
    """Per-case probabilities of the three injected output defects."""

    omit_movement_prob: float = 0.0
    contradiction_prob: float = 0.0
    logic_leap_prob: float = 0.0

    def __post_init__(self) -> None:
        for name in ("omit_movement_prob", "contradiction_prob", "logic_leap_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class DefectOutcome:
    """What the injector actually did to one case; drawn once, then fixed."""

    omitted: tuple[str, ...] = ()
    contradiction: bool = False
    contradiction_target: str | None = None
    contradiction_mode: str | None = None    # claim_normal | claim_limited
    logic_leap: bool = False
    leap_target: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "omitted": list(self.omitted),
            "contradiction": self.contradiction,
            "contradiction_target": self.contradiction_target,
            "contradiction_mode": self.contradiction_mode,
            "logic_leap": self.logic_leap,
            "leap_target": self.leap_target,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DefectOutcome":
        return cls(
            omitted=tuple(obj.get("omitted", ())),
            contradiction=bool(obj.get("contradiction", False)),
            contradiction_target=obj.get("contradiction_target"),
            contradiction_mode=obj.get("contradiction_mode"),
            logic_leap=bool(obj.get("logic_leap", False)),
            leap_target=obj.get("leap_target"),
        )


@dataclass(frozen=True)
class SyntheticCase:
    """One generated case with its spec, injected defects, and grade hints."""

    record: CaseRecord
    spec: SyntheticCaseSpec
    outcome: DefectOutcome
    expected_a: float
    expected_r: float

    def to_json_dict(self) -> dict:
        return {
            "record": self.record.to_json_dict(),
            "spec": self.spec.to_json_dict(),
            "outcome": self.outcome.to_json_dict(),
            "expected_a": self.expected_a,
            "expected_r": self.expected_r,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SyntheticCase":
        return cls(
            record=CaseRecord.from_json_dict(obj["record"]),
            spec=SyntheticCaseSpec.from_json_dict(obj["spec"]),
            outcome=DefectOutcome.from_json_dict(obj["outcome"]),
            expected_a=float(obj["expected_a"]),
            expected_r=float(obj["expected_r"]),
        )


_FULL = SideSpec(
    elevation_reach=Landmark.ABOVE_HEAD,
    hands_on_head_reach=Landmark.TOP_OF_HEAD,
    behind_back_reach=Landmark.CHEST,
)

_LIMITED_REACHES = {
    "forward_elevation": (Landmark.ACROMION, Landmark.CHEST, Landmark.WAIST_ILIAC_CREST),
    "hands_on_head": (Landmark.EARLOBE, UNREACHABLE),
    "hand_behind_back": (Landmark.WAIST_ILIAC_CREST, Landmark.BUTTOCK, Landmark.THIGH),
}

_AGE_BANDS = ("20-29", "30-39", "40-49", "50-59", "60-69", "70-79")
_GENDERS = ("female", "male")
_VIEWS = ("front", "back", "side", "mixed")


def _side_with(kind: str, reach, base: SideSpec) -> SideSpec:
    if kind == "forward_elevation":
        return SideSpec(reach, base.hands_on_head_reach, base.behind_back_reach)
    if kind == "hands_on_head":
        return SideSpec(base.elevation_reach, reach, base.behind_back_reach)
    return SideSpec(base.elevation_reach, base.hands_on_head_reach, reach)


def _draw_spec(rng: random.Random, rules: RuleSet, abnormal_rate: float) -> SyntheticCaseSpec:
    if rng.random() >= abnormal_rate:
        return SyntheticCaseSpec(left=_FULL, right=_FULL)
    affected = rng.choices(("left", "right", "both"), weights=(0.4, 0.4, 0.2))[0]
    if affected != "both" and rng.random() < 0.25:
        # asymmetry-only presentation: the affected arm still clears the
        # limited threshold but sits visibly below the healthy side
        lowered = _side_with(
            "forward_elevation", rng.choice((Landmark.TOP_OF_HEAD, Landmark.EARLOBE)), _FULL
        )
        left, right = (lowered, _FULL) if affected == "left" else (_FULL, lowered)
    else:
        kinds = rng.sample(CORE_MOVEMENTS, k=rng.randint(1, len(CORE_MOVEMENTS)))
        limited = _FULL
        for kind in kinds:
            limited = _side_with(kind, rng.choice(_LIMITED_REACHES[kind]), limited)
        if affected == "both":
            left = right = limited
        else:
            left, right = (limited, _FULL) if affected == "left" else (_FULL, limited)
    compensation: frozenset[str] = frozenset()
    if rules.compensation_signs and rng.random() < 0.5:
        count = rng.randint(1, len(rules.compensation_signs))
        compensation = frozenset(rng.sample(list(rules.compensation_signs), k=count))
    smoothness = "jerky" if rng.random() < 0.5 else "smooth"
    return SyntheticCaseSpec(
        left=left,
        right=right,
        compensation=compensation,
        affected_side=affected,
        smoothness=smoothness,
    )


def _movement_limited(rule, left, right) -> bool:
    for reach in (left, right):
        if reach == UNREACHABLE:
            return True
        if reach.is_at_or_below(rule.limited_if_at_or_below):
            return True
    return rule.bilateral_compare and asymmetry_steps(left, right) >= 1


def _draw_defects(
    rng: random.Random, spec: SyntheticCaseSpec, defects: DefectProfile, rules: RuleSet
) -> DefectOutcome:
    omitted: tuple[str, ...] = ()
    if rng.random() < defects.omit_movement_prob:
        count = rng.randint(1, len(CORE_MOVEMENTS))
        chosen = rng.sample(CORE_MOVEMENTS, k=count)
        omitted = tuple(kind for kind in CORE_MOVEMENTS if kind in chosen)
    contradiction = rng.random() < defects.contradiction_prob
    target = mode = None
    if contradiction:
        limited = [
            kind
            for kind in CORE_MOVEMENTS
            if _movement_limited(rules.rule_for(kind), spec.reach(kind, "left"), spec.reach(kind, "right"))
        ]
        visible_limited = [kind for kind in limited if kind not in omitted]
        if visible_limited:
            target, mode = rng.choice(visible_limited), "claim_normal"
        elif limited:
            target, mode = rng.choice(limited), "claim_normal"
        else:
            candidates = [kind for kind in CORE_MOVEMENTS if kind not in omitted] or list(CORE_MOVEMENTS)
            target, mode = rng.choice(candidates), "claim_limited"
    leap = rng.random() < defects.logic_leap_prob
    leap_target = rng.choice(("external_rotation", "internal_rotation")) if leap else None
    return DefectOutcome(
        omitted=omitted,
        contradiction=contradiction,
        contradiction_target=target,
        contradiction_mode=mode,
        logic_leap=leap,
        leap_target=leap_target,
    )


def _expected_a(outcome: DefectOutcome) -> float:
    if not outcome.omitted:
        return 1.0
    if len(outcome.omitted) < len(CORE_MOVEMENTS):
        return 0.5
    return 0.0


def _expected_r(outcome: DefectOutcome) -> float:
    if outcome.contradiction:
        return 0.0
    if outcome.logic_leap:
        return 0.5
    return 1.0


def generate_synthetic_corpus(
    n: int,
    defects: DefectProfile | None = None,
    seed: int = 0,
    rules: RuleSet | None = None,
    abnormal_rate: float = 0.6,
) -> list[SyntheticCase]:
    """Draw n synthetic cases; labels come from the rule oracle on each spec."""
    if n < 1:
        raise ValueError(f"corpus size must be >= 1, got {n}")
    defects = defects or DefectProfile()
    rules = rules or default_rule_set()
    rng = random.Random(seed)
    corpus: list[SyntheticCase] = []
    for index in range(n):
        spec = _draw_spec(rng, rules, abnormal_rate)
        outcome = _draw_defects(rng, spec, defects, rules)
        case_id = f"sim-{index:04d}"
        record = CaseRecord(
            case_id=case_id,
            video_path=f"videos/{case_id}.mp4",
            label=rule_oracle(spec, rules),
            age_band=rng.choice(_AGE_BANDS),
            gender=rng.choice(_GENDERS),
            view=rng.choice(_VIEWS),
            duration_s=round(rng.uniform(8.0, 40.0), 1),
            privacy_state="masked",
            audio_state="removed",
        )
        corpus.append(
            SyntheticCase(
                record=record,
                spec=spec,
                outcome=outcome,
                expected_a=_expected_a(outcome),
                expected_r=_expected_r(outcome),
            )
        )
    return corpus


# --- canonical transcript rendering (simulated expert) ------------------------------


def _symmetry_note(left, right) -> str:
    if asymmetry_steps(left, right) == 0:
        return "symmetric"
    if left == UNREACHABLE:
        return "affected_lower:left"
    if right == UNREACHABLE:
        return "affected_lower:right"
    return "affected_lower:left" if left.rank > right.rank else "affected_lower:right"


def render_movement_lines(spec: SyntheticCaseSpec, outcome: DefectOutcome) -> list[str]:
    lines = []
    for kind in CORE_MOVEMENTS:
        if kind in outcome.omitted:
            continue
        left, right = spec.reach(kind, "left"), spec.reach(kind, "right")
        lines.append(
            tr.movement_line(kind, left, right, _symmetry_note(left, right), spec.smoothness)
        )
    lines.append(tr.compensation_line(spec.compensation))
    return lines


def render_description(case_id: str, spec: SyntheticCaseSpec, outcome: DefectOutcome) -> str:
    lines = [f"Subject: {case_id}.", "Observed shoulder movement sequence:"]
    lines.extend(render_movement_lines(spec, outcome))
    return "\n".join(lines)


@dataclass(frozen=True)
class _Judgment:
    kind: str
    verdict: str
    evidence: str


def _judge_one(rule, left, right) -> _Judgment:
    reasons = []
    for side, reach in (("left", left), ("right", right)):
        if reach is None:
            continue
        if reach == UNREACHABLE:
            reasons.append(f"the {side} hand cannot complete the movement")
        elif reach.is_at_or_below(rule.limited_if_at_or_below):
            reasons.append(f"the {side} hand reaches no higher than the {reach.phrase}")
    if (
        rule.bilateral_compare
        and left is not None
        and right is not None
        and asymmetry_steps(left, right) >= 1
    ):
        lower = _symmetry_note(left, right).split(":", 1)[1]
        healthy = "right" if lower == "left" else "left"
        reasons.append(f"the {lower} side reaches clearly lower than the {healthy} side")
    if reasons:
        return _Judgment(rule.kind, "limited", "; ".join(reasons))
    if left is None and right is None:
        return _Judgment(rule.kind, "indeterminate", "")
    return _Judgment(rule.kind, "normal", "both hands reach within the normal range")


def _apply_defects(judgments: list[_Judgment], outcome: DefectOutcome) -> list[_Judgment]:
    result = list(judgments)
    if outcome.contradiction and outcome.contradiction_target:
        target = outcome.contradiction_target
        if outcome.contradiction_mode == "claim_limited":
            flipped = _Judgment(target, "limited", "the movement appears clearly restricted")
        else:
            flipped = _Judgment(
                target, "normal", "the subject performs the movement flexibly and without restriction"
            )
        replaced = False
        for i, judgment in enumerate(result):
            if judgment.kind == target:
                result[i] = flipped
                replaced = True
                break
        if not replaced:
            result.append(flipped)
    if outcome.logic_leap and outcome.leap_target:
        source = {
            "external_rotation": "hands_on_head",
            "internal_rotation": "hand_behind_back",
        }[outcome.leap_target]
        verdict = next((j.verdict for j in result if j.kind == source), "normal")
        result.append(
            _Judgment(
                outcome.leap_target,
                verdict if verdict != "indeterminate" else "normal",
                f"inferred from the {movement_phrase(source)} performance without direct observation",
            )
        )
    return result


def _render_judged_transcript(
    case_id: str, movement_lines: list[str], judgments: list[_Judgment]
) -> str:
    lines = [f"Subject: {case_id}.", tr.SENTINEL_MOVEMENTS]
    lines.extend(movement_lines)
    lines.append(tr.SENTINEL_JUDGMENTS)
    for judgment in judgments:
        if judgment.verdict == "indeterminate":
            lines.append(f"- {movement_phrase(judgment.kind)}: indeterminate")
        else:
            lines.append(tr.judgment_line(judgment.kind, judgment.verdict, judgment.evidence))
    lines.append(tr.SENTINEL_FINAL)
    lines.append("POSITIVE" if any(j.verdict == "limited" for j in judgments) else "NEGATIVE")
    return "\n".join(lines)


def render_transcript(
    case_id: str, spec: SyntheticCaseSpec, outcome: DefectOutcome, rules: RuleSet
) -> str:
    """Full single-call diagnosis transcript (movements, judgments, final)."""
    judgments = [
        _judge_one(rules.rule_for(kind), spec.reach(kind, "left"), spec.reach(kind, "right"))
        for kind in CORE_MOVEMENTS
        if kind not in outcome.omitted
    ]
    judgments = _apply_defects(judgments, outcome)
    return _render_judged_transcript(case_id, render_movement_lines(spec, outcome), judgments)


_SUBJECT_PATTERN = re.compile(r"Subject:\s*(\S+?)\.?\s*$", re.MULTILINE)


def judge_description(description: str, rules: RuleSet, outcome: DefectOutcome | None) -> str:
    """What the simulated reasoning model does with a movement description.

    Judges exactly what the description states, movement by movement, then
    applies any recorded defects for the subject.
    """
    kept_lines: list[str] = []
    judgments: list[_Judgment] = []
    case_id = "unknown"
    match = _SUBJECT_PATTERN.search(description)
    if match:
        case_id = match.group(1)
    for line in description.splitlines():
        movement = tr.parse_movement_line(line)
        if movement is None:
            if tr.parse_compensation_line(line) is not None:
                kept_lines.append(line.strip())
            continue
        kept_lines.append(line.strip())
        if movement.kind is None:
            continue
        try:
            rule = rules.rule_for(movement.kind)
        except KeyError:
            continue
        reaches = {clause.side: clause.reach for clause in movement.reaches}
        if "bilateral" in reaches:
            reaches.setdefault("left", reaches["bilateral"])
            reaches.setdefault("right", reaches["bilateral"])
        judgments.append(_judge_one(rule, reaches.get("left"), reaches.get("right")))
    judgments = _apply_defects(judgments, outcome or DefectOutcome())
    return _render_judged_transcript(case_id, kept_lines, judgments)


# --- frame sets -----------------------------------------------------------

@dataclass(frozen=True)
class FrameSet:
    """Sampled still frames standing in for the video modality."""

    case: CaseRecord
    timestamps: tuple[float, ...]

    @property
    def refs(self) -> list[str]:
        return [f"{self.case.video_path}#t={t:.3f}" for t in self.timestamps]


# --- gateway -----------------------------------------------------------------------


@dataclass(frozen=True)
class GatewayResponse:
    text: str
    model_id: str
    backend: str
    attempts: int = 1
    latency_s: float = 0.0


class _RateLimiter:
    def __init__(self, per_minute: float, clock, sleep):
        self._interval = 60.0 / per_minute
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._last: float | None = None

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            if self._last is not None:
                remaining = self._interval - (now - self._last)
                if remaining > 0:
                    self._sleep(remaining)
                    now = self._clock()
            self._last = now


def requests_transport(url: str, payload: dict, headers: dict, timeout_s: float):
    """Default HTTP transport. Returns (status_code, body_dict)."""
    import requests

    try:
        response = requests.post(url, json=payload, headers=headers, timeout=timeout_s)
    except requests.exceptions.RequestException as exc:
        raise GatewayTimeout(f"request to {url} failed: {exc}") from exc
    try:
        body = response.json()
    except ValueError:
        body = {}
    return response.status_code, body


class ModelGateway:
    """Facade over the configured backend, with gate, pacing, and retries.

    Thread-safe: rate limiting and retry state are internal; in-flight
    requests are independent of each other.
    """

    def __init__(
        self,
        cfg: BackendConfig,
        rules: RuleSet | None = None,
        corpus: list[SyntheticCase] | None = None,
        transport=requests_transport,
        clock=time.monotonic,
        sleep=time.sleep,
    ):
        self.cfg = cfg
        self.rules = rules or default_rule_set()
        self._transport = transport
        self._clock = clock
        self._limiter = _RateLimiter(cfg.rate_limit_per_min, clock, sleep)
        self._registry: dict[str, SyntheticCase] = {}
        if corpus:
            self.register_corpus(corpus)

    def register_corpus(self, corpus: list[SyntheticCase]) -> None:
        for case in corpus:
            self._registry[case.record.case_id] = case

    def synthetic_case(self, case_id: str) -> SyntheticCase:
        try:
            return self._registry[case_id]
        except KeyError:
            raise NotSynthetic(f"case {case_id!r} was not generated by this backend") from None

    # -- public operations ----------------------------------------------------

    def describe_video(self, case: CaseRecord, prompt: PromptText) -> GatewayResponse:
        """First-stage call: video in, movement description out."""
        self._enforce_gate(case)
        if self.cfg.backend == "simulated":
            synthetic = self.synthetic_case(case.case_id)
            text = render_description(case.case_id, synthetic.spec, synthetic.outcome)
            return GatewayResponse(text=text, model_id="sim-describe-v1", backend="simulated")
        return self._remote_call(
            {"task": "describe", "prompt": prompt.body, "media_url": case.video_path,
             "frames": None, "text": None}
        )

    def judge_text(self, description: str, prompt: PromptText) -> GatewayResponse:
        """Second-stage call: movement description in, judged transcript out."""
        if not description or not description.strip():
            raise EmptyDescription("judge_text requires a non-empty description")
        if self.cfg.backend == "simulated":
            outcome = None
            match = _SUBJECT_PATTERN.search(description)
            if match and match.group(1) in self._registry:
                outcome = self._registry[match.group(1)].outcome
            text = judge_description(description, self.rules, outcome)
            return GatewayResponse(text=text, model_id="sim-judge-v1", backend="simulated")
        return self._remote_call(
            {"task": "judge", "prompt": prompt.body, "media_url": None,
             "frames": None, "text": description}
        )

    def diagnose_direct(self, subject: CaseRecord | FrameSet, prompt: PromptText) -> GatewayResponse:
        """Single-call diagnosis from a whole video or a sampled frame set."""
        if isinstance(subject, FrameSet):
            if not subject.timestamps:
                raise EmptyFrameSet("diagnose_direct requires at least one frame")
            case = subject.case
            media_url, frames = None, subject.refs
        else:
            case = subject
            media_url, frames = case.video_path, None
        self._enforce_gate(case)
        if self.cfg.backend == "simulated":
            synthetic = self.synthetic_case(case.case_id)
            text = render_transcript(case.case_id, synthetic.spec, synthetic.outcome, self.rules)
            return GatewayResponse(text=text, model_id="sim-diagnose-v1", backend="simulated")
        return self._remote_call(
            {"task": "diagnose", "prompt": prompt.body, "media_url": media_url,
             "frames": frames, "text": None}
        )

    # -- internals ---------------------------------------------------------

    def _enforce_gate(self, case: CaseRecord) -> None:
        # the gate runs before any network activity, never after
        if self.cfg.backend != "remote":
            return
        decision = check_privacy_gate(case)
        if not decision.passed:
            raise PrivacyGateRejected(
                f"case {case.case_id} fails the privacy gate: {', '.join(decision.reasons)}"
            )

    def _remote_call(self, payload: dict) -> GatewayResponse:
        if not self.cfg.endpoint:
            raise ValueError("remote backend requires an endpoint")
        headers = {"Content-Type": "application/json"}
        if self.cfg.api_key:
            headers["Authorization"] = f"Bearer {self.cfg.api_key}"
        started = self._clock()
        attempts = 0
        last_status: int | None = None
        while attempts <= self.cfg.max_retries:
            attempts += 1
            self._limiter.wait()
            try:
                status, body = self._transport(
                    self.cfg.endpoint, payload, headers, self.cfg.timeout_s
                )
            except GatewayTimeout:
                last_status = None
                continue
            if status == 200:
                text = body.get("transcript")
                if not text or not isinstance(text, str):
                    raise MalformedResponse(f"response missing transcript: {body!r}")
                return GatewayResponse(
                    text=text,
                    model_id=str(body.get("model_id", "unknown")),
                    backend="remote",
                    attempts=attempts,
                    latency_s=self._clock() - started,
                )
            last_status = status
            if status == 429 or status >= 500:
                continue
            raise MalformedResponse(f"backend rejected request: HTTP {status}")
        if last_status == 429:
            raise RateLimited(f"rate limited after {attempts} attempts")
        raise GatewayTimeout(f"no successful response after {attempts} attempts")
