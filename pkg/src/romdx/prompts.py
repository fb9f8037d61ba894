"""Compile versioned movement rule sets into the three pipeline prompts.

Prompt kinds:
  A - video understanding plus diagnosis, for the single-call pipelines
  B - movement description only, for the first stage of the two-stage pipeline
  C - text judgment against the rules, for the second stage

All reach criteria are relative landmark comparisons; the linter rejects any
numeric-degree or absolute-length phrasing, which measurably degrades model
judgment.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import InvertedThreshold, RuleParseError, UnknownKind
from .ladder import LADDER, Landmark, parse_landmark

MOVEMENT_KINDS = (
    "forward_elevation",
    "hands_on_head",
    "hand_behind_back",
    "external_rotation",
    "abduction",
    "internal_rotation",
)

#: The five recognition dimensions, in analysis order.
RECOGNITION_DIMENSIONS = (
    "movement_recognition",
    "spatial_trajectory",
    "symmetry_comparison",
    "compensation_feature",
    "smoothness",
)

_MOVEMENT_PHRASES = {kind: kind.replace("_", " ") for kind in MOVEMENT_KINDS}


def movement_phrase(kind: str) -> str:
    """Transcript/prompt wording for a movement kind."""
    return _MOVEMENT_PHRASES.get(kind, kind.replace("_", " "))


def parse_movement(phrase: str) -> str | None:
    """Inverse of movement_phrase; None when the wording is not in the vocabulary."""
    token = phrase.strip().lower().replace("-", " ").replace("_", " ")
    for kind in MOVEMENT_KINDS:
        if token == _MOVEMENT_PHRASES[kind]:
            return kind
    return None


@dataclass(frozen=True)
class MovementRule:
    kind: str
    normal_reach: Landmark
    limited_if_at_or_below: Landmark
    requires_cross_validation: bool = False
    bilateral_compare: bool = True

    def __post_init__(self) -> None:
        if self.kind not in MOVEMENT_KINDS:
            raise RuleParseError(f"unknown movement kind: {self.kind!r}")
        if not self.normal_reach.is_above(self.limited_if_at_or_below):
            raise InvertedThreshold(
                f"{self.kind}: normal_reach {self.normal_reach.value} must sit strictly "
                f"above limited_if_at_or_below {self.limited_if_at_or_below.value}"
            )


@dataclass(frozen=True)
class RuleSet:
    version: str
    movements: tuple[MovementRule, ...]
    compensation_signs: tuple[str, ...]
    dimensions: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.movements:
            raise RuleParseError("rule set must define at least one movement")
        if self.dimensions != RECOGNITION_DIMENSIONS:
            raise RuleParseError(
                f"dimensions must be exactly {list(RECOGNITION_DIMENSIONS)}, got {list(self.dimensions)}"
            )
        kinds = [rule.kind for rule in self.movements]
        if len(set(kinds)) != len(kinds):
            raise RuleParseError("duplicate movement kind in rule set")

    def rule_for(self, kind: str) -> MovementRule:
        for rule in self.movements:
            if rule.kind == kind:
                return rule
        raise KeyError(kind)


def _parse_rules_obj(obj: dict) -> RuleSet:
    try:
        version = str(obj["version"])
        raw_movements = obj["movements"]
        signs = tuple(str(sign) for sign in obj["compensation_signs"])
        dimensions = tuple(str(dim) for dim in obj["dimensions"])
    except (KeyError, TypeError) as exc:
        raise RuleParseError(f"rule file missing required key: {exc}") from exc
    if not isinstance(raw_movements, list) or not raw_movements:
        raise RuleParseError("movements must be a non-empty list")
    movements = []
    for raw in raw_movements:
        try:
            movements.append(
                MovementRule(
                    kind=str(raw["kind"]),
                    normal_reach=parse_landmark(str(raw["normal_reach"])),
                    limited_if_at_or_below=parse_landmark(str(raw["limited_if_at_or_below"])),
                    requires_cross_validation=bool(raw.get("requires_cross_validation", False)),
                    bilateral_compare=bool(raw.get("bilateral_compare", True)),
                )
            )
        except (KeyError, TypeError) as exc:
            raise RuleParseError(f"bad movement rule {raw!r}: {exc}") from exc
    return RuleSet(
        version=version,
        movements=tuple(movements),
        compensation_signs=signs,
        dimensions=dimensions,
    )


def load_rule_set(path: str | Path) -> RuleSet:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise RuleParseError(f"rule file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise RuleParseError(f"rule file is not valid JSON: {exc}") from exc
    return _parse_rules_obj(obj)


def default_rule_set() -> RuleSet:
    """The rule set shipped with the package."""
    text = resources.files("romdx.data").joinpath("default_rules.json").read_text(encoding="utf-8")
    return _parse_rules_obj(json.loads(text))


# --- prompt rendering -------------------------------------------------------------


class PromptKind(enum.Enum):
    DIAGNOSE = "A"   # video in, full diagnosis out
    DESCRIBE = "B"   # video in, movement description out
    JUDGE = "C"      # description in, diagnosis out


@dataclass(frozen=True)
class PromptText:
    kind: PromptKind
    body: str
    rule_set_version: str

    @property
    def checksum(self) -> str:
        return hashlib.sha256(self.body.encode("utf-8")).hexdigest()


def _sign_phrase(sign: str) -> str:
    return sign.replace("_", " ")


def _landmark_list() -> str:
    return ", ".join(mark.phrase for mark in LADDER)


def render_rules_block(rules: RuleSet) -> str:
    """The diagnostic-rules section. Shared verbatim by prompt kinds A and C."""
    lines = [f"DIAGNOSTIC RULES (rule set {rules.version})"]
    for rule in rules.movements:
        lines.append(
            f"- {movement_phrase(rule.kind)}: normal if the hand reaches the level of the "
            f"{rule.normal_reach.phrase} or higher; judge limited if the hand reaches no higher "
            f"than the {rule.limited_if_at_or_below.phrase}, or if the movement cannot be "
            f"performed at all."
        )
    bilateral = [rule for rule in rules.movements if rule.bilateral_compare]
    if bilateral:
        names = ", ".join(movement_phrase(rule.kind) for rule in bilateral)
        lines.append(
            f"- For {names}: compare both sides; judge limited if the affected side reaches a "
            f"clearly lower landmark than the healthy side."
        )
    signs = ", ".join(_sign_phrase(sign) for sign in rules.compensation_signs)
    lines.append(
        f"- Compensation signs ({signs}) suggest a possible limitation and must be reported."
    )
    lines.append(
        "- Conclude POSITIVE (suspected shoulder disorder) if any movement is judged limited; "
        "otherwise conclude NEGATIVE."
    )
    return "\n".join(lines)


_OUTPUT_FORMAT = """OUTPUT FORMAT
Answer with exactly three sections, using these sentinel lines verbatim:
== MOVEMENTS ==
one line per recognized movement:
- <movement>: left hand reaches <landmark>; right hand reaches <landmark>
append "; symmetric" or "; asymmetric, <left|right> side lower", and "; movement <smooth|jerky>" where observed.
- compensation signs: <comma-separated signs, or none>
== JUDGMENTS ==
one line per judged movement:
- <movement>: <limited|normal> (<evidence>)
== FINAL ==
a single line: POSITIVE or NEGATIVE."""


def _render_diagnose(rules: RuleSet) -> str:
    cross = [rule for rule in rules.movements if rule.requires_cross_validation]
    cross_lines = "\n".join(
        f"- {movement_phrase(rule.kind)}: re-verify this judgment against a second, independent "
        f"moment of the video before accepting it."
        for rule in cross
    )
    sections = [
        "ROLE\nYou are an orthopedic expert assessing shoulder range of motion from a patient video.",
        "REASONING PATH\nWork step by step along the clinical path: first recognize every movement "
        "the subject attempts, then judge each recognized movement against the diagnostic rules, "
        "and only then state the final conclusion.",
        "VISUAL ANALYSIS\nWatch the video frame by frame and track the trajectory of each arm over "
        "the whole clip. Confirm you are following the subject and ignore background motion. "
        "Describe every reach relative to the body landmarks below; never use numeric angles or "
        "measured heights.\nCover all three movement planes of the shoulder: sagittal, frontal, "
        "and transverse.",
        f"REFERENCE LANDMARKS (highest to lowest)\n{_landmark_list()}.",
        render_rules_block(rules),
    ]
    if cross_lines:
        sections.append("CROSS-VALIDATION\n" + cross_lines)
    sections.append(_OUTPUT_FORMAT)
    return "\n\n".join(sections)


def _render_describe(rules: RuleSet) -> str:
    chain = " -> ".join(dim.replace("_", " ") for dim in rules.dimensions)
    signs = ", ".join(_sign_phrase(sign) for sign in rules.compensation_signs)
    sections = [
        "ROLE\nYou are a movement analyst. Describe the action sequence of the subject in the "
        "video using sports medicine terms. Do not diagnose.",
        f"RECOGNITION DIMENSIONS\nWork through the dimensions in order: {chain}.",
        f"REFERENCE FRAME\nExpress every reach relative to these body landmarks, highest to "
        f"lowest: {_landmark_list()}. Never report numeric angles or measured heights.",
        f"SYMMETRY AND SIGNS\nCompare the two sides for every movement and say which side moves "
        f"lower. Report compensation signs such as {signs}, and state whether each movement is "
        f"smooth or jerky. Pay particular attention to the waist and hips when the subject is "
        f"seen from the back.",
        "OUTPUT FORMAT\nBegin with \"Subject: <case id>.\" then one line per movement:\n"
        "- <movement>: left hand reaches <landmark>; right hand reaches <landmark>\n"
        "append \"; symmetric\" or \"; asymmetric, <left|right> side lower\", and "
        "\"; movement <smooth|jerky>\" where observed.\n"
        "Finish with \"- compensation signs: <comma-separated signs, or none>\".",
    ]
    return "\n\n".join(sections)


def _render_judge(rules: RuleSet) -> str:
    signs = ", ".join(_sign_phrase(sign) for sign in rules.compensation_signs)
    sections = [
        "ROLE\nYou are an orthopedic expert. You receive a text description of a subject's "
        "shoulder movements written by a video analyst. Judge only what the description states; "
        "do not invent movements it does not mention.",
        render_rules_block(rules),
        f"ABNORMAL SIGNS\nReported compensation signs ({signs}) are supporting evidence of a "
        f"possible limitation; cite them in your judgment evidence where present.",
        _OUTPUT_FORMAT,
    ]
    return "\n\n".join(sections)


_RENDERERS = {
    PromptKind.DIAGNOSE: _render_diagnose,
    PromptKind.DESCRIBE: _render_describe,
    PromptKind.JUDGE: _render_judge,
}


def render_prompt(kind: PromptKind | str, rules: RuleSet) -> PromptText:
    """Compile a prompt from a rule set. Pure: equal inputs give equal bodies."""
    if isinstance(kind, str):
        try:
            kind = PromptKind(kind.upper())
        except ValueError as exc:
            raise UnknownKind(f"unknown prompt kind: {kind!r}") from exc
    renderer = _RENDERERS.get(kind)
    if renderer is None:
        raise UnknownKind(f"unknown prompt kind: {kind!r}")
    return PromptText(kind=kind, body=renderer(rules), rule_set_version=rules.version)


# --- linting -----------------------------------------------------------------------

_DEGREE_PATTERN = re.compile(
    r"\d+(?:\.\d+)?\s*(?:°|deg\b|degs\b|degree\b|degrees\b)", re.IGNORECASE
)
_LENGTH_PATTERN = re.compile(
    r"\d+(?:\.\d+)?\s*(?:cm|mm|centimeters?|centimetres?|millimeters?|millimetres?"
    r"|meters?|metres?|inches|inch|feet|foot)\b",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class LintViolation:
    rule: str       # numeric_degree | absolute_length
    text: str
    position: int


def lint_prompt(text: PromptText | str) -> list[LintViolation]:
    """Flag numeric-degree and absolute-length phrasing.

    Relative phrasing like "higher than the top of the head" passes; ordinal
    words and bare counts are deliberately not flagged.
    """
    body = text.body if isinstance(text, PromptText) else text
    violations = [
        LintViolation(rule="numeric_degree", text=match.group(0), position=match.start())
        for match in _DEGREE_PATTERN.finditer(body)
    ]
    violations.extend(
        LintViolation(rule="absolute_length", text=match.group(0), position=match.start())
        for match in _LENGTH_PATTERN.finditer(body)
    )
    violations.sort(key=lambda violation: violation.position)
    return violations
