"""Canonical transcript grammar shared by the simulated backend and the parser.

Transcripts carry three sentinel sections; the movement and judgment lines
inside them follow a landmark-relative phrasing that the parser can invert.
Remote models are asked (via the prompts) to emit the same shape, but the
parser stays tolerant: anything it cannot place is kept, never dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import UnknownLandmark
from .ladder import UNREACHABLE, Landmark, parse_landmark
from .prompts import movement_phrase, parse_movement

SENTINEL_MOVEMENTS = "== MOVEMENTS =="
SENTINEL_JUDGMENTS = "== JUDGMENTS =="
SENTINEL_FINAL = "== FINAL =="

SIDES = ("left", "right", "bilateral", "unspecified")

#: Free-form compound actions the reasoning stage cannot decompose into
#: the standard evaluative movements.
_COMPOUND_HINTS = ("circular", "circle", "swing", "swinging", "wave", "waving")


def reach_phrase(reach: Landmark | str) -> str:
    if reach == UNREACHABLE:
        return "cannot reach the target"
    assert isinstance(reach, Landmark)
    if reach is Landmark.ABOVE_HEAD:
        return "reaches above head"
    return f"reaches the {reach.phrase}"


def movement_line(
    kind: str,
    left_reach: Landmark | str,
    right_reach: Landmark | str,
    symmetry: str = "n/a",          # symmetric | affected_lower:<side> | n/a
    smoothness: str = "n/a",        # smooth | jerky | n/a
) -> str:
    parts = [
        f"left hand {reach_phrase(left_reach)}",
        f"right hand {reach_phrase(right_reach)}",
    ]
    if symmetry == "symmetric":
        parts.append("symmetric")
    elif symmetry.startswith("affected_lower:"):
        side = symmetry.split(":", 1)[1]
        parts.append(f"asymmetric, {side} side lower")
    if smoothness in ("smooth", "jerky"):
        parts.append(f"movement {smoothness}")
    return f"- {movement_phrase(kind)}: " + "; ".join(parts)


def compensation_line(signs: tuple[str, ...] | frozenset[str]) -> str:
    ordered = sorted(sign.replace("_", " ") for sign in signs)
    return "- compensation signs: " + (", ".join(ordered) if ordered else "none")


def judgment_line(kind: str, verdict: str, evidence: str) -> str:
    return f"- {movement_phrase(kind)}: {verdict} ({evidence})"


def split_sections(raw: str) -> dict[str, list[str]]:
    """Split a transcript on the sentinel lines.

    Returns lists of lines keyed by "preamble", "movements", "judgments",
    "final"; sections whose sentinel is absent are missing from the dict.
    """
    sections: dict[str, list[str]] = {"preamble": []}
    current = "preamble"
    for line in raw.splitlines():
        stripped = line.strip()
        if stripped == SENTINEL_MOVEMENTS:
            current = "movements"
            sections[current] = []
        elif stripped == SENTINEL_JUDGMENTS:
            current = "judgments"
            sections[current] = []
        elif stripped == SENTINEL_FINAL:
            current = "final"
            sections[current] = []
        else:
            sections[current].append(line)
    return sections


_REACH_CLAUSE = re.compile(
    r"^(?:the\s+)?(?P<side>left|right|both|bilateral)?\s*(?:hands?|arms?)?\s*"
    r"(?:(?P<cannot>cannot|can\s*not|unable\s+to|fails?\s+to)\s+)?"
    r"(?:reach(?:es)?|lifts?\s+to|raises?\s+to|rises?\s+to|gets?\s+to)\s+"
    r"(?:only\s+)?(?:up\s+to\s+)?(?:the\s+)?(?P<target>.+?)[.\s]*$",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class ReachClause:
    side: str                    # left | right | bilateral | unspecified
    reach: Landmark | str | None  # Landmark, UNREACHABLE, or None if unparseable


def parse_reach_clause(clause: str) -> ReachClause | None:
    """Parse one "<side> hand reaches <landmark>" clause; None if not a reach."""
    match = _REACH_CLAUSE.match(clause.strip())
    if not match:
        return None
    side = (match.group("side") or "unspecified").lower()
    if side == "both":
        side = "bilateral"
    if match.group("cannot"):
        return ReachClause(side=side, reach=UNREACHABLE)
    target = match.group("target").strip().rstrip(".,;")
    if target.lower().startswith("above head"):
        return ReachClause(side=side, reach=Landmark.ABOVE_HEAD)
    if "target" in target.lower() or "cannot" in target.lower():
        return ReachClause(side=side, reach=UNREACHABLE)
    try:
        return ReachClause(side=side, reach=parse_landmark(target))
    except UnknownLandmark:
        return ReachClause(side=side, reach=None)


@dataclass(frozen=True)
class MovementLine:
    kind: str | None             # vocabulary kind, or None when unrecognized
    name: str                    # the movement wording as written
    reaches: tuple[ReachClause, ...]
    symmetry: str                # symmetric | affected_lower:<side> | n/a
    smoothness: str              # smooth | jerky | n/a
    compound: bool               # looks like an unsplit compound action


def parse_movement_line(line: str) -> MovementLine | None:
    """Parse one "- <movement>: ..." line; None if the line has no such shape."""
    stripped = line.strip()
    if not stripped.startswith(("-", "*")):
        return None
    stripped = stripped.lstrip("-* ").strip()
    if ":" not in stripped:
        return None
    name, _, rest = stripped.partition(":")
    name = name.strip()
    kind = parse_movement(name)
    compound = kind is None and any(hint in name.lower() for hint in _COMPOUND_HINTS)
    reaches: list[ReachClause] = []
    symmetry = "n/a"
    smoothness = "n/a"
    for clause in rest.split(";"):
        clause = clause.strip()
        if not clause:
            continue
        lowered = clause.lower()
        if "asymmetric" in lowered or "side lower" in lowered:
            side_match = re.search(r"\b(left|right)\b", lowered)
            symmetry = f"affected_lower:{side_match.group(1)}" if side_match else "affected_lower:unspecified"
            continue
        if "symmetric" in lowered:
            symmetry = "symmetric"
            continue
        if "jerky" in lowered:
            smoothness = "jerky"
            continue
        if "smooth" in lowered:
            smoothness = "smooth"
            continue
        parsed = parse_reach_clause(clause)
        if parsed is not None:
            reaches.append(parsed)
    return MovementLine(
        kind=kind,
        name=name,
        reaches=tuple(reaches),
        symmetry=symmetry,
        smoothness=smoothness,
        compound=compound,
    )


_COMP_LINE = re.compile(r"^[-*]?\s*compensation signs?(?:\s+observed)?\s*:\s*(?P<signs>.+)$", re.IGNORECASE)


def parse_compensation_line(line: str) -> frozenset[str] | None:
    """Parse the "- compensation signs: ..." line; None if this is not one."""
    match = _COMP_LINE.match(line.strip())
    if not match:
        return None
    body = match.group("signs").strip().rstrip(".")
    if body.lower() in ("none", "none observed", "no", "-"):
        return frozenset()
    return frozenset(part.strip().replace(" ", "_") for part in body.split(",") if part.strip())


_JUDGMENT = re.compile(
    r"^(?P<name>[^:]+):\s*(?P<verdict>limited|normal|restricted|impaired|unrestricted|intact|indeterminate|unclear)\b\s*"
    r"(?:\((?P<evidence>.*)\))?\s*$",
    re.IGNORECASE,
)

_VERDICT_MAP = {
    "limited": "limited",
    "restricted": "limited",
    "impaired": "limited",
    "normal": "normal",
    "unrestricted": "normal",
    "intact": "normal",
    "indeterminate": "indeterminate",
    "unclear": "indeterminate",
}


@dataclass(frozen=True)
class JudgmentLine:
    kind: str | None
    name: str
    verdict: str                 # limited | normal | indeterminate
    evidence: str


def parse_judgment_line(line: str) -> JudgmentLine | None:
    stripped = line.strip().lstrip("-* ").strip()
    if not stripped:
        return None
    match = _JUDGMENT.match(stripped)
    if not match:
        if ":" in stripped:
            name, _, rest = stripped.partition(":")
            return JudgmentLine(
                kind=parse_movement(name.strip()),
                name=name.strip(),
                verdict="indeterminate",
                evidence=rest.strip(),
            )
        return None
    name = match.group("name").strip()
    return JudgmentLine(
        kind=parse_movement(name),
        name=name,
        verdict=_VERDICT_MAP[match.group("verdict").lower()],
        evidence=(match.group("evidence") or "").strip(),
    )


def parse_final_lines(lines: list[str]) -> str:
    """Map the FINAL section body to positive/negative/invalid."""
    for line in lines:
        token = line.strip().upper().rstrip(".")
        if token == "POSITIVE":
            return "positive"
        if token == "NEGATIVE":
            return "negative"
    return "invalid"
