"""Body-landmark reference ladder used for relative range-of-motion judgments.

All reach thresholds in the rule files and all reach statements in model
transcripts are expressed against this ladder instead of absolute angles or
heights. Landmarks are ordered from highest to lowest on the body; "how high
did the hand get" is answered by naming the closest rung.
"""

from __future__ import annotations

import enum


class Landmark(enum.Enum):
    """Ordered body reference points, highest first."""

    ABOVE_HEAD = "above_head"
    TOP_OF_HEAD = "top_of_head"
    EARLOBE = "earlobe"
    ACROMION = "acromion"
    CHEST = "chest"
    WAIST_ILIAC_CREST = "waist_iliac_crest"
    BUTTOCK = "buttock"
    THIGH = "thigh"

    @property
    def rank(self) -> int:
        """Position on the ladder; 0 is the highest rung."""
        return _LADDER_RANK[self]

    def is_above(self, other: "Landmark") -> bool:
        return self.rank < other.rank

    def is_at_or_below(self, other: "Landmark") -> bool:
        return self.rank >= other.rank

    @property
    def phrase(self) -> str:
        """Human-readable name used in prompts and transcripts."""
        return _PHRASES[self]


#: Ladder order, highest to lowest. The enum declaration order is the ladder
#: order; keep both in sync when adding rungs.
LADDER: tuple[Landmark, ...] = tuple(Landmark)

_LADDER_RANK = {mark: i for i, mark in enumerate(LADDER)}

_PHRASES = {
    Landmark.ABOVE_HEAD: "above head",
    Landmark.TOP_OF_HEAD: "top of the head",
    Landmark.EARLOBE: "earlobe",
    Landmark.ACROMION: "acromion",
    Landmark.CHEST: "chest",
    Landmark.WAIST_ILIAC_CREST: "waist (iliac crest)",
    Landmark.BUTTOCK: "buttock",
    Landmark.THIGH: "thigh",
}

#: Reach value for a movement the subject could not perform at all
#: (e.g. the hand never reaches the head in the hands-on-head screen).
UNREACHABLE = "unreachable"


def parse_landmark(name: str) -> Landmark:
    """Resolve a landmark identifier, accepting enum values and phrases."""
    token = name.strip().lower().replace("-", "_").replace(" ", "_")
    for mark in LADDER:
        if token == mark.value:
            return mark
    # tolerate phrase forms ("top of the head", "waist (iliac crest)")
    collapsed = "".join(ch for ch in token if ch.isalnum())
    for mark in LADDER:
        if collapsed == "".join(ch for ch in mark.phrase if ch.isalnum()):
            return mark
    from .errors import UnknownLandmark

    raise UnknownLandmark(f"unknown landmark: {name!r}")


def asymmetry_steps(left: Landmark | str, right: Landmark | str) -> int:
    """Ladder-step distance between two reaches.

    An unreachable side counts as maximally distant from any reachable rung,
    and two unreachable sides are symmetric.
    """
    if left == UNREACHABLE and right == UNREACHABLE:
        return 0
    if left == UNREACHABLE or right == UNREACHABLE:
        return len(LADDER)
    assert isinstance(left, Landmark) and isinstance(right, Landmark)
    return abs(left.rank - right.rank)
