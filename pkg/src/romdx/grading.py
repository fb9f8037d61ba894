"""Rubric grading store: blind dual rating, adjudication, auto-grading.

Scores per (case, framework):

  a  integrity of movement recognition, in {0, 0.5, 1}
  r  rationality of movement judgment, in {0, 0.5, 1}
  d  accuracy of the final judgment, in {0, 1}

Two raters grade independently and blind; equal triples close the case as
agreed, unequal ones route it to adjudication. Everything is persisted as an
append-only JSON Lines event log so clinician decisions stay auditable.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    DuplicateRater,
    GradingComplete,
    InvalidScore,
    NotInDisagreement,
    NotSynthetic,
    RuleParseError,
    TooFewParticipants,
    UnknownCase,
)

A_R_VALUES = (0.0, 0.5, 1.0)
D_VALUES = (0.0, 1.0)

STATUSES = ("awaiting_first", "awaiting_second", "agreed", "needs_adjudication", "adjudicated")


def _check_scores(a: float, r: float, d: float) -> None:
    if a not in A_R_VALUES:
        raise InvalidScore(f"a must be one of {A_R_VALUES}, got {a}")
    if r not in A_R_VALUES:
        raise InvalidScore(f"r must be one of {A_R_VALUES}, got {r}")
    if d not in D_VALUES:
        raise InvalidScore(f"d must be one of {D_VALUES}, got {d}")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class GradingRecord:
    case_id: str
    framework: str
    a: float
    r: float
    d: float
    rater_id: str
    notes: str = ""
    submitted_at: str = ""

    def triple(self) -> tuple[float, float, float]:
        return (self.a, self.r, self.d)

    def to_json_dict(self) -> dict:
        return {
            "kind": "grade",
            "case_id": self.case_id,
            "framework": self.framework,
            "a": self.a,
            "r": self.r,
            "d": self.d,
            "rater_id": self.rater_id,
            "notes": self.notes,
            "submitted_at": self.submitted_at,
        }


@dataclass(frozen=True)
class AdjudicatedGrade:
    case_id: str
    framework: str
    a: float
    r: float
    d: float
    source: str                      # agreement | adjudication | auto_simulated
    participants: tuple[str, ...]
    submitted_at: str = ""

    def __post_init__(self) -> None:
        assert self.source in ("agreement", "adjudication", "auto_simulated")
        if self.source == "adjudication":
            assert len(self.participants) >= 2

    def to_json_dict(self) -> dict:
        return {
            "kind": "adjudication",
            "case_id": self.case_id,
            "framework": self.framework,
            "a": self.a,
            "r": self.r,
            "d": self.d,
            "source": self.source,
            "participants": list(self.participants),
            "submitted_at": self.submitted_at,
        }


class GradingStore:
    """Append-only grade log with a derived status per (case, framework).

    `known_keys` is the set of (case_id, framework) pairs present in the
    results store; grades for anything else are rejected. Writes are
    serialized; reads see consistent snapshots.
    """

    def __init__(self, path: str | Path, known_keys: set[tuple[str, str]] | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.known_keys = known_keys
        self._lock = threading.Lock()
        self._grades: dict[tuple[str, str], list[GradingRecord]] = {}
        self._adjudications: dict[tuple[str, str], AdjudicatedGrade] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._absorb(json.loads(line))

    # -- event plumbing ------------------------------------------------------

    def _absorb(self, event: dict) -> None:
        kind = event.get("kind")
        if kind == "grade":
            record = GradingRecord(
                case_id=event["case_id"], framework=event["framework"],
                a=float(event["a"]), r=float(event["r"]), d=float(event["d"]),
                rater_id=event["rater_id"], notes=event.get("notes", ""),
                submitted_at=event.get("submitted_at", ""),
            )
            _check_scores(record.a, record.r, record.d)
            self._grades.setdefault((record.case_id, record.framework), []).append(record)
        elif kind == "adjudication":
            grade = AdjudicatedGrade(
                case_id=event["case_id"], framework=event["framework"],
                a=float(event["a"]), r=float(event["r"]), d=float(event["d"]),
                source=event.get("source", "adjudication"),
                participants=tuple(event.get("participants", ())),
                submitted_at=event.get("submitted_at", ""),
            )
            _check_scores(grade.a, grade.r, grade.d)
            self._adjudications[(grade.case_id, grade.framework)] = grade
        else:
            raise RuleParseError(f"unknown grading event kind: {kind!r}")

    def _append(self, event: dict) -> None:
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, sort_keys=True) + "\n")
            handle.flush()
        self._absorb(event)

    # -- queries ------------------------------------------------------------

    def status(self, case_id: str, framework: str) -> str:
        key = (case_id, framework)
        if key in self._adjudications:
            return "adjudicated"
        grades = self._grades.get(key, [])
        if len(grades) == 0:
            return "awaiting_first"
        if len(grades) == 1:
            return "awaiting_second"
        first, second = grades[0], grades[1]
        return "agreed" if first.triple() == second.triple() else "needs_adjudication"

    def grades(self, case_id: str, framework: str) -> list[GradingRecord]:
        return list(self._grades.get((case_id, framework), []))

    def visible_grades(self, case_id: str, framework: str, rater_id: str | None) -> list[GradingRecord]:
        """Blindness rule: another rater's scores appear only once both are in."""
        status = self.status(case_id, framework)
        records = self.grades(case_id, framework)
        if status in ("agreed", "needs_adjudication", "adjudicated"):
            return records
        return [record for record in records if record.rater_id == rater_id]

    def final_grade(self, case_id: str, framework: str) -> AdjudicatedGrade | None:
        key = (case_id, framework)
        if key in self._adjudications:
            return self._adjudications[key]
        grades = self._grades.get(key, [])
        if len(grades) >= 2 and grades[0].triple() == grades[1].triple():
            first, second = grades[0], grades[1]
            return AdjudicatedGrade(
                case_id=case_id, framework=framework,
                a=first.a, r=first.r, d=first.d,
                source="agreement", participants=(first.rater_id, second.rater_id),
                submitted_at=second.submitted_at,
            )
        return None

    def progress(self) -> dict[str, int]:
        keys = set(self._grades) | set(self._adjudications)
        if self.known_keys is not None:
            keys |= self.known_keys
        counts = {status: 0 for status in STATUSES}
        for case_id, framework in keys:
            counts[self.status(case_id, framework)] += 1
        return counts

    # -- commands ------------------------------------------------------------

    def submit_grade(self, record: GradingRecord) -> str:
        with self._lock:
            _check_scores(record.a, record.r, record.d)
            key = (record.case_id, record.framework)
            if self.known_keys is not None and key not in self.known_keys:
                raise UnknownCase(f"no result for case {record.case_id} / {record.framework}")
            status = self.status(record.case_id, record.framework)
            if status not in ("awaiting_first", "awaiting_second"):
                raise GradingComplete(
                    f"case {record.case_id} / {record.framework} already has two grades"
                )
            if any(g.rater_id == record.rater_id for g in self.grades(*key)):
                raise DuplicateRater(
                    f"rater {record.rater_id} already graded {record.case_id} / {record.framework}"
                )
            if not record.submitted_at:
                record = replace(record, submitted_at=_now())
            self._append(record.to_json_dict())
            return self.status(record.case_id, record.framework)

    def adjudicate(
        self,
        case_id: str,
        framework: str,
        final: tuple[float, float, float],
        participants: tuple[str, ...] | list[str],
    ) -> AdjudicatedGrade:
        with self._lock:
            a, r, d = final
            _check_scores(a, r, d)
            if len(participants) < 2:
                raise TooFewParticipants("adjudication needs at least two participants")
            status = self.status(case_id, framework)
            if status != "needs_adjudication":
                raise NotInDisagreement(
                    f"case {case_id} / {framework} is {status}, not needs_adjudication"
                )
            grade = AdjudicatedGrade(
                case_id=case_id, framework=framework, a=a, r=r, d=d,
                source="adjudication", participants=tuple(participants),
                submitted_at=_now(),
            )
            self._append(grade.to_json_dict())
            return grade

    def auto_grade_simulated(self, case_result, synthetic) -> AdjudicatedGrade:
        """Grade a synthetic case from its recorded defect bookkeeping.

        a and r come straight from the injector's records; d is 1 exactly when
        the parsed final matches the oracle label and is not invalid.
        """
        with self._lock:
            for attr in ("expected_a", "expected_r", "record"):
                if not hasattr(synthetic, attr):
                    raise NotSynthetic("auto grading needs synthetic-corpus bookkeeping")
            if synthetic.record.case_id != case_result.case_id:
                raise NotSynthetic(
                    f"bookkeeping is for {synthetic.record.case_id}, result is {case_result.case_id}"
                )
            key = (case_result.case_id, case_result.framework)
            existing = self._adjudications.get(key)
            if existing is not None and existing.source == "auto_simulated":
                return existing
            if self._grades.get(key) or existing is not None:
                raise GradingComplete(
                    f"case {case_result.case_id} / {case_result.framework} already graded by raters"
                )
            truth = synthetic.record.label
            final = case_result.final
            d = 1.0 if final != "invalid" and (final == "positive") == (truth == "abnormal") else 0.0
            grade = AdjudicatedGrade(
                case_id=case_result.case_id, framework=case_result.framework,
                a=synthetic.expected_a, r=synthetic.expected_r, d=d,
                source="auto_simulated", participants=("sim-oracle",),
                submitted_at=_now(),
            )
            self._append(grade.to_json_dict())
            return grade

    # -- export / import -----------------------------------------------------

    def export_gradings(
        self,
        path: str | Path,
        frameworks: set[str] | None = None,
        case_ids: set[str] | None = None,
    ) -> int:
        """Write matching events to a grading file; returns record count."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with path.open("w", encoding="utf-8") as handle:
            for key in sorted(set(self._grades) | set(self._adjudications)):
                case_id, framework = key
                if frameworks is not None and framework not in frameworks:
                    continue
                if case_ids is not None and case_id not in case_ids:
                    continue
                for record in self._grades.get(key, []):
                    handle.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")
                    count += 1
                if key in self._adjudications:
                    handle.write(
                        json.dumps(self._adjudications[key].to_json_dict(), sort_keys=True) + "\n"
                    )
                    count += 1
        return count

    def import_gradings(self, path: str | Path) -> int:
        """Replay a grading file through full validation; returns record count."""
        path = Path(path)
        if not path.exists():
            raise RuleParseError(f"grading file not found: {path}")
        count = 0
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RuleParseError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            kind = event.get("kind")
            if kind == "grade":
                self.submit_grade(
                    GradingRecord(
                        case_id=event["case_id"], framework=event["framework"],
                        a=float(event["a"]), r=float(event["r"]), d=float(event["d"]),
                        rater_id=event["rater_id"], notes=event.get("notes", ""),
                        submitted_at=event.get("submitted_at", ""),
                    )
                )
            elif kind == "adjudication":
                source = event.get("source", "adjudication")
                with self._lock:
                    _check_scores(float(event["a"]), float(event["r"]), float(event["d"]))
                    status = self.status(event["case_id"], event["framework"])
                    if source == "adjudication":
                        if len(event.get("participants", ())) < 2:
                            raise TooFewParticipants(
                                f"{path}:{lineno}: adjudication needs at least two participants"
                            )
                        if status != "needs_adjudication":
                            raise NotInDisagreement(
                                f"{path}:{lineno}: case is {status}, not needs_adjudication"
                            )
                    elif status != "awaiting_first":
                        raise GradingComplete(
                            f"{path}:{lineno}: auto grade conflicts with existing grades"
                        )
                    self._append(event)
            else:
                raise RuleParseError(f"{path}:{lineno}: unknown event kind {kind!r}")
            count += 1
        return count
