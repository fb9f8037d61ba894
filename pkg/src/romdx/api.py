"""HTTP API for the grading workflow, consumed by the review UI.

The server is the sole enforcer of rater blindness: another rater's scores
are never part of any response while a case is still being independently
graded. Built UI assets, when present, are served from the same port so the
clinician setup needs no cross-origin configuration.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import (
    DuplicateRater,
    GradingComplete,
    GradingError,
    InvalidScore,
    NotInDisagreement,
    TooFewParticipants,
    UnknownCase,
)
from .grading import GradingRecord, GradingStore
from .ingest import CaseRecord, check_privacy_gate
from .pipelines import CaseResult, ResultsStore
from .workspace import Workspace


class GradeBody(BaseModel):
    framework: str
    rater_id: str
    a: float
    r: float
    d: float
    notes: str = ""


class AdjudicationBody(BaseModel):
    framework: str
    a: float
    r: float
    d: float
    participants: list[str]


def _sections(result: CaseResult) -> dict:
    return {
        "movements": [obs.to_json_dict() for obs in result.output.observations],
        "judgments": [judgment.to_json_dict() for judgment in result.output.judgments],
        "final": result.output.final,
    }


def _grade_dict(record: GradingRecord) -> dict:
    return {
        "rater_id": record.rater_id,
        "a": record.a,
        "r": record.r,
        "d": record.d,
        "notes": record.notes,
        "submitted_at": record.submitted_at,
    }


def load_rubric() -> dict:
    text = resources.files("romdx.data").joinpath("rubric.json").read_text(encoding="utf-8")
    return json.loads(text)


def create_app(
    workspace: Workspace,
    hide_raw: bool = False,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="romdx grading API")

    results: ResultsStore = workspace.results_store()
    by_key: dict[tuple[str, str], CaseResult] = {}
    for framework in ("baseline", "dvdx", "hmvdx"):
        for result in results.load(framework):
            by_key[(result.case_id, framework)] = result
    records: dict[str, CaseRecord] = {}
    if workspace.has_cases():
        for case in workspace.load_cases().cases:
            records[case.case_id] = case
    grades: GradingStore = workspace.grading_store()

    def _error_status(exc: GradingError) -> int:
        if isinstance(exc, UnknownCase):
            return 404
        if isinstance(exc, InvalidScore):
            return 400
        if isinstance(exc, (DuplicateRater, GradingComplete, NotInDisagreement, TooFewParticipants)):
            return 409
        return 400

    @app.exception_handler(GradingError)
    async def _grading_error(request: Request, exc: GradingError):
        return JSONResponse(status_code=_error_status(exc), content={"detail": str(exc)})

    @app.get("/api/cases")
    def list_cases(
        status: str | None = Query(default=None),
        framework: str | None = Query(default=None),
    ):
        rows = []
        for (case_id, fw), result in sorted(by_key.items()):
            if framework and fw != framework:
                continue
            case_status = grades.status(case_id, fw)
            if status and case_status != status:
                continue
            rows.append(
                {"case_id": case_id, "framework": fw, "status": case_status,
                 "final": result.output.final}
            )
        return {"cases": rows}

    @app.get("/api/cases/{case_id}")
    def case_detail(
        case_id: str,
        framework: str = Query(),
        rater_id: str | None = Query(default=None),
    ):
        result = by_key.get((case_id, framework))
        if result is None:
            raise HTTPException(status_code=404, detail=f"no result for {case_id} / {framework}")
        status = grades.status(case_id, framework)
        visible = grades.visible_grades(case_id, framework, rater_id)
        my_grade = next((g for g in visible if g.rater_id == rater_id), None)
        record = records.get(case_id)
        video_url = None
        if record is not None and check_privacy_gate(record).passed:
            video_url = record.video_path
        payload = {
            "case_id": case_id,
            "framework": framework,
            "video_url": video_url,
            "sections": _sections(result),
            "raw": None if hide_raw else result.output.raw,
            "status": status,
            "reference_label": record.label if record is not None else None,
            "my_grade": _grade_dict(my_grade) if my_grade else None,
            "grades": [
                _grade_dict(g) for g in visible
                if status in ("agreed", "needs_adjudication", "adjudicated")
            ],
        }
        final = grades.final_grade(case_id, framework)
        payload["final_grade"] = (
            {"a": final.a, "r": final.r, "d": final.d, "source": final.source}
            if final is not None and status in ("agreed", "adjudicated")
            else None
        )
        return payload

    @app.post("/api/cases/{case_id}/grades")
    def submit_grade(case_id: str, body: GradeBody):
        status = grades.submit_grade(
            GradingRecord(
                case_id=case_id, framework=body.framework,
                a=body.a, r=body.r, d=body.d,
                rater_id=body.rater_id, notes=body.notes,
            )
        )
        return {"status": status}

    @app.post("/api/cases/{case_id}/adjudication")
    def adjudicate(case_id: str, body: AdjudicationBody):
        grade = grades.adjudicate(
            case_id, body.framework, (body.a, body.r, body.d), tuple(body.participants)
        )
        return {
            "case_id": grade.case_id,
            "framework": grade.framework,
            "a": grade.a,
            "r": grade.r,
            "d": grade.d,
            "source": grade.source,
            "participants": list(grade.participants),
            "status": grades.status(case_id, body.framework),
        }

    @app.get("/api/progress")
    def progress():
        return grades.progress()

    @app.get("/api/rubric")
    def rubric():
        return load_rubric()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
