/** In-memory test double implementing the grading API contract:
 * blind dual rating, duplicate rejection, adjudication guards.
 */

import type { CaseDetail, GradeView, Rubric, Status } from "../src/types.js";
import type { FetchLike } from "../src/api.js";

interface StoredCase {
  detailBase: Omit<CaseDetail, "status" | "my_grade" | "grades" | "final_grade">;
  grades: GradeView[];
  adjudicated: { a: number; r: number; d: number; source: string } | null;
}

const A_R = [0, 0.5, 1];
const D = [0, 1];

export function sampleDetailBase(caseId: string, framework = "hmvdx") {
  return {
    case_id: caseId,
    framework,
    video_url: `videos/${caseId}.mp4.masked.mp4`,
    sections: {
      movements: [
        {
          kind: "forward_elevation",
          side: "right",
          reach: "acromion",
          symmetry_note: "affected_lower",
          compensation: ["shoulder_shrugging"],
          smoothness: "jerky",
        },
      ],
      judgments: [
        { kind: "forward_elevation", verdict: "limited", evidence: "right hand reaches no higher than the acromion" },
      ],
      final: "positive",
    },
    raw: "== MOVEMENTS ==\n...\n== FINAL ==\nPOSITIVE",
    reference_label: "abnormal",
  };
}

export class MockServer {
  cases = new Map<string, StoredCase>();
  rubric: Rubric;
  requests: { method: string; path: string }[] = [];

  constructor(rubric: Rubric, caseIds: string[] = ["sim-0000", "sim-0001"]) {
    this.rubric = rubric;
    for (const caseId of caseIds) {
      this.cases.set(caseId, {
        detailBase: sampleDetailBase(caseId),
        grades: [],
        adjudicated: null,
      });
    }
  }

  status(stored: StoredCase): Status {
    if (stored.adjudicated) return "adjudicated";
    if (stored.grades.length === 0) return "awaiting_first";
    if (stored.grades.length === 1) return "awaiting_second";
    const [first, second] = stored.grades;
    const equal = first.a === second.a && first.r === second.r && first.d === second.d;
    return equal ? "agreed" : "needs_adjudication";
  }

  fetch: FetchLike = async (input, init) => {
    const url = new URL(input, "http://test.local");
    const method = init?.method ?? "GET";
    this.requests.push({ method, path: url.pathname + url.search });
    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
      });

    if (method === "GET" && url.pathname === "/api/rubric") {
      return json(this.rubric);
    }
    if (method === "GET" && url.pathname === "/api/progress") {
      const counts: Record<string, number> = {
        awaiting_first: 0, awaiting_second: 0, agreed: 0,
        needs_adjudication: 0, adjudicated: 0,
      };
      for (const stored of this.cases.values()) counts[this.status(stored)] += 1;
      return json(counts);
    }
    if (method === "GET" && url.pathname === "/api/cases") {
      const status = url.searchParams.get("status");
      const framework = url.searchParams.get("framework");
      const rows = [...this.cases.values()]
        .map((stored) => ({
          case_id: stored.detailBase.case_id,
          framework: stored.detailBase.framework,
          status: this.status(stored),
          final: stored.detailBase.sections.final,
        }))
        .filter((row) => (!status || row.status === status) && (!framework || row.framework === framework));
      return json({ cases: rows });
    }

    const detailMatch = url.pathname.match(/^\/api\/cases\/([^/]+)$/);
    if (method === "GET" && detailMatch) {
      const stored = this.cases.get(decodeURIComponent(detailMatch[1]));
      if (!stored) return json({ detail: "unknown case" }, 404);
      const raterId = url.searchParams.get("rater_id");
      const status = this.status(stored);
      const open = status === "agreed" || status === "needs_adjudication" || status === "adjudicated";
      return json({
        ...stored.detailBase,
        status,
        my_grade: stored.grades.find((grade) => grade.rater_id === raterId) ?? null,
        grades: open ? stored.grades : [],
        final_grade: stored.adjudicated,
      });
    }

    const gradeMatch = url.pathname.match(/^\/api\/cases\/([^/]+)\/grades$/);
    if (method === "POST" && gradeMatch) {
      const stored = this.cases.get(decodeURIComponent(gradeMatch[1]));
      if (!stored) return json({ detail: "unknown case" }, 404);
      const body = JSON.parse(String(init?.body));
      if (!A_R.includes(body.a) || !A_R.includes(body.r) || !D.includes(body.d)) {
        return json({ detail: "invalid score" }, 400);
      }
      if (stored.grades.some((grade) => grade.rater_id === body.rater_id)) {
        return json({ detail: `rater ${body.rater_id} already graded this case` }, 409);
      }
      if (stored.grades.length >= 2 || stored.adjudicated) {
        return json({ detail: "case already has two grades" }, 409);
      }
      stored.grades.push({
        rater_id: body.rater_id, a: body.a, r: body.r, d: body.d,
        notes: body.notes ?? "", submitted_at: "2026-01-01T00:00:00Z",
      });
      return json({ status: this.status(stored) });
    }

    const adjMatch = url.pathname.match(/^\/api\/cases\/([^/]+)\/adjudication$/);
    if (method === "POST" && adjMatch) {
      const stored = this.cases.get(decodeURIComponent(adjMatch[1]));
      if (!stored) return json({ detail: "unknown case" }, 404);
      const body = JSON.parse(String(init?.body));
      if ((body.participants ?? []).length < 2) {
        return json({ detail: "adjudication needs at least two participants" }, 409);
      }
      if (this.status(stored) !== "needs_adjudication") {
        return json({ detail: "case is not in disagreement" }, 409);
      }
      stored.adjudicated = { a: body.a, r: body.r, d: body.d, source: "adjudication" };
      return json({
        case_id: stored.detailBase.case_id,
        framework: body.framework,
        a: body.a, r: body.r, d: body.d,
        source: "adjudication",
        participants: body.participants,
        status: this.status(stored),
      });
    }

    return json({ detail: "no such route" }, 404);
  };
}
