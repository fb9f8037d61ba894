/** Typed client over the grading HTTP API.
 *
 * The fetch implementation is injectable so every flow is testable against a
 * scripted server. Server-side errors are surfaced verbatim: the API is the
 * authority on workflow rules (duplicates, blindness, adjudication guards).
 */

import type {
  AdjudicationResult,
  CaseDetail,
  CaseSummary,
  Progress,
  Rubric,
  Status,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    if (body && typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return `HTTP ${response.status}`;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as T;
  }

  listCases(filter: { status?: Status; framework?: string } = {}): Promise<{ cases: CaseSummary[] }> {
    const params = new URLSearchParams();
    if (filter.status) params.set("status", filter.status);
    if (filter.framework) params.set("framework", filter.framework);
    const query = params.toString();
    return this.request(`/api/cases${query ? `?${query}` : ""}`);
  }

  caseDetail(caseId: string, framework: string, raterId?: string): Promise<CaseDetail> {
    const params = new URLSearchParams({ framework });
    if (raterId) params.set("rater_id", raterId);
    return this.request(`/api/cases/${encodeURIComponent(caseId)}?${params}`);
  }

  submitGrade(
    caseId: string,
    body: { framework: string; rater_id: string; a: number; r: number; d: number; notes: string },
  ): Promise<{ status: Status }> {
    return this.request(`/api/cases/${encodeURIComponent(caseId)}/grades`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  submitAdjudication(
    caseId: string,
    body: { framework: string; a: number; r: number; d: number; participants: string[] },
  ): Promise<AdjudicationResult> {
    return this.request(`/api/cases/${encodeURIComponent(caseId)}/adjudication`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  progress(): Promise<Progress> {
    return this.request("/api/progress");
  }

  rubric(): Promise<Rubric> {
    return this.request("/api/rubric");
  }
}
