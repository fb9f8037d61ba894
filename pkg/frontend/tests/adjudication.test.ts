import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  canSubmitConsensus,
  consensusDefaults,
  disagreements,
  submitConsensus,
} from "../src/adjudication.js";
import { GradeSubmission } from "../src/grading.js";
import type { GradeView } from "../src/types.js";
import { MockServer } from "./mock-server.js";
import { loadSharedRubric } from "./shared-rubric.js";

function grade(raterId: string, a: number, r: number, d: number): GradeView {
  return { rater_id: raterId, a, r, d, notes: "", submitted_at: "" };
}

describe("disagreement analysis", () => {
  it("finds the disputed fields", () => {
    const found = disagreements([grade("r1", 1, 1, 1), grade("r2", 1, 0.5, 1)]);
    expect(found).toEqual([{ field: "r", values: [1, 0.5] }]);
  });

  it("prefills consensus where raters agree and leaves disputes open", () => {
    const selection = consensusDefaults([grade("r1", 1, 1, 1), grade("r2", 1, 0.5, 1)]);
    expect(selection.a).toBe(1);
    expect(selection.r).toBeNull();
    expect(selection.d).toBe(1);
  });
});

describe("consensus submission guards", () => {
  it("requires at least two participants", () => {
    const selection = { a: 1 as const, r: 0.5 as const, d: 1 as const, notes: "" };
    expect(canSubmitConsensus(selection, ["r1"])).toBe(false);
    expect(canSubmitConsensus(selection, ["r1", "r2"])).toBe(true);
  });

  it("requires a complete score triple", () => {
    expect(canSubmitConsensus({ a: 1, r: null, d: 1, notes: "" }, ["r1", "r2"])).toBe(false);
  });

  it("drives the full adjudication round trip", async () => {
    const server = new MockServer(loadSharedRubric());
    const api = new ApiClient("", server.fetch);
    await new GradeSubmission(api, "sim-0000", "hmvdx", "r1").submit({ a: 1, r: 1, d: 1, notes: "" });
    await new GradeSubmission(api, "sim-0000", "hmvdx", "r2").submit({ a: 1, r: 0.5, d: 1, notes: "" });
    const result = await submitConsensus(
      api, "sim-0000", "hmvdx", { a: 1, r: 0.5, d: 1, notes: "" }, ["r1", "r2"],
    );
    expect(result.status).toBe("adjudicated");
    expect(result.r).toBe(0.5);
    const detail = await api.caseDetail("sim-0000", "hmvdx");
    expect(detail.status).toBe("adjudicated");
    expect(detail.final_grade).toEqual({ a: 1, r: 0.5, d: 1, source: "adjudication" });
  });

  it("refuses to post with a single participant", async () => {
    const server = new MockServer(loadSharedRubric());
    const api = new ApiClient("", server.fetch);
    await expect(
      submitConsensus(api, "sim-0000", "hmvdx", { a: 1, r: 0.5, d: 1, notes: "" }, ["r1"]),
    ).rejects.toThrowError(/at least two participants/);
    expect(server.requests).toHaveLength(0);
  });

  it("the server guards adjudication on an agreed case", async () => {
    const server = new MockServer(loadSharedRubric());
    const api = new ApiClient("", server.fetch);
    await new GradeSubmission(api, "sim-0000", "hmvdx", "r1").submit({ a: 1, r: 1, d: 1, notes: "" });
    await new GradeSubmission(api, "sim-0000", "hmvdx", "r2").submit({ a: 1, r: 1, d: 1, notes: "" });
    await expect(
      submitConsensus(api, "sim-0000", "hmvdx", { a: 1, r: 1, d: 1, notes: "" }, ["r1", "r2"]),
    ).rejects.toThrowError(/not in disagreement/);
  });
});
