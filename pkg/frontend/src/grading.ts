/** Grade form model: selection state, validation, and the submission flow.
 *
 * Selectable values are exactly the rubric sets: {0, 0.5, 1} for recognition
 * integrity (a) and judgment rationality (r), {0, 1} for final-judgment
 * accuracy (d). The UI state only flips to submitted after the server
 * confirms with a 2xx; a confirmed submission can never be sent again.
 */

import type { ApiClient } from "./api.js";
import type { BinaryScore, Score, Status } from "./types.js";

export const A_R_CHOICES: Score[] = [0, 0.5, 1];
export const D_CHOICES: BinaryScore[] = [0, 1];

export interface GradeSelection {
  a: Score | null;
  r: Score | null;
  d: BinaryScore | null;
  notes: string;
}

export function emptySelection(): GradeSelection {
  return { a: null, r: null, d: null, notes: "" };
}

export function isScoreValue(field: "a" | "r" | "d", value: number): boolean {
  const allowed: number[] = field === "d" ? D_CHOICES : A_R_CHOICES;
  return allowed.includes(value);
}

/** Client-side validation messages; empty array means submittable. */
export function validateSelection(selection: GradeSelection): string[] {
  const problems: string[] = [];
  if (selection.a === null) problems.push("select a movement recognition score (a)");
  if (selection.r === null) problems.push("select a judgment rationality score (r)");
  if (selection.d === null) problems.push("select a final judgment score (d)");
  return problems;
}

export class ValidationError extends Error {
  constructor(readonly problems: string[]) {
    super(problems.join("; "));
    this.name = "ValidationError";
  }
}

export class GradeSubmission {
  submitted = false;
  inflight = false;

  constructor(
    private readonly api: ApiClient,
    private readonly caseId: string,
    private readonly framework: string,
    private readonly raterId: string,
  ) {}

  get locked(): boolean {
    return this.submitted || this.inflight;
  }

  async submit(selection: GradeSelection): Promise<Status> {
    if (this.locked) {
      throw new ValidationError(["grade already submitted for this case"]);
    }
    const problems = validateSelection(selection);
    if (problems.length > 0) {
      throw new ValidationError(problems);
    }
    this.inflight = true;
    try {
      const result = await this.api.submitGrade(this.caseId, {
        framework: this.framework,
        rater_id: this.raterId,
        a: selection.a as number,
        r: selection.r as number,
        d: selection.d as number,
        notes: selection.notes,
      });
      this.submitted = true; // only after a 2xx
      return result.status;
    } finally {
      this.inflight = false;
    }
  }
}
