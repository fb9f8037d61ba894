/** Consensus form model for cases the two raters scored differently. */

import type { ApiClient } from "./api.js";
import type { AdjudicationResult, GradeView } from "./types.js";
import { GradeSelection, emptySelection, validateSelection } from "./grading.js";

export type GradeField = "a" | "r" | "d";

export const GRADE_FIELDS: GradeField[] = ["a", "r", "d"];

/** Fields on which the submitted grades differ, with each rater's value. */
export function disagreements(grades: GradeView[]): { field: GradeField; values: number[] }[] {
  const result: { field: GradeField; values: number[] }[] = [];
  for (const field of GRADE_FIELDS) {
    const values = grades.map((grade) => grade[field]);
    if (new Set(values).size > 1) {
      result.push({ field, values });
    }
  }
  return result;
}

/** Prefill consensus where the raters already agree; leave disputes open. */
export function consensusDefaults(grades: GradeView[]): GradeSelection {
  const selection = emptySelection();
  if (grades.length === 0) return selection;
  const disputed = new Set(disagreements(grades).map((d) => d.field));
  if (!disputed.has("a")) selection.a = grades[0].a as GradeSelection["a"];
  if (!disputed.has("r")) selection.r = grades[0].r as GradeSelection["r"];
  if (!disputed.has("d")) selection.d = grades[0].d as GradeSelection["d"];
  return selection;
}

/** Submit is enabled only with a full triple and at least two participants. */
export function canSubmitConsensus(selection: GradeSelection, participants: string[]): boolean {
  return validateSelection(selection).length === 0 && participants.length >= 2;
}

export async function submitConsensus(
  api: ApiClient,
  caseId: string,
  framework: string,
  selection: GradeSelection,
  participants: string[],
): Promise<AdjudicationResult> {
  if (!canSubmitConsensus(selection, participants)) {
    throw new Error("consensus needs a full score triple and at least two participants");
  }
  return api.submitAdjudication(caseId, {
    framework,
    a: selection.a as number,
    r: selection.r as number,
    d: selection.d as number,
    participants,
  });
}
