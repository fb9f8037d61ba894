/** Wire types for the grading API. */

export type Score = 0 | 0.5 | 1;
export type BinaryScore = 0 | 1;

export type Status =
  | "awaiting_first"
  | "awaiting_second"
  | "agreed"
  | "needs_adjudication"
  | "adjudicated";

export const STATUSES: Status[] = [
  "awaiting_first",
  "awaiting_second",
  "agreed",
  "needs_adjudication",
  "adjudicated",
];

export interface CaseSummary {
  case_id: string;
  framework: string;
  status: Status;
  final: string;
}

export interface Observation {
  kind: string;
  side: string;
  reach: string | null;
  symmetry_note: string;
  compensation: string[];
  smoothness: string;
}

export interface Judgment {
  kind: string;
  verdict: string;
  evidence: string;
}

export interface GradeView {
  rater_id: string;
  a: number;
  r: number;
  d: number;
  notes: string;
  submitted_at: string;
}

export interface CaseDetail {
  case_id: string;
  framework: string;
  video_url: string | null;
  sections: {
    movements: Observation[];
    judgments: Judgment[];
    final: string;
  };
  raw: string | null;
  status: Status;
  reference_label: string | null;
  my_grade: GradeView | null;
  grades: GradeView[];
  final_grade: { a: number; r: number; d: number; source: string } | null;
}

export type Progress = Record<Status, number>;

export interface RubricDimension {
  title: string;
  choices: Record<string, string>;
}

export interface Rubric {
  a: RubricDimension;
  r: RubricDimension;
  d: RubricDimension;
}

export interface AdjudicationResult {
  case_id: string;
  framework: string;
  a: number;
  r: number;
  d: number;
  source: string;
  participants: string[];
  status: Status;
}
