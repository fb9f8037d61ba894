/** Case queue view model: filtering, pagination, progress formatting. */

import type { CaseSummary, Progress, Status } from "./types.js";
import { STATUSES } from "./types.js";

export interface QueueFilter {
  status: Status | null;
  framework: string | null;
}

export interface Page<T> {
  items: T[];
  page: number;
  pages: number;
  total: number;
}

export function applyFilter(cases: CaseSummary[], filter: QueueFilter): CaseSummary[] {
  return cases.filter(
    (row) =>
      (filter.status === null || row.status === filter.status) &&
      (filter.framework === null || row.framework === filter.framework),
  );
}

export function paginate<T>(items: T[], page: number, pageSize: number): Page<T> {
  const total = items.length;
  const pages = Math.max(1, Math.ceil(total / pageSize));
  const clamped = Math.min(Math.max(page, 1), pages);
  const start = (clamped - 1) * pageSize;
  return { items: items.slice(start, start + pageSize), page: clamped, pages, total };
}

export function formatProgress(progress: Progress): string {
  return STATUSES.map((status) => `${status.replace(/_/g, " ")}: ${progress[status] ?? 0}`).join(
    " | ",
  );
}

/** Total cases still needing attention from some rater or adjudicator. */
export function pendingCount(progress: Progress): number {
  return (
    (progress.awaiting_first ?? 0) +
    (progress.awaiting_second ?? 0) +
    (progress.needs_adjudication ?? 0)
  );
}
