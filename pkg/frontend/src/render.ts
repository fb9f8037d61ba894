/** Pure HTML renderers for every view; no DOM access, fully unit-testable.
 *
 * Blindness is enforced server-side, and re-enforced here by construction:
 * while a case is still being independently graded, the detail view renders
 * no grade fields other than the viewer's own, regardless of payload content.
 */

import type { CaseDetail, CaseSummary, GradeView, Progress, Rubric, Status } from "./types.js";
import type { GradeSelection } from "./grading.js";
import { A_R_CHOICES, D_CHOICES } from "./grading.js";
import { disagreements } from "./adjudication.js";
import { Page, formatProgress } from "./queue.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const BLIND_STATUSES: Status[] = ["awaiting_first", "awaiting_second"];

export function renderQueue(page: Page<CaseSummary>, progress: Progress): string {
  const rows = page.items
    .map(
      (row) => `
      <tr class="queue-row" data-case-id="${escapeHtml(row.case_id)}" data-framework="${escapeHtml(row.framework)}">
        <td>${escapeHtml(row.case_id)}</td>
        <td>${escapeHtml(row.framework)}</td>
        <td><span class="status status-${escapeHtml(row.status)}">${escapeHtml(row.status.replace(/_/g, " "))}</span></td>
      </tr>`,
    )
    .join("");
  const empty = `<p class="empty-state">No cases match this filter.</p>`;
  return `
    <div class="progress-bar">${escapeHtml(formatProgress(progress))}</div>
    ${page.total === 0 ? empty : `
    <table class="queue">
      <thead><tr><th>Case</th><th>Framework</th><th>Status</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    <nav class="pager">Page ${page.page} of ${page.pages} (${page.total} cases)</nav>`}
  `;
}

export function renderRetryBanner(message: string): string {
  return `
    <div class="banner error">
      API unreachable: ${escapeHtml(message)}
      <button data-action="retry">Retry</button>
    </div>`;
}

function renderMovements(detail: CaseDetail): string {
  const rows = detail.sections.movements
    .map(
      (obs) => `
      <li>
        <strong>${escapeHtml(obs.kind.replace(/_/g, " "))}</strong>
        (${escapeHtml(obs.side)}): reach ${escapeHtml(obs.reach ?? "unstated")}
        ${obs.symmetry_note !== "n/a" ? `, ${escapeHtml(obs.symmetry_note.replace(/_/g, " "))}` : ""}
        ${obs.smoothness !== "n/a" ? `, ${escapeHtml(obs.smoothness)}` : ""}
        ${obs.compensation.length ? `, signs: ${escapeHtml(obs.compensation.join(", "))}` : ""}
      </li>`,
    )
    .join("");
  return `<section class="movements"><h3>1. Movement recognition</h3><ul>${rows || "<li>none recognized</li>"}</ul></section>`;
}

function renderJudgments(detail: CaseDetail): string {
  const rows = detail.sections.judgments
    .map(
      (judgment) => `
      <li>
        <strong>${escapeHtml(judgment.kind.replace(/_/g, " "))}</strong>:
        <span class="verdict verdict-${escapeHtml(judgment.verdict)}">${escapeHtml(judgment.verdict)}</span>
        ${judgment.evidence ? ` &mdash; ${escapeHtml(judgment.evidence)}` : ""}
      </li>`,
    )
    .join("");
  return `<section class="judgments"><h3>2. Movement judgments</h3><ul>${rows || "<li>none</li>"}</ul></section>`;
}

function renderFinal(detail: CaseDetail): string {
  return `
    <section class="final">
      <h3>3. Final diagnosis</h3>
      <p class="final-verdict final-${escapeHtml(detail.sections.final)}">${escapeHtml(detail.sections.final.toUpperCase())}</p>
      ${detail.reference_label ? `<p class="reference">Clinician-reviewed label: <strong>${escapeHtml(detail.reference_label)}</strong></p>` : ""}
    </section>`;
}

function renderChoices(
  field: "a" | "r" | "d",
  rubric: Rubric,
  selection: GradeSelection,
  prefix: string,
): string {
  const dimension = rubric[field];
  const choices = field === "d" ? D_CHOICES : A_R_CHOICES;
  const buttons = choices
    .map((value) => {
      const key = String(value);
      const text = dimension.choices[key] ?? "";
      const checked = selection[field] === value ? "checked" : "";
      return `
        <label class="choice">
          <input type="radio" name="${prefix}-${field}" value="${key}" ${checked}
                 data-grade-field="${field}" data-grade-value="${key}">
          <span class="choice-value">${key}</span>
          <span class="choice-text">${escapeHtml(text)}</span>
        </label>`;
    })
    .join("");
  return `
    <fieldset class="grade-field" data-field="${field}">
      <legend>${escapeHtml(dimension.title)} (${field})</legend>
      ${buttons}
    </fieldset>`;
}

export function renderGradeForm(rubric: Rubric, selection: GradeSelection, locked: boolean): string {
  return `
    <form class="grade-form" data-form="grade">
      ${renderChoices("a", rubric, selection, "grade")}
      ${renderChoices("r", rubric, selection, "grade")}
      ${renderChoices("d", rubric, selection, "grade")}
      <label class="notes">Notes <textarea name="notes" data-grade-notes>${escapeHtml(selection.notes)}</textarea></label>
      <button type="submit" data-action="submit-grade" ${locked ? "disabled" : ""}>
        ${locked ? "Submitted" : "Submit grade"}
      </button>
    </form>`;
}

function renderMyGrade(grade: GradeView): string {
  return `
    <div class="my-grade">
      Your grade: a=${grade.a}, r=${grade.r}, d=${grade.d}
      ${grade.notes ? `<span class="notes">(${escapeHtml(grade.notes)})</span>` : ""}
    </div>`;
}

export function renderCaseDetail(
  detail: CaseDetail,
  rubric: Rubric,
  selection: GradeSelection,
  locked: boolean,
): string {
  const video = detail.video_url
    ? `<video controls muted src="${escapeHtml(detail.video_url)}"></video>`
    : `<p class="no-video">No playable video (case has not cleared the privacy gate).</p>`;
  const blind = BLIND_STATUSES.includes(detail.status);
  let gradesBlock = "";
  if (!blind && detail.grades.length > 0) {
    gradesBlock = renderGradePair(detail.grades);
  }
  const canGrade = blind && detail.my_grade === null;
  return `
    <article class="case-detail" data-case-id="${escapeHtml(detail.case_id)}">
      <header>
        <h2>${escapeHtml(detail.case_id)} <small>${escapeHtml(detail.framework)}</small></h2>
        <span class="status">${escapeHtml(detail.status.replace(/_/g, " "))}</span>
      </header>
      <div class="media">${video}</div>
      ${renderMovements(detail)}
      ${renderJudgments(detail)}
      ${renderFinal(detail)}
      ${detail.raw ? `<details class="raw"><summary>Raw transcript</summary><pre>${escapeHtml(detail.raw)}</pre></details>` : ""}
      ${detail.my_grade ? renderMyGrade(detail.my_grade) : ""}
      ${gradesBlock}
      ${canGrade ? renderGradeForm(rubric, selection, locked) : ""}
      ${detail.final_grade ? `<div class="final-grade">Consensus: a=${detail.final_grade.a}, r=${detail.final_grade.r}, d=${detail.final_grade.d} (${escapeHtml(detail.final_grade.source)})</div>` : ""}
    </article>`;
}

export function renderGradePair(grades: GradeView[]): string {
  const disputed = new Set(disagreements(grades).map((d) => d.field));
  const columns = grades
    .map(
      (grade) => `
      <div class="rater-column">
        <h4>${escapeHtml(grade.rater_id)}</h4>
        <div class="${disputed.has("a") ? "disagree" : "agree"}">a = ${grade.a}</div>
        <div class="${disputed.has("r") ? "disagree" : "agree"}">r = ${grade.r}</div>
        <div class="${disputed.has("d") ? "disagree" : "agree"}">d = ${grade.d}</div>
        ${grade.notes ? `<p class="notes">${escapeHtml(grade.notes)}</p>` : ""}
      </div>`,
    )
    .join("");
  return `<div class="grade-pair">${columns}</div>`;
}

export function renderAdjudicationView(
  detail: CaseDetail,
  rubric: Rubric,
  selection: GradeSelection,
  participants: string[],
  submittable: boolean,
): string {
  if (detail.status !== "needs_adjudication") {
    return `<p class="guard">This case is ${escapeHtml(detail.status.replace(/_/g, " "))}; adjudication is not open.</p>`;
  }
  const boxes = detail.grades
    .map(
      (grade) => `
      <label class="participant">
        <input type="checkbox" data-participant="${escapeHtml(grade.rater_id)}"
               ${participants.includes(grade.rater_id) ? "checked" : ""}>
        ${escapeHtml(grade.rater_id)}
      </label>`,
    )
    .join("");
  return `
    <section class="adjudication" data-case-id="${escapeHtml(detail.case_id)}">
      <h3>Adjudication: ${escapeHtml(detail.case_id)}</h3>
      ${renderGradePair(detail.grades)}
      <form data-form="adjudication">
        ${renderChoices("a", rubric, selection, "consensus")}
        ${renderChoices("r", rubric, selection, "consensus")}
        ${renderChoices("d", rubric, selection, "consensus")}
        <div class="participants"><h4>Participants (at least two)</h4>${boxes}</div>
        <button type="submit" data-action="submit-consensus" ${submittable ? "" : "disabled"}>
          Submit consensus
        </button>
      </form>
    </section>`;
}
