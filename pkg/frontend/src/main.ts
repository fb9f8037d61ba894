/** Browser bootstrap: state, event wiring, and rendering into #app. */

import { ApiClient, ApiError } from "./api.js";
import { canSubmitConsensus, submitConsensus } from "./adjudication.js";
import { GradeSelection, GradeSubmission, ValidationError, emptySelection, isScoreValue } from "./grading.js";
import { QueueFilter, applyFilter, paginate } from "./queue.js";
import { renderAdjudicationView, renderCaseDetail, renderQueue, renderRetryBanner } from "./render.js";
import type { CaseDetail, CaseSummary, Progress, Rubric, Status } from "./types.js";

const PAGE_SIZE = 25;

interface AppState {
  raterId: string;
  filter: QueueFilter;
  page: number;
  cases: CaseSummary[];
  progress: Progress | null;
  rubric: Rubric | null;
  detail: CaseDetail | null;
  selection: GradeSelection;
  consensusSelection: GradeSelection;
  participants: string[];
  submission: GradeSubmission | null;
  error: string | null;
  notice: string | null;
}

const api = new ApiClient("");

const state: AppState = {
  raterId: localStorage.getItem("romdx-rater") ?? "",
  filter: { status: null, framework: null },
  page: 1,
  cases: [],
  progress: null,
  rubric: null,
  detail: null,
  selection: emptySelection(),
  consensusSelection: emptySelection(),
  participants: [],
  submission: null,
  error: null,
  notice: null,
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function refreshQueue(): Promise<void> {
  try {
    const [list, progress] = await Promise.all([api.listCases(), api.progress()]);
    state.cases = list.cases;
    state.progress = progress;
    state.error = null;
  } catch (error) {
    state.error = error instanceof Error ? error.message : String(error);
  }
  render();
}

async function openCase(caseId: string, framework: string): Promise<void> {
  try {
    if (!state.rubric) {
      state.rubric = await api.rubric();
    }
    state.detail = await api.caseDetail(caseId, framework, state.raterId || undefined);
    state.selection = emptySelection();
    state.consensusSelection = emptySelection();
    state.participants = state.detail.grades.map((grade) => grade.rater_id);
    state.submission = new GradeSubmission(api, caseId, framework, state.raterId);
    state.error = null;
    state.notice = null;
  } catch (error) {
    state.error = error instanceof Error ? error.message : String(error);
  }
  render();
}

async function handleGradeSubmit(): Promise<void> {
  if (!state.detail || !state.submission) return;
  if (!state.raterId) {
    state.error = "set your rater id before grading";
    render();
    return;
  }
  try {
    const status: Status = await state.submission.submit(state.selection);
    state.notice = `grade accepted; case is now ${status.replace(/_/g, " ")}`;
    state.error = null;
    await openCase(state.detail.case_id, state.detail.framework);
    await refreshQueue();
  } catch (error) {
    // server-side rejections (duplicates etc.) are shown verbatim
    state.error =
      error instanceof ApiError || error instanceof ValidationError
        ? error.message
        : String(error);
    render();
  }
}

async function handleConsensusSubmit(): Promise<void> {
  if (!state.detail) return;
  try {
    await submitConsensus(
      api,
      state.detail.case_id,
      state.detail.framework,
      state.consensusSelection,
      state.participants,
    );
    state.notice = "consensus recorded; case adjudicated";
    state.error = null;
    await openCase(state.detail.case_id, state.detail.framework);
    await refreshQueue();
  } catch (error) {
    state.error = error instanceof Error ? error.message : String(error);
    render();
  }
}

function render(): void {
  const queuePage = paginate(applyFilter(state.cases, state.filter), state.page, PAGE_SIZE);
  el("queue").innerHTML = state.error
    ? renderRetryBanner(state.error)
    : renderQueue(queuePage, state.progress ?? {
        awaiting_first: 0, awaiting_second: 0, agreed: 0,
        needs_adjudication: 0, adjudicated: 0,
      });
  const detailHost = el("detail");
  if (state.detail && state.rubric) {
    if (state.detail.status === "needs_adjudication") {
      detailHost.innerHTML =
        renderCaseDetail(state.detail, state.rubric, state.selection, true) +
        renderAdjudicationView(
          state.detail,
          state.rubric,
          state.consensusSelection,
          state.participants,
          canSubmitConsensus(state.consensusSelection, state.participants),
        );
    } else {
      detailHost.innerHTML = renderCaseDetail(
        state.detail,
        state.rubric,
        state.selection,
        state.submission?.locked ?? false,
      );
    }
  } else {
    detailHost.innerHTML = `<p class="empty-state">Select a case from the queue.</p>`;
  }
  el("notice").textContent = state.notice ?? "";
}

function wireEvents(): void {
  const raterInput = el("rater-id") as HTMLInputElement;
  raterInput.value = state.raterId;
  raterInput.addEventListener("change", () => {
    state.raterId = raterInput.value.trim();
    localStorage.setItem("romdx-rater", state.raterId);
    if (state.detail) void openCase(state.detail.case_id, state.detail.framework);
  });

  (el("status-filter") as HTMLSelectElement).addEventListener("change", (event) => {
    const value = (event.target as HTMLSelectElement).value;
    state.filter.status = (value || null) as QueueFilter["status"];
    state.page = 1;
    render();
  });
  (el("framework-filter") as HTMLSelectElement).addEventListener("change", (event) => {
    const value = (event.target as HTMLSelectElement).value;
    state.filter.framework = value || null;
    state.page = 1;
    render();
  });

  document.body.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const row = target.closest<HTMLElement>(".queue-row");
    if (row && row.dataset.caseId && row.dataset.framework) {
      void openCase(row.dataset.caseId, row.dataset.framework);
      return;
    }
    if (target.dataset.action === "retry") {
      void refreshQueue();
    }
  });

  document.body.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.dataset.gradeField && target.dataset.gradeValue !== undefined) {
      const field = target.dataset.gradeField as "a" | "r" | "d";
      const value = Number(target.dataset.gradeValue);
      if (!isScoreValue(field, value)) return;
      const selection = target.name.startsWith("consensus")
        ? state.consensusSelection
        : state.selection;
      if (field === "d") selection.d = value as GradeSelection["d"];
      else if (field === "a") selection.a = value as GradeSelection["a"];
      else selection.r = value as GradeSelection["r"];
      render();
    }
    if (target.dataset.participant !== undefined) {
      const rater = target.dataset.participant;
      state.participants = target.checked
        ? [...new Set([...state.participants, rater])]
        : state.participants.filter((p) => p !== rater);
      render();
    }
  });

  document.body.addEventListener("input", (event) => {
    const target = event.target as HTMLTextAreaElement;
    if (target.dataset.gradeNotes !== undefined) {
      state.selection.notes = target.value;
    }
  });

  document.body.addEventListener("submit", (event) => {
    const form = event.target as HTMLFormElement;
    event.preventDefault();
    if (form.dataset.form === "grade") void handleGradeSubmit();
    if (form.dataset.form === "adjudication") void handleConsensusSubmit();
  });
}

wireEvents();
void refreshQueue();
