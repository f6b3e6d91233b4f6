import type { ApiClient, Candidate } from "./api.js";
import { ApiError } from "./api.js";
import type { SessionState } from "./state.js";

export type SpecRenderer = (
  el: HTMLElement,
  spec: Record<string, unknown>,
) => Promise<void>;

export interface QuestionFlow {
  readonly input: HTMLTextAreaElement;
  readonly submit: HTMLButtonElement;
  insertText(text: string): void;
  /** Resolves once the in-flight request (if any) has settled. */
  whenIdle(): Promise<void>;
}

/** Question box + candidate list + chart panel.
 *
 * Submitting calls POST /predict; clicking a candidate only re-renders
 * the spec the server already returned — no new request is made.
 */
export function createQuestionFlow(
  container: HTMLElement,
  api: ApiClient,
  state: SessionState,
  renderSpec: SpecRenderer,
  k = 5,
): QuestionFlow {
  const doc = container.ownerDocument;
  const input = doc.createElement("textarea");
  input.className = "question-input";
  input.placeholder = "用自然语言提问…";
  const submit = doc.createElement("button");
  submit.className = "submit";
  submit.textContent = "Ask";
  submit.disabled = true;
  const error = doc.createElement("div");
  error.className = "error-banner";
  error.hidden = true;
  const list = doc.createElement("ul");
  list.className = "candidates";
  const chart = doc.createElement("div");
  chart.className = "chart";
  container.append(input, submit, error, list, chart);

  let pending: Promise<void> = Promise.resolve();

  function syncDisabled(): void {
    state.question = input.value;
    submit.disabled = input.value.trim() === "" || state.dbId === null;
  }
  input.addEventListener("input", syncDisabled);

  function showError(stage: string, message: string): void {
    error.hidden = false;
    error.textContent = `[${stage}] ${message}`;
  }

  async function renderSelected(): Promise<void> {
    chart.textContent = "";
    const cand = state.selected;
    if (!cand) return;
    if (!cand.valid || cand.spec === null) {
      const panel = doc.createElement("div");
      panel.className = "not-executable";
      panel.textContent = "This candidate is not executable.";
      chart.append(panel);
      return;
    }
    const host = doc.createElement("div");
    host.className = "chart-host";
    chart.append(host);
    await renderSpec(host, cand.spec);
  }

  function candidateItem(cand: Candidate, index: number): HTMLLIElement {
    const li = doc.createElement("li");
    li.className = "candidate" + (index === state.selectedCandidate ? " selected" : "");
    li.dataset.index = String(index);
    const badge = doc.createElement("span");
    badge.className = cand.valid ? "badge valid" : "badge invalid";
    badge.textContent = cand.valid ? "valid" : "invalid";
    const score = doc.createElement("span");
    score.className = "score";
    score.textContent = cand.score.toFixed(3);
    const text = doc.createElement("code");
    text.textContent = cand.vql;
    li.append(badge, score, text);
    li.addEventListener("click", () => {
      state.selectCandidate(index);
      pending = refreshList().catch(() => undefined);
    });
    return li;
  }

  async function refreshList(): Promise<void> {
    list.textContent = "";
    const resp = state.lastResponse;
    if (!resp) return;
    resp.candidates.forEach((cand, i) => list.append(candidateItem(cand, i)));
    await renderSelected();
  }

  async function ask(): Promise<void> {
    if (submit.disabled || state.dbId === null) return;
    error.hidden = true;
    const seq = state.beginRequest();
    try {
      const resp = await api.predict(input.value, state.dbId, k);
      if (!state.applyResponse(seq, resp)) return; // stale: discard
      await refreshList();
    } catch (exc) {
      if (exc instanceof ApiError) showError(exc.stage, exc.message);
      else showError("network", String(exc));
    }
  }

  submit.addEventListener("click", () => {
    pending = ask();
  });

  return {
    input,
    submit,
    insertText(text: string): void {
      input.value = input.value === "" ? text : `${input.value} ${text}`;
      syncDisabled();
    },
    whenIdle: () => pending,
  };
}
