/**
 * Single-rater annotation session: fetch the next blind task, walk the
 * question cascade, submit, repeat. Keyboard shortcuts: y/n answer the
 * focused question, 1/2/3 pick the Q3 option, Enter submits.
 */

import { EvalApi, TaskView } from "./api.js";
import {
  Answers,
  Q3_OPTIONS,
  Q3Option,
  answer,
  emptyAnswers,
  isComplete,
  q2Enabled,
  q3Enabled,
  toPayload,
} from "./cascade.js";
import { highlightOverlap, tokenSet } from "./highlight.js";

const Q3_LABELS: Record<Q3Option, string> = {
  improved: "Error corrected",
  unrelated_added: "Unrelated content added",
  no_correction_needed: "No correction was needed",
};

export class AnnotatorApp {
  private task: TaskView | null = null;
  private answers: Answers = emptyAnswers();
  private banner = "";

  constructor(
    private root: HTMLElement,
    private api: EvalApi,
    private raterId: string,
  ) {}

  async start(): Promise<void> {
    this.root.addEventListener("click", (ev) => this.onClick(ev));
    this.root.ownerDocument.addEventListener("keydown", (ev) => this.onKey(ev));
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    try {
      this.task = await this.api.nextTask(this.raterId);
      this.answers = emptyAnswers();
      this.banner = "";
    } catch {
      this.banner = "Service unreachable; showing the last known state.";
    }
    await this.render();
  }

  private async submit(): Promise<void> {
    if (!this.task || !isComplete(this.answers)) return;
    try {
      await this.api.submitRating(toPayload(this.task.task_id, this.raterId, this.answers));
    } catch (err) {
      // keep the entered answers so the rater can retry
      this.banner = err instanceof Error ? err.message : "Submission failed; please retry.";
      await this.render();
      return;
    }
    await this.loadNext();
  }

  private onClick(ev: Event): void {
    const el = ev.target as HTMLElement;
    const q = el.dataset.question;
    const v = el.dataset.value;
    if (q === "q1" || q === "q2") {
      this.answers = answer(this.answers, q, v === "yes");
      void this.render();
    } else if (q === "q3" && v) {
      this.answers = answer(this.answers, "q3", v as Q3Option);
      void this.render();
    } else if (el.dataset.action === "submit") {
      void this.submit();
    }
  }

  private onKey(ev: KeyboardEvent): void {
    if (!this.task) return;
    const key = ev.key.toLowerCase();
    if (key === "y" || key === "n") {
      const value = key === "y";
      if (this.answers.q1 === null) this.answers = answer(this.answers, "q1", value);
      else if (q2Enabled(this.answers) && this.answers.q2 === null)
        this.answers = answer(this.answers, "q2", value);
      void this.render();
    } else if (q3Enabled(this.answers) && ["1", "2", "3"].includes(key)) {
      this.answers = answer(this.answers, "q3", Q3_OPTIONS[Number(key) - 1]);
      void this.render();
    } else if (key === "enter" && isComplete(this.answers)) {
      void this.submit();
    }
  }

  private questionBlock(id: "q1" | "q2", label: string, enabled: boolean, value: boolean | null): string {
    const mark = (v: boolean) => (value === v ? "selected" : "");
    const dis = enabled ? "" : "disabled";
    return `
      <fieldset class="question" ${dis}>
        <legend>${label}</legend>
        <button data-question="${id}" data-value="yes" class="${mark(true)}" ${dis}>Yes (y)</button>
        <button data-question="${id}" data-value="no" class="${mark(false)}" ${dis}>No (n)</button>
      </fieldset>`;
  }

  async render(): Promise<void> {
    let progressLine = "";
    try {
      const p = await this.api.progress(this.raterId);
      progressLine = `<div id="progress">${p.done} / ${p.total} rated</div>`;
    } catch {
      this.banner = this.banner || "Service unreachable; showing the last known state.";
    }

    if (!this.task) {
      this.root.innerHTML = `
        ${this.banner ? `<div class="banner">${this.banner}</div>` : ""}
        ${progressLine}
        <div id="done">All tasks complete. Thank you.</div>`;
      return;
    }

    const evidence = tokenSet(this.task.evidence_texts);
    const a = this.answers;
    const q3Buttons = Q3_OPTIONS.map(
      (opt, i) => `
        <button data-question="q3" data-value="${opt}" class="${a.q3 === opt ? "selected" : ""}"
                ${q3Enabled(a) ? "" : "disabled"}>${Q3_LABELS[opt]} (${i + 1})</button>`,
    ).join("");

    this.root.innerHTML = `
      ${this.banner ? `<div class="banner">${this.banner}</div>` : ""}
      ${progressLine}
      <section id="task">
        <h2>Claim</h2>
        <p class="claim">${highlightOverlap(this.task.claim, evidence)}</p>
        <h2>Correction</h2>
        <p class="correction">${highlightOverlap(this.task.correction, evidence)}</p>
        <h2>Evidence</h2>
        ${this.task.evidence_texts.map((t) => `<p class="evidence">${highlightOverlap(t, evidence)}</p>`).join("")}
      </section>
      <section id="questions">
        ${this.questionBlock("q1", "Is the correction intelligible?", true, a.q1)}
        ${this.questionBlock("q2", "Is the correction supported by the evidence?", q2Enabled(a), a.q2)}
        <fieldset class="question" ${q3Enabled(a) ? "" : "disabled"}>
          <legend>What happened to the error?</legend>
          ${q3Buttons}
        </fieldset>
        <button data-action="submit" ${isComplete(a) ? "" : "disabled"}>Submit (Enter)</button>
      </section>`;
  }

  /** test hook: current answers snapshot */
  currentAnswers(): Answers {
    return { ...this.answers };
  }
}

export function mount(root: HTMLElement, baseUrl: string, raterId: string): AnnotatorApp {
  const app = new AnnotatorApp(root, new EvalApi(baseUrl), raterId);
  void app.start();
  return app;
}
