// @vitest-environment jsdom
import { beforeEach, describe, expect, it, vi } from "vitest";

import { AnnotatorApp } from "../src/app.js";
import { EvalApi, TaskView } from "../src/api.js";
import { highlightOverlap, tokenSet } from "../src/highlight.js";

const TASK: TaskView = {
  task_id: 3,
  claim: "turin is a city in japan .",
  evidence_texts: ["turin is a city in italy ."],
  correction: "turin is a city in italy .",
};

function fakeApi(overrides: Partial<EvalApi> = {}): EvalApi {
  const api = {
    nextTask: vi.fn().mockResolvedValue(TASK),
    submitRating: vi.fn().mockResolvedValue(undefined),
    progress: vi.fn().mockResolvedValue({ done: 0, total: 20, remaining: 20 }),
    ...overrides,
  };
  return api as unknown as EvalApi;
}

function click(root: HTMLElement, selector: string): void {
  const el = root.querySelector(selector) as HTMLElement;
  expect(el, selector).not.toBeNull();
  el.dispatchEvent(new Event("click", { bubbles: true }));
}

async function flush(): Promise<void> {
  await new Promise((r) => setTimeout(r, 0));
}

describe("annotator DOM", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app") as HTMLElement;
  });

  it("renders the task blind: no system identifier anywhere in the DOM", async () => {
    const app = new AnnotatorApp(root, fakeApi(), "ann");
    await app.start();
    await flush();
    const dom = document.body.innerHTML;
    expect(dom).toContain("turin");
    expect(dom).toContain("japan");
    expect(dom).not.toMatch(/system[_ -]?id/i);
    expect(dom).not.toContain("sys");
  });

  it("q1=no disables downstream controls and enables submit", async () => {
    const app = new AnnotatorApp(root, fakeApi(), "ann");
    await app.start();
    await flush();
    click(root, 'button[data-question="q1"][data-value="no"]');
    await flush();
    const fieldsets = root.querySelectorAll("fieldset.question");
    expect(fieldsets[1].hasAttribute("disabled")).toBe(true);
    expect(fieldsets[2].hasAttribute("disabled")).toBe(true);
    const submit = root.querySelector('button[data-action="submit"]') as HTMLButtonElement;
    expect(submit.hasAttribute("disabled")).toBe(false);
  });

  it("yes-yes path exposes exactly three q3 options", async () => {
    const app = new AnnotatorApp(root, fakeApi(), "ann");
    await app.start();
    await flush();
    click(root, 'button[data-question="q1"][data-value="yes"]');
    await flush();
    click(root, 'button[data-question="q2"][data-value="yes"]');
    await flush();
    const q3 = root.querySelectorAll('button[data-question="q3"]:not([disabled])');
    expect(q3.length).toBe(3);
  });

  it("submission failure keeps the entered answers and shows a banner", async () => {
    const api = fakeApi({
      submitRating: vi.fn().mockRejectedValue(new Error("HTTP 409: duplicate")),
    } as Partial<EvalApi>);
    const app = new AnnotatorApp(root, api, "ann");
    await app.start();
    await flush();
    click(root, 'button[data-question="q1"][data-value="no"]');
    await flush();
    click(root, 'button[data-action="submit"]');
    await flush();
    expect(root.innerHTML).toContain("409");
    expect(app.currentAnswers().q1).toBe(false);
  });

  it("empty queue renders the completion screen with progress", async () => {
    const api = fakeApi({
      nextTask: vi.fn().mockResolvedValue(null),
      progress: vi.fn().mockResolvedValue({ done: 20, total: 20, remaining: 0 }),
    } as Partial<EvalApi>);
    const app = new AnnotatorApp(root, api, "ann");
    await app.start();
    await flush();
    expect(root.innerHTML).toContain("All tasks complete");
    expect(root.innerHTML).toContain("20 / 20");
  });

  it("unreachable service shows the offline banner", async () => {
    const api = fakeApi({
      nextTask: vi.fn().mockRejectedValue(new Error("network down")),
      progress: vi.fn().mockRejectedValue(new Error("network down")),
    } as Partial<EvalApi>);
    const app = new AnnotatorApp(root, api, "ann");
    await app.start();
    await flush();
    expect(root.innerHTML).toContain("Service unreachable");
  });
});

describe("overlap highlighting", () => {
  it("marks evidence-covered and uncovered tokens", () => {
    const evidence = tokenSet(["turin is a city in italy ."]);
    const html = highlightOverlap("turin is a city in japan .", evidence);
    expect(html).toContain('<span class="covered">turin</span>');
    expect(html).toContain('<span class="uncovered">japan</span>');
  });

  it("escapes markup in task text", () => {
    const html = highlightOverlap("<img> token", new Set());
    expect(html).not.toContain("<img>");
    expect(html).toContain("&lt;img&gt;");
  });
});
