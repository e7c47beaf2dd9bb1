/** Thin client for the eval-service HTTP API; the UI's only backend access. */

import type { RatingPayload } from "./cascade.js";

export interface TaskView {
  task_id: number;
  claim: string;
  evidence_texts: string[];
  correction: string;
}

export interface Progress {
  done: number;
  total: number;
  remaining: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function jsonOrThrow(resp: Response): Promise<unknown> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return resp.json();
}

export class EvalApi {
  constructor(private baseUrl: string) {}

  async nextTask(raterId: string): Promise<TaskView | null> {
    const resp = await fetch(`${this.baseUrl}/api/tasks/next?rater=${encodeURIComponent(raterId)}`);
    const body = (await jsonOrThrow(resp)) as { task: TaskView | null };
    return body.task;
  }

  async submitRating(payload: RatingPayload): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/api/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    await jsonOrThrow(resp);
  }

  async progress(raterId: string): Promise<Progress> {
    const resp = await fetch(`${this.baseUrl}/api/progress?rater=${encodeURIComponent(raterId)}`);
    return (await jsonOrThrow(resp)) as Progress;
  }
}
