/**
 * Three-question rating cascade.
 *
 * Q1 "Is the correction intelligible?" gates Q2 "Is it supported by the
 * evidence?", which gates Q3 "Was the error corrected?". A "no" upstream
 * disables everything downstream and forces a non-improved outcome; the
 * server applies the same rule, so this module must accept exactly the
 * vectors the server accepts.
 */

export const Q3_OPTIONS = ["improved", "unrelated_added", "no_correction_needed"] as const;
export type Q3Option = (typeof Q3_OPTIONS)[number];

export interface Answers {
  q1: boolean | null;
  q2: boolean | null;
  q3: Q3Option | null;
}

export interface RatingPayload {
  task_id: number;
  rater_id: string;
  q1: boolean;
  q2?: boolean;
  q3?: Q3Option;
}

export function emptyAnswers(): Answers {
  return { q1: null, q2: null, q3: null };
}

/** Q2 is only answerable once Q1 is answered "yes". */
export function q2Enabled(a: Answers): boolean {
  return a.q1 === true;
}

/** Q3 is only answerable once Q2 is answered "yes". */
export function q3Enabled(a: Answers): boolean {
  return a.q1 === true && a.q2 === true;
}

/** Answer one question, clearing anything downstream of a change. */
export function answer(a: Answers, question: "q1" | "q2" | "q3", value: boolean | Q3Option): Answers {
  if (question === "q1") {
    const q1 = value as boolean;
    return q1 ? { q1, q2: null, q3: null } : { q1, q2: false, q3: "unrelated_added" };
  }
  if (question === "q2") {
    if (!q2Enabled(a)) return a;
    const q2 = value as boolean;
    return q2 ? { ...a, q2, q3: null } : { ...a, q2, q3: "unrelated_added" };
  }
  if (!q3Enabled(a)) return a;
  return { ...a, q3: value as Q3Option };
}

/** True once every reachable question has an answer. */
export function isComplete(a: Answers): boolean {
  if (a.q1 === null) return false;
  if (a.q1 === false) return true;
  if (a.q2 === null) return false;
  if (a.q2 === false) return true;
  return a.q3 !== null;
}

/**
 * Whether the server would accept this exact (possibly partial) vector.
 * Mirrors the API: q2=yes is inconsistent after q1=no, and "improved"
 * requires yes on both gates; a bare q1=no is legal (the server
 * auto-fills the rest).
 */
export function acceptsVector(q1: boolean, q2: boolean | null, q3: Q3Option | null): boolean {
  if (!q1) {
    return q2 !== true && q3 !== "improved";
  }
  if (q2 === null) return false;
  if (!q2) return q3 !== "improved";
  return q3 !== null;
}

/** Build the submission payload, leaving auto-fillable fields implicit. */
export function toPayload(taskId: number, raterId: string, a: Answers): RatingPayload {
  if (!isComplete(a)) throw new Error("cascade incomplete");
  const payload: RatingPayload = { task_id: taskId, rater_id: raterId, q1: a.q1 as boolean };
  if (a.q1 && a.q2 !== null) payload.q2 = a.q2;
  if (a.q1 && a.q2 && a.q3 !== null) payload.q3 = a.q3;
  return payload;
}
