/**
 * Token-overlap highlighting: correction tokens present in the evidence are
 * wrapped in a span so raters can judge support at a glance.
 */

function escapeHtml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function tokenSet(texts: string[]): Set<string> {
  const out = new Set<string>();
  for (const text of texts) {
    for (const tok of text.toLowerCase().split(/\s+/)) {
      if (tok) out.add(tok);
    }
  }
  return out;
}

export function highlightOverlap(sentence: string, evidence: Set<string>): string {
  return sentence
    .split(/\s+/)
    .filter((t) => t.length > 0)
    .map((tok) =>
      evidence.has(tok.toLowerCase())
        ? `<span class="covered">${escapeHtml(tok)}</span>`
        : `<span class="uncovered">${escapeHtml(tok)}</span>`,
    )
    .join(" ");
}
