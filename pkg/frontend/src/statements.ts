// Statement text builders. Output must match the service's canonical
// rendering byte for byte, so that what the dialog composes is exactly what
// the log echoes back.

import { PROPERTY_LETTERS } from "./types.js";

export interface ParsedId {
  prefix: "p" | "f" | "m";
  index: number;
  suffix: "" | "a" | "w";
}

const ID_RE = /^([pfm])([1-9][0-9]*)([aw]?)$/;

export function parseThreatId(text: string): ParsedId {
  const m = ID_RE.exec(text);
  if (!m) throw new Error(`malformed threat id ${JSON.stringify(text)}`);
  return {
    prefix: m[1] as ParsedId["prefix"],
    index: Number(m[2]),
    suffix: m[3] as ParsedId["suffix"],
  };
}

export function escapeLabel(text: string): string {
  return text.replace(/\\/g, "\\\\").replace(/"/g, '\\"');
}

export function embraceExpr(ids: readonly string[], representative?: string): string {
  let body = ids.join(", ");
  if (representative) body += `; rep=${representative}`;
  return `embrace(${body})`;
}

export function renameWrap(inner: string, label: string): string {
  return `rename(${inner}, "${escapeLabel(label)}")`;
}

export function assignStatement(target: string, expr: string): string {
  return `${target} := ${expr}`;
}

export function carryStatement(target: string, source: string): string {
  return `${target} := carry(${source})`;
}

export function discardStatement(id: string, reason: string): string {
  return `discard(${id}, "${escapeLabel(reason)}")`;
}

export function profileStatement(id: string, letters: Iterable<string>): string {
  const chosen = new Set(letters);
  const ordered = PROPERTY_LETTERS.filter((letter) => chosen.has(letter));
  return `profile(${id}, {${ordered.join(", ")}})`;
}

export function mapStatement(
  finalId: string,
  nodes: readonly string[],
  representative: string,
): string {
  return `map(${finalId}, {${nodes.join(", ")}}, ${representative})`;
}

export function safetyStatement(finalId: string, nodes: readonly string[]): string {
  return `safety(${finalId}, {${nodes.join(", ")}})`;
}

export function formatScore(score: number): string {
  return score.toFixed(2);
}

const ASSIGN_TARGET_RE = /^(f[1-9][0-9]*[aw]?) :=/;

/**
 * Every f-id the log ever allocated, in log order. The visible final table
 * is not enough: discarded and re-embraced finals leave it but keep their
 * place in the id sequence.
 */
export function claimedFinalIds(entries: readonly { stmt?: string }[]): string[] {
  const out: string[] = [];
  for (const entry of entries) {
    const m = entry.stmt ? ASSIGN_TARGET_RE.exec(entry.stmt) : null;
    if (m) out.push(m[1]);
  }
  return out;
}

/** Next free final id in the suffix run, given every id claimed so far. */
export function nextFinalId(claimed: readonly string[], suffix: string): string {
  let top = 0;
  for (const id of claimed) {
    const parsed = parseThreatId(id);
    if (parsed.suffix === suffix && parsed.index > top) top = parsed.index;
  }
  return `f${top + 1}${suffix}`;
}
