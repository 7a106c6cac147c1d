// Suggestion queue model and view. The queue never applies anything on its
// own: a card becomes a statement only through the accept dialog, and its
// decision flips to accepted only after the service confirmed the post.

import { esc } from "./html.js";
import {
  assignStatement,
  embraceExpr,
  formatScore,
  nextFinalId,
  parseThreatId,
  renameWrap,
} from "./statements.js";
import type { Candidate } from "./types.js";

export type Decision = "pending" | "accepted" | "dismissed";

export interface QueueItem {
  candidate: Candidate;
  decision: Decision;
}

export interface AcceptDialog {
  ids: string[];
  representative: string;
  renameText: string;
}

export interface QueueState {
  items: QueueItem[];
  dialog: AcceptDialog | null;
}

export function candidateKey(candidate: Candidate): string {
  return candidate.ids.join("+");
}

/**
 * Build queue state from a fresh API read. Dismissals are a session-side
 * set: they survive refreshes within the session but a reload starts clean.
 */
export function queueFromCandidates(
  candidates: readonly Candidate[],
  dismissed: ReadonlySet<string> = new Set(),
): QueueState {
  return {
    items: candidates.map((candidate) => ({
      candidate,
      decision: dismissed.has(candidateKey(candidate)) ? "dismissed" : "pending",
    })),
    dialog: null,
  };
}

export function pendingItems(state: QueueState): QueueItem[] {
  return state.items.filter((item) => item.decision === "pending");
}

export function openAcceptDialog(state: QueueState, key: string): QueueState {
  const item = state.items.find(
    (candidate) => candidateKey(candidate.candidate) === key && candidate.decision === "pending",
  );
  if (!item) return state;
  return {
    ...state,
    dialog: {
      ids: [...item.candidate.ids],
      representative: item.candidate.ids[0],
      renameText: "",
    },
  };
}

export function closeDialog(state: QueueState): QueueState {
  return { ...state, dialog: null };
}

function withDecision(state: QueueState, key: string, decision: Decision): QueueState {
  return {
    items: state.items.map((item) =>
      candidateKey(item.candidate) === key ? { ...item, decision } : item,
    ),
    dialog: null,
  };
}

export function dismiss(state: QueueState, key: string): QueueState {
  return withDecision(state, key, "dismissed");
}

/** Call only after postStatements succeeded for this candidate. */
export function markAccepted(state: QueueState, key: string): QueueState {
  return withDecision(state, key, "accepted");
}

/**
 * Statement the dialog composes: an embrace of the candidate ids with the
 * picked representative, wrapped in a rename when the analyst typed a new
 * label. The target id extends the final run of the members' suffix,
 * counted over every id the log has claimed, not just visible finals.
 */
export function acceptStatement(dialog: AcceptDialog, claimedFinals: readonly string[]): string {
  const suffix = parseThreatId(dialog.ids[0]).suffix;
  const target = nextFinalId(claimedFinals, suffix);
  let expr = embraceExpr(dialog.ids, dialog.representative);
  const label = dialog.renameText.trim();
  if (label) expr = renameWrap(expr, label);
  return assignStatement(target, expr);
}

function renderAcceptDialog(dialog: AcceptDialog): string {
  const picker = dialog.ids
    .map((id) => {
      const checked = id === dialog.representative ? " checked" : "";
      return (
        `<label><input type="radio" name="rep" value="${esc(id)}"` +
        ` data-action="pick-rep"${checked}> representative ${esc(id)}</label>`
      );
    })
    .join("");
  return (
    `<div class="dialog" data-role="accept-dialog">` +
    `<h3>embrace (${esc(dialog.ids.join(", "))})</h3>` +
    picker +
    `<label>rename (optional)` +
    ` <input type="text" data-action="rename-text" value="${esc(dialog.renameText)}"` +
    ` placeholder="new label"></label>` +
    `<p class="actions">` +
    `<button data-action="confirm-accept">apply embrace</button> ` +
    `<button data-action="cancel-dialog">cancel</button>` +
    `</p></div>`
  );
}

export function renderSuggestionQueue(state: QueueState): string {
  const pending = pendingItems(state);
  if (pending.length === 0 && !state.dialog) {
    return (
      `<section class="queue"><div class="empty-state">` +
      `<p>No embrace candidates. Import a catalog, lower the threshold,` +
      ` or enjoy the silence.</p></div></section>`
    );
  }
  const cards = pending.map((item) => {
    const candidate = item.candidate;
    const key = esc(candidateKey(candidate));
    const tokens = candidate.shared_tokens
      .map((token) => `<mark>${esc(token)}</mark>`)
      .join(" ");
    return (
      `<article class="queue-card" data-key="${key}">` +
      `<h3>(${esc(candidate.ids.join(", "))}) ${formatScore(candidate.score)}</h3>` +
      `<p class="shared">${tokens}</p>` +
      `<p class="actions">` +
      `<button data-action="accept" data-key="${key}">accept</button> ` +
      `<button data-action="dismiss" data-key="${key}">dismiss</button>` +
      `</p></article>`
    );
  });
  const dialog = state.dialog ? renderAcceptDialog(state.dialog) : "";
  return `<section class="queue">${cards.join("")}${dialog}</section>`;
}
