import { describe, expect, it } from "vitest";

import {
  acceptStatement,
  candidateKey,
  dismiss,
  markAccepted,
  openAcceptDialog,
  pendingItems,
  queueFromCandidates,
  renderSuggestionQueue,
} from "../src/queue.js";
import type { Candidate } from "../src/types.js";

function candidate(ids: string[], score: number, tokens: string[]): Candidate {
  return { ids, score, score_exact: String(score), shared_tokens: tokens };
}

const SESSION_PAIR = candidate(["p1", "p2"], 1 / 7, ["session"]);

describe("queue state", () => {
  it("lists fresh candidates as pending", () => {
    const state = queueFromCandidates([SESSION_PAIR]);
    expect(state.items).toHaveLength(1);
    expect(state.items[0].decision).toBe("pending");
    expect(state.dialog).toBeNull();
  });

  it("keys candidates by their id set", () => {
    expect(candidateKey(SESSION_PAIR)).toBe("p1+p2");
  });

  it("honors session dismissals on rebuild, and only those", () => {
    const rebuilt = queueFromCandidates([SESSION_PAIR], new Set(["p1+p2"]));
    expect(pendingItems(rebuilt)).toHaveLength(0);
    // a rebuild without the session set is a fresh session: the card returns
    const fresh = queueFromCandidates([SESSION_PAIR]);
    expect(pendingItems(fresh)).toHaveLength(1);
  });

  it("dismiss and markAccepted drop the card from the pending list", () => {
    const state = queueFromCandidates([SESSION_PAIR]);
    expect(pendingItems(dismiss(state, "p1+p2"))).toHaveLength(0);
    expect(pendingItems(markAccepted(state, "p1+p2"))).toHaveLength(0);
    expect(markAccepted(state, "p1+p2").items[0].decision).toBe("accepted");
  });
});

describe("accept dialog", () => {
  it("prefills ids, first id as representative, empty rename", () => {
    const state = openAcceptDialog(queueFromCandidates([SESSION_PAIR]), "p1+p2");
    expect(state.dialog).toEqual({ ids: ["p1", "p2"], representative: "p1", renameText: "" });
  });

  it("does not open for unknown or non-pending keys", () => {
    const state = queueFromCandidates([SESSION_PAIR]);
    expect(openAcceptDialog(state, "p9+p10").dialog).toBeNull();
    expect(openAcceptDialog(dismiss(state, "p1+p2"), "p1+p2").dialog).toBeNull();
  });

  it("composes the rename-wrapped embrace when a label is typed", () => {
    const dialog = {
      ids: ["p1", "p2"],
      representative: "p2",
      renameText: "Weak web session control mechanisms",
    };
    expect(acceptStatement(dialog, [])).toBe(
      'f1 := rename(embrace(p1, p2; rep=p2), "Weak web session control mechanisms")',
    );
  });

  it("composes a bare embrace when the rename field is blank", () => {
    const dialog = { ids: ["p4w", "p17w"], representative: "p4w", renameText: "  " };
    expect(acceptStatement(dialog, ["f1w", "f2w"])).toBe("f3w := embrace(p4w, p17w; rep=p4w)");
  });

  it("targets the suffix run of the members", () => {
    const dialog = { ids: ["p5a", "p6a"], representative: "p5a", renameText: "" };
    expect(acceptStatement(dialog, ["f41a", "f15w"])).toBe("f42a := embrace(p5a, p6a; rep=p5a)");
  });
});

describe("queue rendering", () => {
  it("shows one card with ids, score, and highlighted shared tokens", () => {
    const html = renderSuggestionQueue(queueFromCandidates([SESSION_PAIR]));
    expect(html).toContain("(p1, p2) 0.14");
    expect(html).toContain("<mark>session</mark>");
    expect(html).toContain('data-action="accept" data-key="p1+p2"');
    expect(html).toContain('data-action="dismiss" data-key="p1+p2"');
  });

  it("keeps the API ordering of cards", () => {
    const top = candidate(["p3", "p4"], 0.5, ["bridge"]);
    const html = renderSuggestionQueue(queueFromCandidates([top, SESSION_PAIR]));
    expect(html.indexOf("p3+p4")).toBeLessThan(html.indexOf("p1+p2"));
  });

  it("renders the empty-state panel when nothing is pending", () => {
    expect(renderSuggestionQueue(queueFromCandidates([]))).toContain("empty-state");
    const allDismissed = dismiss(queueFromCandidates([SESSION_PAIR]), "p1+p2");
    expect(renderSuggestionQueue(allDismissed)).toContain("empty-state");
  });

  it("renders the dialog with representative picker and rename field", () => {
    const state = openAcceptDialog(queueFromCandidates([SESSION_PAIR]), "p1+p2");
    const html = renderSuggestionQueue(state);
    expect(html).toContain('data-role="accept-dialog"');
    expect(html).toContain('value="p1"');
    expect(html).toContain('value="p2"');
    expect(html).toContain('data-action="rename-text"');
    expect(html).toContain('data-action="confirm-accept"');
  });

  it("escapes markup in shared tokens", () => {
    const sneaky = candidate(["p1", "p2"], 0.2, ["<script>"]);
    const html = renderSuggestionQueue(queueFromCandidates([sneaky]));
    expect(html).toContain("<mark>&lt;script&gt;</mark>");
    expect(html).not.toContain("<script>");
  });
});
