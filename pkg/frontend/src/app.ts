// Controller: owns the client, one snapshot of server truth, and the
// session-only view state (dismissals, open dialog, tree selection).
// Truth never lives here; every repaint follows a fresh read, and a reload
// rebuilds everything from the API alone.

import { ApiError, ConnectionError, WorkbenchClient } from "./api.js";
import { renderGapReport } from "./gap.js";
import { esc } from "./html.js";
import {
  composeStatement,
  confirmEmptyStatement,
  freshSelection,
  pickRepresentative,
  renderMappingBrowser,
  setMode,
  toggleNode,
  type BrowserMode,
  type MappingSelection,
} from "./mapping.js";
import {
  acceptStatement,
  candidateKey,
  dismiss,
  markAccepted,
  openAcceptDialog,
  queueFromCandidates,
  renderSuggestionQueue,
  type QueueState,
} from "./queue.js";
import { claimedFinalIds } from "./statements.js";
import type {
  GapPayload,
  MappingRow,
  OpsResult,
  ProjectRecord,
  StatsPayload,
  SuggestionsPayload,
  ThreatRow,
  TreesPayload,
} from "./types.js";

export interface AppSnapshot {
  project: ProjectRecord;
  prelims: ThreatRow[];
  finals: ThreatRow[];
  mappings: MappingRow[];
  suggestions: SuggestionsPayload;
  gap: GapPayload;
  trees: TreesPayload | null;
  stats: StatsPayload;
  /** f-ids the log has allocated so far, discarded and superseded included. */
  claimedFinals: string[];
  logLength: number;
}

export async function loadSnapshot(client: WorkbenchClient, key: string): Promise<AppSnapshot> {
  const project = await client.getProject(key);
  const [prelims, finals, mappings, suggestions, gap, stats, log] = await Promise.all([
    client.getThreatTable(key, "P"),
    client.getThreatTable(key, "F"),
    client.getMappingTable(key),
    client.getSuggestions(key),
    client.getGapReport(key),
    client.getStats(key),
    client.getLog(key, 0),
  ]);
  let trees: TreesPayload | null = null;
  try {
    trees = await client.getTrees(key);
  } catch (exc) {
    // a project without an attached catalog is a normal state
    if (!(exc instanceof ApiError) || exc.status !== 404) throw exc;
  }
  return {
    project,
    prelims: prelims.rows,
    finals: finals.rows,
    mappings: mappings.rows,
    suggestions,
    gap,
    trees,
    stats,
    claimedFinals: claimedFinalIds(log.entries),
    logLength: log.log_length,
  };
}

export type Tab = "queue" | "mapping" | "gap";

export class WorkbenchApp {
  snapshot: AppSnapshot | null = null;
  queue: QueueState = queueFromCandidates([]);
  mapping: MappingSelection | null = null;
  tab: Tab = "queue";
  notice: string | null = null;
  connection: "ok" | "down" = "ok";
  private busy = false;
  private dismissed = new Set<string>();

  constructor(
    readonly client: WorkbenchClient,
    readonly projectKey: string,
  ) {}

  async refresh(): Promise<void> {
    let snapshot: AppSnapshot;
    try {
      snapshot = await loadSnapshot(this.client, this.projectKey);
    } catch (exc) {
      if (exc instanceof ConnectionError) {
        this.connection = "down";
        return;
      }
      throw exc;
    }
    const dialog = this.queue.dialog;
    this.snapshot = snapshot;
    this.queue = {
      ...queueFromCandidates(snapshot.suggestions.candidates, this.dismissed),
      dialog,
    };
    this.reconcileMapping();
    this.connection = "ok";
  }

  private reconcileMapping(): void {
    const finals = this.snapshot?.finals ?? [];
    if (finals.length === 0) {
      this.mapping = null;
      return;
    }
    if (!this.mapping || !finals.some((row) => row.id === this.mapping?.finalId)) {
      this.mapping = freshSelection(finals[0].id);
    }
  }

  /**
   * Exactly one statement per click, one mutation in flight, and the view
   * only moves after the service confirmed and was re-read.
   */
  async submit(statement: string): Promise<OpsResult> {
    if (this.busy) throw new Error("another operation is in flight");
    this.busy = true;
    try {
      const result = await this.client.postStatements(this.projectKey, statement);
      this.notice = null;
      await this.refresh();
      return result;
    } catch (exc) {
      if (exc instanceof ConnectionError) {
        this.connection = "down";
      } else if (exc instanceof ApiError) {
        this.notice = `${exc.code}: ${exc.message}`;
      }
      throw exc;
    } finally {
      this.busy = false;
    }
  }

  /** True when something changed and the page should repaint. */
  async pollOnce(): Promise<boolean> {
    if (this.busy) return false;
    if (!this.snapshot) {
      await this.refresh();
      return this.connection === "ok" && this.snapshot !== null;
    }
    let logLength: number;
    try {
      logLength = (await this.client.getLog(this.projectKey, this.snapshot.logLength)).log_length;
    } catch (exc) {
      if (exc instanceof ConnectionError) {
        this.connection = "down";
        return true;
      }
      throw exc;
    }
    if (logLength === this.snapshot.logLength) return false;
    await this.refresh();
    return true;
  }

  // -- queue actions ---------------------------------------------------------

  openDialog(key: string): void {
    this.queue = openAcceptDialog(this.queue, key);
  }

  cancelDialog(): void {
    this.queue = { ...this.queue, dialog: null };
  }

  setDialogRepresentative(id: string): void {
    if (this.queue.dialog && this.queue.dialog.ids.includes(id)) {
      this.queue = { ...this.queue, dialog: { ...this.queue.dialog, representative: id } };
    }
  }

  setDialogRename(text: string): void {
    if (this.queue.dialog) {
      this.queue = { ...this.queue, dialog: { ...this.queue.dialog, renameText: text } };
    }
  }

  dismissCandidate(key: string): void {
    // session-side only: the service never hears about dismissals
    this.dismissed.add(key);
    this.queue = dismiss(this.queue, key);
  }

  async confirmAccept(): Promise<OpsResult | null> {
    const dialog = this.queue.dialog;
    if (!dialog || !this.snapshot) return null;
    const key = dialog.ids.join("+");
    const statement = acceptStatement(dialog, this.snapshot.claimedFinals);
    const result = await this.submit(statement);
    this.queue = markAccepted(this.queue, key);
    return result;
  }

  // -- mapping actions -------------------------------------------------------

  selectFinal(finalId: string): void {
    if (this.snapshot?.finals.some((row) => row.id === finalId)) {
      this.mapping = freshSelection(finalId, this.mapping?.mode ?? "ticked");
    }
  }

  setBrowserMode(mode: BrowserMode): void {
    if (this.mapping) this.mapping = setMode(this.mapping, mode);
  }

  toggleTreeNode(nodeId: string): void {
    if (this.mapping) this.mapping = toggleNode(this.mapping, nodeId);
  }

  pickTreeRepresentative(nodeId: string): void {
    if (this.mapping) this.mapping = pickRepresentative(this.mapping, nodeId);
  }

  async submitMapping(): Promise<OpsResult | null> {
    if (!this.mapping || !this.snapshot?.trees) return null;
    const statement = composeStatement(this.mapping, this.snapshot.trees);
    const mode = this.mapping.mode;
    const finalId = this.mapping.finalId;
    const result = await this.submit(statement);
    this.mapping = freshSelection(finalId, mode);
    return result;
  }

  async confirmEmptySafety(): Promise<OpsResult | null> {
    if (!this.mapping) return null;
    return this.submit(confirmEmptyStatement(this.mapping));
  }

  setTab(tab: Tab): void {
    this.tab = tab;
  }
}

function renderMappingView(app: WorkbenchApp): string {
  const snapshot = app.snapshot;
  if (!snapshot) return "";
  if (!snapshot.trees) {
    return `<div class="empty-state"><p>No tree catalog attached to this project.</p></div>`;
  }
  if (snapshot.finals.length === 0 || !app.mapping) {
    return `<div class="empty-state"><p>No final threats yet. Refine the preliminary table first.</p></div>`;
  }
  const selection = app.mapping;
  const final = snapshot.finals.find((row) => row.id === selection.finalId);
  if (!final) return "";
  const options = snapshot.finals
    .map((row) => {
      const picked = row.id === final.id ? " selected" : "";
      return `<option value="${esc(row.id)}"${picked}>${esc(row.id)} ${esc(row.text)}</option>`;
    })
    .join("");
  const record = snapshot.mappings.find((row) => row.final_id === final.id);
  const existing = record
    ? `<p class="existing-record">${esc(record.m_id)}: ${esc(record.source)} &mdash; ` +
      `<span class="composed-preview">${esc(record.composed)}</span></p>`
    : "";
  return (
    `<p class="final-picker"><label>final threat ` +
    `<select data-action="select-final">${options}</select></label></p>` +
    existing +
    renderMappingBrowser(final, snapshot.trees, selection)
  );
}

export function renderApp(app: WorkbenchApp): string {
  if (app.connection === "down") {
    return (
      `<div class="error-panel" data-role="connection-error">` +
      `<p>The workbench service is unreachable. Nothing retries on its own.</p>` +
      `<p><button data-action="retry">retry</button></p></div>`
    );
  }
  const snapshot = app.snapshot;
  if (!snapshot) return `<p class="loading">loading ...</p>`;
  const tabs = (["queue", "mapping", "gap"] as const)
    .map(
      (tab) =>
        `<button data-action="tab" data-tab="${tab}" aria-pressed="${app.tab === tab}">` +
        `${tab}</button>`,
    )
    .join("");
  const notice = app.notice ? `<div class="error-panel">${esc(app.notice)}</div>` : "";
  let view: string;
  if (app.tab === "queue") view = renderSuggestionQueue(app.queue);
  else if (app.tab === "mapping") view = renderMappingView(app);
  else view = renderGapReport(snapshot.gap);
  return (
    `<header class="bar"><h1>${esc(snapshot.project.name)}</h1>` +
    `<span class="stats">${esc(snapshot.stats.rendered)}</span></header>` +
    `<nav class="tabs">${tabs}</nav>` +
    notice +
    view
  );
}

export { candidateKey };
