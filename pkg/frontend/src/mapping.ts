// Mapping browser model and view. Ticked mode is the Step-4 walk: only
// trees of the final threat's ticked properties are on the table, and
// submitting composes a map statement. "All trees" mode is the Step-5
// safety check over every tree; submitting composes a safety statement,
// and a separate action confirms an empty check.

import { esc } from "./html.js";
import { mapStatement, safetyStatement } from "./statements.js";
import { PROPERTY_LETTERS, type ThreatRow, type TreeNodePayload, type TreesPayload } from "./types.js";

export type BrowserMode = "ticked" | "all";

export interface MappingSelection {
  finalId: string;
  mode: BrowserMode;
  nodes: Set<string>;
  representative: string | null;
}

export function freshSelection(finalId: string, mode: BrowserMode = "ticked"): MappingSelection {
  return { finalId, mode, nodes: new Set(), representative: null };
}

export function nodeLetter(nodeId: string): string {
  const cut = nodeId.indexOf("_");
  return cut < 0 ? nodeId : nodeId.slice(0, cut);
}

/** Property groups the browser lists, in catalog letter order. */
export function visibleProperties(
  trees: TreesPayload,
  tickedLetters: readonly string[],
  mode: BrowserMode,
): string[] {
  const present = PROPERTY_LETTERS.filter((letter) => (trees.properties[letter] ?? []).length > 0);
  if (mode === "all") return present;
  const ticked = new Set(tickedLetters);
  return present.filter((letter) => ticked.has(letter));
}

export function toggleNode(selection: MappingSelection, nodeId: string): MappingSelection {
  const nodes = new Set(selection.nodes);
  if (nodes.has(nodeId)) nodes.delete(nodeId);
  else nodes.add(nodeId);
  const representative =
    selection.representative && nodes.has(selection.representative)
      ? selection.representative
      : null;
  return { ...selection, nodes, representative };
}

export function pickRepresentative(selection: MappingSelection, nodeId: string): MappingSelection {
  if (!selection.nodes.has(nodeId)) return selection;
  return { ...selection, representative: nodeId };
}

export function setMode(selection: MappingSelection, mode: BrowserMode): MappingSelection {
  if (mode === selection.mode) return selection;
  return freshSelection(selection.finalId, mode);
}

/** Document order of every node id, for canonical statement rendering. */
export function documentOrder(trees: TreesPayload): string[] {
  const out: string[] = [];
  const walk = (node: TreeNodePayload) => {
    out.push(node.id);
    node.children.forEach(walk);
  };
  for (const letter of PROPERTY_LETTERS) {
    (trees.properties[letter] ?? []).forEach(walk);
  }
  return out;
}

export function orderedSelection(selection: MappingSelection, trees: TreesPayload): string[] {
  const rank = new Map(documentOrder(trees).map((id, at) => [id, at]));
  return [...selection.nodes].sort(
    (a, b) => (rank.get(a) ?? Number.MAX_SAFE_INTEGER) - (rank.get(b) ?? Number.MAX_SAFE_INTEGER),
  );
}

/** Inline validation, raised before anything is posted. */
export function scopeViolations(
  selection: MappingSelection,
  tickedLetters: readonly string[],
): string[] {
  if (selection.mode === "all") return [];
  const ticked = new Set(tickedLetters);
  return [...selection.nodes]
    .filter((nodeId) => !ticked.has(nodeLetter(nodeId)))
    .sort()
    .map((nodeId) => `${nodeId} is outside the ticked properties`);
}

export function canSubmit(selection: MappingSelection, tickedLetters: readonly string[]): boolean {
  if (selection.nodes.size === 0) return false;
  if (scopeViolations(selection, tickedLetters).length > 0) return false;
  if (selection.mode === "ticked") {
    return selection.representative !== null && selection.nodes.has(selection.representative);
  }
  return true;
}

export function composeStatement(selection: MappingSelection, trees: TreesPayload): string {
  const nodes = orderedSelection(selection, trees);
  if (selection.mode === "ticked") {
    if (!selection.representative) throw new Error("a map statement needs a representative");
    return mapStatement(selection.finalId, nodes, selection.representative);
  }
  return safetyStatement(selection.finalId, nodes);
}

/** Step-5 confirmation that no further tree nodes apply. */
export function confirmEmptyStatement(selection: MappingSelection): string {
  return safetyStatement(selection.finalId, []);
}

export function nodeById(trees: TreesPayload, nodeId: string): TreeNodePayload | null {
  let found: TreeNodePayload | null = null;
  const walk = (node: TreeNodePayload) => {
    if (node.id === nodeId) found = node;
    else node.children.forEach(walk);
  };
  for (const roots of Object.values(trees.properties)) roots.forEach(walk);
  return found;
}

function renderNode(node: TreeNodePayload, selection: MappingSelection): string {
  const checked = selection.nodes.has(node.id) ? " checked" : "";
  const kids = node.children.length
    ? `<ul>${node.children.map((child) => renderNode(child, selection)).join("")}</ul>`
    : "";
  return (
    `<li><label>` +
    `<input type="checkbox" data-action="toggle-node" data-node="${esc(node.id)}"${checked}>` +
    `<span class="node-label">${esc(node.id)} ${esc(node.label)}</span>` +
    `</label>${kids}</li>`
  );
}

function renderRepPicker(selection: MappingSelection, trees: TreesPayload): string {
  if (selection.mode !== "ticked" || selection.nodes.size === 0) return "";
  const options = orderedSelection(selection, trees)
    .map((nodeId) => {
      const checked = nodeId === selection.representative ? " checked" : "";
      return (
        `<label><input type="radio" name="map-rep" value="${esc(nodeId)}"` +
        ` data-action="pick-map-rep"${checked}> ${esc(nodeId)}</label>`
      );
    })
    .join(" ");
  return `<p class="rep-picker">representative: ${options}</p>`;
}

function renderComposedPreview(selection: MappingSelection, trees: TreesPayload): string {
  const anchor = selection.representative ?? orderedSelection(selection, trees)[0];
  if (!anchor) return "";
  const node = nodeById(trees, anchor);
  if (!node) return "";
  return `<p class="composed-preview">${esc(node.composed)}</p>`;
}

export function renderMappingBrowser(
  final: ThreatRow,
  trees: TreesPayload,
  selection: MappingSelection,
): string {
  const letters = visibleProperties(trees, final.properties, selection.mode);
  const sections = letters
    .map((letter) => {
      const roots = trees.properties[letter] ?? [];
      const body = roots.map((root) => renderNode(root, selection)).join("");
      return (
        `<section class="tree" data-letter="${esc(letter)}">` +
        `<h4>${esc(letter)}</h4><ul>${body}</ul></section>`
      );
    })
    .join("");
  const violations = scopeViolations(selection, final.properties)
    .map((message) => `<p class="violation">${esc(message)}</p>`)
    .join("");
  const tickedPressed = selection.mode === "ticked" ? "true" : "false";
  const allPressed = selection.mode === "all" ? "true" : "false";
  const submitLabel = selection.mode === "ticked" ? "map to selection" : "extend mapping";
  const disabled = canSubmit(selection, final.properties) ? "" : " disabled";
  const confirmEmpty =
    selection.mode === "all" && selection.nodes.size === 0
      ? ` <button data-action="confirm-empty">confirm: no further nodes</button>`
      : "";
  return (
    `<section class="mapping" data-final="${esc(final.id)}">` +
    `<h3>${esc(final.id)} ${esc(final.label)} {${esc(final.properties.join(", "))}}</h3>` +
    `<p class="mode-toggle">` +
    `<button data-action="mode-ticked" aria-pressed="${tickedPressed}">ticked properties</button>` +
    `<button data-action="mode-all" aria-pressed="${allPressed}">all trees</button>` +
    `</p>` +
    sections +
    renderRepPicker(selection, trees) +
    renderComposedPreview(selection, trees) +
    violations +
    `<p class="actions">` +
    `<button data-action="submit-mapping"${disabled}>${submitLabel}</button>` +
    confirmEmpty +
    `</p></section>`
  );
}
