// Gap report view: the final threats no tree node covers, with their
// domain-stripped readings.

import { esc } from "./html.js";
import type { GapPayload } from "./types.js";

export function renderGapReport(gap: GapPayload): string {
  const banner = gap.provisional ? `<p class="banner">Step 4/5 incomplete</p>` : "";
  if (gap.records.length === 0) {
    if (gap.provisional) {
      return `<section class="gap">${banner}<p>No gap records yet.</p></section>`;
    }
    return (
      `<section class="gap"><div class="celebrate">` +
      `<p>Every final threat is mapped. Nothing fell through the trees.</p>` +
      `</div></section>`
    );
  }
  const rows = gap.records
    .map(
      (record) =>
        `<tr data-final="${esc(record.final_id)}">` +
        `<td>${esc(record.final_id)}</td>` +
        `<td>${esc(record.original_label)}</td>` +
        `<td>${esc(record.generalized_label)}</td>` +
        `<td>${esc(record.provenance)}</td>` +
        `<td>${record.confirmed ? "confirmed" : "open"}</td></tr>`,
    )
    .join("");
  return (
    `<section class="gap">${banner}` +
    `<table class="gap-table"><thead><tr>` +
    `<th>final</th><th>original label</th><th>generalized</th>` +
    `<th>provenance</th><th>status</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>` +
    `<p class="actions"><button data-action="export-gap">export report</button></p>` +
    `</section>`
  );
}
