/** DOM rendering for the dashboard: tables, progress readout, batch form. */

import type { CampaignState } from "./api.js";
import type { ViewState } from "./state.js";

function el(
  doc: Document,
  tag: string,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElement {
  const node = doc.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function fmt(value: number | null, digits = 3): string {
  return value === null ? "—" : value.toFixed(digits);
}

export function renderMessage(doc: Document, view: ViewState): void {
  const banner = doc.getElementById("message");
  if (!banner) return;
  banner.textContent = view.message;
  banner.className = view.message ? `banner ${view.messageKind}` : "banner hidden";
}

export function renderProgress(doc: Document, state: CampaignState): void {
  const box = doc.getElementById("progress");
  if (!box) return;
  box.textContent = "";
  const ep = state.endpoint;
  const epLabel = ep.kind === "avg_top_k" ? `average top-${ep.k}` : `min top-${ep.k}`;
  box.appendChild(
    el(doc, "p", { id: "endpoint-line" },
      `Endpoint: ${epLabel} ≥ ${ep.target} — current ${fmt(ep.current)}` +
      (ep.reached ? "  ✓ reached" : "")),
  );
  box.appendChild(
    el(doc, "p", { id: "progress-line" },
      `avg top-10: ${fmt(state.progress.avg_top10)}   |   ` +
      `min top-3: ${fmt(state.progress.min_top3)}   |   ` +
      `tested ${state.seen_count}/${state.pool_size}`),
  );
}

export function renderTopTable(doc: Document, state: CampaignState): void {
  const table = doc.getElementById("topk");
  if (!table) return;
  table.textContent = "";
  const head = el(doc, "tr");
  head.appendChild(el(doc, "th", {}, "#"));
  head.appendChild(el(doc, "th", {}, "ligand"));
  head.appendChild(el(doc, "th", {}, "PIC"));
  table.appendChild(head);
  state.top.forEach((entry, i) => {
    const row = el(doc, "tr", { class: "top-row" });
    row.appendChild(el(doc, "td", {}, String(i + 1)));
    row.appendChild(el(doc, "td", {}, entry.ligand_id));
    row.appendChild(el(doc, "td", {}, entry.pic.toFixed(4)));
    table.appendChild(row);
  });
  if (!state.top.length) {
    const row = el(doc, "tr", { class: "top-row empty" });
    row.appendChild(el(doc, "td", { colspan: "3" }, "no results yet"));
    table.appendChild(row);
  }
}

export function renderBatchForm(
  doc: Document,
  state: CampaignState,
  view: ViewState,
): void {
  const box = doc.getElementById("batch");
  if (!box) return;
  box.textContent = "";
  const batch = state.pending_batch ?? [];
  if (!batch.length) {
    box.appendChild(
      el(doc, "p", { id: "batch-empty" },
        state.seen_count === 0
          ? "No batch yet — suggest the first batch."
          : "Batch complete — request the next suggestion."),
    );
    return;
  }
  const reported = new Set(state.pending_reported);
  const table = el(doc, "table", { id: "batch-table" });
  for (const lid of batch) {
    const row = el(doc, "tr", { class: "batch-row" });
    row.appendChild(el(doc, "td", {}, lid));
    const cell = el(doc, "td");
    if (reported.has(lid)) {
      cell.appendChild(el(doc, "span", { class: "reported" }, "submitted"));
    } else {
      const input = el(doc, "input", {
        type: "text",
        "data-ligand": lid,
        class: "pic-input",
        placeholder: "PIC",
      }) as HTMLInputElement;
      input.value = view.entered.get(lid) ?? "";
      cell.appendChild(input);
    }
    row.appendChild(cell);
    table.appendChild(row);
  }
  box.appendChild(table);
}

export function renderHistory(doc: Document, state: CampaignState): void {
  const box = doc.getElementById("history");
  if (!box) return;
  box.textContent = "";
  for (const cycle of state.cycles) {
    const item = el(doc, "li", { class: "cycle" });
    const obs = new Map(cycle.observations.map((o) => [o.ligand_id, o.pic]));
    const parts = cycle.batch.map((lid) => {
      const pic = obs.get(lid);
      return pic === undefined ? lid : `${lid}=${pic}`;
    });
    item.textContent = `cycle ${cycle.cycle}: ${parts.join(", ")}`;
    box.appendChild(item);
  }
}

export function renderCampaign(
  doc: Document,
  state: CampaignState,
  view: ViewState,
): void {
  const section = doc.getElementById("campaign");
  if (section) {
    section.className = "";
  }
  const title = doc.getElementById("campaign-title");
  if (title) {
    title.textContent =
      `${state.campaign_id} — ${state.protein_id} (${state.policy}, ` +
      `b=${state.batch_size})`;
  }
  renderProgress(doc, state);
  renderBatchForm(doc, state, view);
  renderTopTable(doc, state);
  renderHistory(doc, state);
  renderMessage(doc, view);
}
