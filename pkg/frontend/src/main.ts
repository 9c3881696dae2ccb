/** Dashboard wiring: create/open campaigns, suggest, enter results.
 *
 * Thin client by design: every decision (batch choice, endpoint math) is the
 * server's; the page renders GET /campaigns/{id} verbatim after each action.
 */

import { Api, ApiError, type CampaignState, type FetchLike } from "./api.js";
import {
  clearEntered,
  collectObservations,
  newViewState,
  rememberInput,
  type ViewState,
} from "./state.js";
import { renderCampaign, renderMessage } from "./render.js";

export interface App {
  view: ViewState;
  refresh(): Promise<CampaignState | null>;
  createFromForm(): Promise<void>;
  openFromForm(): Promise<void>;
  requestSuggestion(): Promise<void>;
  submitEntered(): Promise<void>;
}

function setMessage(doc: Document, view: ViewState, text: string,
                    kind: "info" | "error" = "info"): void {
  view.message = text;
  view.messageKind = kind;
  renderMessage(doc, view);
}

function inputValue(doc: Document, id: string): string {
  const node = doc.getElementById(id) as HTMLInputElement | null;
  return node ? node.value : "";
}

export function initApp(doc: Document, api: Api): App {
  const view = newViewState();
  let lastState: CampaignState | null = null;

  async function refresh(): Promise<CampaignState | null> {
    if (!view.campaignId) {
      return null;
    }
    try {
      const state = await api.getState(view.campaignId);
      lastState = state;
      renderCampaign(doc, state, view);
      return state;
    } catch (err) {
      // Keep the last rendered tables and every typed value; just say so.
      setMessage(doc, view, `server unreachable: ${String(err)}`, "error");
      return null;
    }
  }

  async function openCampaign(id: string): Promise<void> {
    view.campaignId = id;
    view.entered = new Map();
    const field = doc.getElementById("open-id") as HTMLInputElement | null;
    if (field) {
      field.value = id;
    }
    setMessage(doc, view, `campaign ${id}`);
    await refresh();
  }

  const app: App = {
    view,
    refresh,

    async createFromForm() {
      try {
        const poolText = inputValue(doc, "pool-json");
        const pool = JSON.parse(poolText);
        const endpointKind = inputValue(doc, "endpoint-kind") === "min_top_k"
          ? "min_top_k" as const : "avg_top_k" as const;
        const req = {
          schema: 1 as const,
          pool,
          endpoint: {
            kind: endpointKind,
            k: Number(inputValue(doc, "endpoint-k") || (endpointKind === "avg_top_k" ? 10 : 3)),
            target: Number(inputValue(doc, "endpoint-target") || 8),
          },
          config: { batch_size: Number(inputValue(doc, "batch-size") || 10) },
          seed: Number(inputValue(doc, "seed") || 0),
          policy: inputValue(doc, "policy") || "spade",
        };
        const created = await api.createCampaign(req);
        await openCampaign(created.campaign_id);
      } catch (err) {
        setMessage(doc, view, `create failed: ${String(err)}`, "error");
      }
    },

    async openFromForm() {
      const id = inputValue(doc, "open-id").trim();
      if (id) {
        await openCampaign(id);
      }
    },

    async requestSuggestion() {
      if (!view.campaignId) return;
      try {
        const res = await api.suggest(view.campaignId);
        setMessage(doc, view,
          res.pending
            ? `cycle ${res.cycle}: same batch (results still pending)`
            : `cycle ${res.cycle}: ${res.batch.length} ligands suggested`);
        await refresh();
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          setMessage(doc, view, `pending batch conflict: ${err.message}`, "error");
        } else {
          setMessage(doc, view, `suggest failed: ${String(err)}`, "error");
        }
      }
    },

    async submitEntered() {
      if (!view.campaignId || !lastState) return;
      const batch = lastState.pending_batch ?? [];
      const { observations, invalid } = collectObservations(view, batch);
      if (invalid.length) {
        setMessage(doc, view,
          `not a finite number for: ${invalid.join(", ")}`, "error");
        return;
      }
      if (!observations.length) {
        setMessage(doc, view, "no PIC values entered", "error");
        return;
      }
      const remaining = batch.length - new Set(lastState.pending_reported).size;
      if (observations.length < remaining) {
        const confirmBox = doc.getElementById("confirm-partial") as
          HTMLInputElement | null;
        if (!confirmBox || !confirmBox.checked) {
          setMessage(doc, view,
            `partial submission (${observations.length}/${remaining}): tick ` +
            `"confirm partial" to proceed`, "error");
          return;
        }
      }
      try {
        await api.submitResults(view.campaignId, observations);
        clearEntered(view, observations.map((o) => o.ligand_id));
        setMessage(doc, view, `${observations.length} results recorded`);
        await refresh();
      } catch (err) {
        // Typed values stay in view.entered for correction.
        setMessage(doc, view, `submit failed: ${String(err)}`, "error");
      }
    },
  };

  doc.getElementById("create-btn")?.addEventListener("click", () => {
    void app.createFromForm();
  });
  doc.getElementById("open-btn")?.addEventListener("click", () => {
    void app.openFromForm();
  });
  doc.getElementById("suggest-btn")?.addEventListener("click", () => {
    void app.requestSuggestion();
  });
  doc.getElementById("submit-btn")?.addEventListener("click", () => {
    void app.submitEntered();
  });
  doc.getElementById("refresh-btn")?.addEventListener("click", () => {
    void app.refresh();
  });
  doc.getElementById("batch")?.addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    const lid = target?.getAttribute?.("data-ligand");
    if (lid) {
      rememberInput(view, lid, target.value);
    }
  });

  return app;
}

export function bootstrap(): void {
  if (typeof document === "undefined" || typeof fetch === "undefined") {
    return; // imported for its exports (tests), not as the page entry
  }
  const api = new Api("", fetch.bind(globalThis) as FetchLike);
  initApp(document, api);
}

bootstrap();
