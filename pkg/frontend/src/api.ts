/** Typed client for the campaign service JSON API (schema 1). */

export interface PoolPayload {
  protein_id: string;
  kind: "binary" | "dense";
  dim: number;
  ids: string[];
  embeddings: (string | number[])[];
}

export interface EndpointPayload {
  kind: "avg_top_k" | "min_top_k";
  k: number;
  target: number;
}

export interface CreateRequest {
  schema: 1;
  pool: PoolPayload;
  endpoint: EndpointPayload;
  config?: Record<string, unknown>;
  seed?: number;
  policy?: string;
}

export interface TopEntry {
  ligand_id: string;
  pic: number;
}

export interface CampaignCycle {
  cycle: number;
  batch: string[];
  observations: { ligand_id: string; pic: number }[];
}

export interface CampaignState {
  schema: number;
  campaign_id: string;
  protein_id: string;
  policy: string;
  pool_size: number;
  seen_count: number;
  batch_size: number;
  top: TopEntry[];
  endpoint: EndpointPayload & { current: number | null; reached: boolean };
  progress: { avg_top10: number | null; min_top3: number | null };
  pending_batch: string[] | null;
  pending_reported: string[];
  cycles: CampaignCycle[];
}

export interface SuggestResponse {
  campaign_id: string;
  cycle: number;
  batch: string[];
  pending: boolean;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class Api {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async call<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    let body: unknown = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = { error: text };
    }
    if (!resp.ok) {
      const msg =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `HTTP ${resp.status}`;
      throw new ApiError(resp.status, msg);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.call<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  listCampaigns(): Promise<{ campaigns: string[] }> {
    return this.call("/campaigns");
  }

  createCampaign(req: CreateRequest): Promise<{ campaign_id: string }> {
    return this.post("/campaigns", req);
  }

  getState(id: string): Promise<CampaignState> {
    return this.call(`/campaigns/${id}`);
  }

  suggest(id: string, override = false): Promise<SuggestResponse> {
    return this.post(`/campaigns/${id}/suggest`, { override });
  }

  submitResults(
    id: string,
    observations: { ligand_id: string; pic: number }[],
    offBatch = false,
  ): Promise<CampaignState> {
    return this.post(`/campaigns/${id}/results`, {
      observations,
      off_batch: offBatch,
    });
  }
}
