/** Typed client for the campaign service JSON API (schema 1). */
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
export class Api {
    constructor(baseUrl, fetchFn) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async call(path, init) {
        const resp = await this.fetchFn(this.baseUrl + path, init);
        const text = await resp.text();
        let body = null;
        try {
            body = text ? JSON.parse(text) : null;
        }
        catch {
            body = { error: text };
        }
        if (!resp.ok) {
            const msg = body && typeof body === "object" && "error" in body
                ? String(body.error)
                : `HTTP ${resp.status}`;
            throw new ApiError(resp.status, msg);
        }
        return body;
    }
    post(path, payload) {
        return this.call(path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload),
        });
    }
    listCampaigns() {
        return this.call("/campaigns");
    }
    createCampaign(req) {
        return this.post("/campaigns", req);
    }
    getState(id) {
        return this.call(`/campaigns/${id}`);
    }
    suggest(id, override = false) {
        return this.post(`/campaigns/${id}/suggest`, { override });
    }
    submitResults(id, observations, offBatch = false) {
        return this.post(`/campaigns/${id}/results`, {
            observations,
            off_batch: offBatch,
        });
    }
}
