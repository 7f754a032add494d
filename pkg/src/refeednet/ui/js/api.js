/** Thin typed client over the service's documented endpoints. Every call
 * resolves to a discriminated result so callers can branch on HTTP
 * conflicts (409) and validation errors (422) without try/catch noise;
 * network failures reject and are handled by the caller's retry banner. */
async function asResult(response) {
    if (response.ok) {
        return { ok: true, value: (await response.json()) };
    }
    let error = response.statusText;
    try {
        const body = await response.json();
        if (body && typeof body.error === "string")
            error = body.error;
    }
    catch {
        // non-JSON error body; keep the status text
    }
    return { ok: false, status: response.status, error };
}
export class ApiClient {
    constructor(base = "") {
        this.base = base;
    }
    imageUrl(ref) {
        return `${this.base}/images/${ref}`;
    }
    async fetchUnreviewed(limit = 50) {
        const res = await fetch(`${this.base}/records?status=unreviewed&limit=${limit}`);
        return asResult(res);
    }
    async review(id, verdict) {
        const res = await fetch(`${this.base}/records/${id}/review`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(verdict),
        });
        return asResult(res);
    }
    async metrics() {
        return asResult(await fetch(`${this.base}/metrics`));
    }
    async retrain() {
        return asResult(await fetch(`${this.base}/retrain`, { method: "POST" }));
    }
    async predict(pnmBytes) {
        const res = await fetch(`${this.base}/predict`, {
            method: "POST",
            headers: { "content-type": "application/octet-stream" },
            body: pnmBytes,
        });
        return asResult(res);
    }
}
