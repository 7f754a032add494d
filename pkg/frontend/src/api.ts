/** Thin typed client over the service's documented endpoints. Every call
 * resolves to a discriminated result so callers can branch on HTTP
 * conflicts (409) and validation errors (422) without try/catch noise;
 * network failures reject and are handled by the caller's retry banner. */

import type { MetricsPayload, PredictionRecord, Verdict } from "./types.js";

export type ApiResult<T> =
  | { ok: true; value: T }
  | { ok: false; status: number; error: string };

async function asResult<T>(response: Response): Promise<ApiResult<T>> {
  if (response.ok) {
    return { ok: true, value: (await response.json()) as T };
  }
  let error = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") error = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  return { ok: false, status: response.status, error };
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  imageUrl(ref: string): string {
    return `${this.base}/images/${ref}`;
  }

  async fetchUnreviewed(limit = 50): Promise<ApiResult<PredictionRecord[]>> {
    const res = await fetch(
      `${this.base}/records?status=unreviewed&limit=${limit}`,
    );
    return asResult(res);
  }

  async review(
    id: number,
    verdict: Verdict,
  ): Promise<ApiResult<PredictionRecord & { cycle_started: boolean }>> {
    const res = await fetch(`${this.base}/records/${id}/review`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(verdict),
    });
    return asResult(res);
  }

  async metrics(): Promise<ApiResult<MetricsPayload>> {
    return asResult(await fetch(`${this.base}/metrics`));
  }

  async retrain(): Promise<ApiResult<{ started: boolean }>> {
    return asResult(await fetch(`${this.base}/retrain`, { method: "POST" }));
  }

  async predict(pnmBytes: Uint8Array): Promise<ApiResult<PredictionRecord>> {
    const res = await fetch(`${this.base}/predict`, {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: pnmBytes as unknown as BodyInit,
    });
    return asResult(res);
  }
}
