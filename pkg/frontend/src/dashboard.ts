/** Dashboard state: polls /metrics and gates the retrain button.
 * Displayed numbers come verbatim from the service payload; nothing is
 * recomputed client-side. */

import type { ApiClient } from "./api.js";
import type { MetricsPayload } from "./types.js";

export type DashboardListener = (metrics: MetricsPayload) => void;

export class Dashboard {
  metrics: MetricsPayload | null = null;
  lastError: string | null = null;
  retrainMessage: string | null = null;

  private listeners: DashboardListener[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly pollMs = 2000,
  ) {}

  onUpdate(listener: DashboardListener): void {
    this.listeners.push(listener);
  }

  async refresh(): Promise<void> {
    let result;
    try {
      result = await this.api.metrics();
    } catch (err) {
      this.lastError = (err as Error).message;
      return;
    }
    if (result.ok) {
      this.metrics = result.value;
      this.lastError = null;
      for (const l of this.listeners) l(result.value);
    } else {
      this.lastError = result.error;
    }
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.refresh(), this.pollMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  retrainDisabled(): boolean {
    const m = this.metrics;
    return m !== null && (m.busy || m.pending_corrections + m.stack_size === 0);
  }

  async requestRetrain(): Promise<boolean> {
    let result;
    try {
      result = await this.api.retrain();
    } catch (err) {
      this.retrainMessage = (err as Error).message;
      return false;
    }
    this.retrainMessage = result.ok ? "retraining started" : result.error;
    await this.refresh();
    return result.ok;
  }

  /** Wait until the service reports no running cycle. */
  async waitUntilIdle(timeoutMs = 60_000, stepMs = 150): Promise<MetricsPayload> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      await this.refresh();
      if (this.metrics && !this.metrics.busy) return this.metrics;
      if (Date.now() > deadline) throw new Error("retraining did not finish");
      await new Promise((resolve) => setTimeout(resolve, stepMs));
    }
  }
}
