/** Dashboard state: polls /metrics and gates the retrain button.
 * Displayed numbers come verbatim from the service payload; nothing is
 * recomputed client-side. */
export class Dashboard {
    constructor(api, pollMs = 2000) {
        this.api = api;
        this.pollMs = pollMs;
        this.metrics = null;
        this.lastError = null;
        this.retrainMessage = null;
        this.listeners = [];
        this.timer = null;
    }
    onUpdate(listener) {
        this.listeners.push(listener);
    }
    async refresh() {
        let result;
        try {
            result = await this.api.metrics();
        }
        catch (err) {
            this.lastError = err.message;
            return;
        }
        if (result.ok) {
            this.metrics = result.value;
            this.lastError = null;
            for (const l of this.listeners)
                l(result.value);
        }
        else {
            this.lastError = result.error;
        }
    }
    start() {
        if (this.timer !== null)
            return;
        this.timer = setInterval(() => void this.refresh(), this.pollMs);
    }
    stop() {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
    }
    retrainDisabled() {
        const m = this.metrics;
        return m !== null && (m.busy || m.pending_corrections + m.stack_size === 0);
    }
    async requestRetrain() {
        let result;
        try {
            result = await this.api.retrain();
        }
        catch (err) {
            this.retrainMessage = err.message;
            return false;
        }
        this.retrainMessage = result.ok ? "retraining started" : result.error;
        await this.refresh();
        return result.ok;
    }
    /** Wait until the service reports no running cycle. */
    async waitUntilIdle(timeoutMs = 60000, stepMs = 150) {
        const deadline = Date.now() + timeoutMs;
        for (;;) {
            await this.refresh();
            if (this.metrics && !this.metrics.busy)
                return this.metrics;
            if (Date.now() > deadline)
                throw new Error("retraining did not finish");
            await new Promise((resolve) => setTimeout(resolve, stepMs));
        }
    }
}
