/** Review-queue state machine.
 *
 * Invariants:
 *  - a record leaves the queue only after a 2xx review response; while a
 *    submission is in flight it is marked pending (and skipped by the
 *    cursor) but stays in the list, and it reverts on failure;
 *  - the machine holds no state a reload could not rebuild from the
 *    service, beyond the cursor position.
 */
export class ReviewQueue {
    constructor(api) {
        this.api = api;
        this.records = [];
        this.cursor = 0;
        this.pending = new Set();
        this.lastError = null;
        this.listeners = [];
    }
    onEvent(listener) {
        this.listeners.push(listener);
    }
    emit(event) {
        for (const l of this.listeners)
            l(event);
    }
    /** Reload the queue from the service; keeps the cursor in bounds. */
    async load() {
        const result = await this.api.fetchUnreviewed().catch((err) => {
            this.lastError = err.message;
            this.emit({ kind: "network-error", message: err.message });
            return null;
        });
        if (!result)
            return;
        if (result.ok) {
            this.records = result.value;
            this.pending.clear();
            this.clampCursor();
            this.lastError = null;
            this.emit({ kind: "changed" });
        }
        else {
            this.lastError = result.error;
            this.emit({ kind: "network-error", message: result.error });
        }
    }
    clampCursor() {
        if (this.records.length === 0) {
            this.cursor = 0;
        }
        else if (this.cursor >= this.records.length) {
            this.cursor = this.records.length - 1;
        }
    }
    current() {
        for (let i = 0; i < this.records.length; i++) {
            const idx = (this.cursor + i) % this.records.length;
            if (!this.pending.has(this.records[idx].id)) {
                this.cursor = idx;
                return this.records[idx];
            }
        }
        return null;
    }
    advance(step = 1) {
        if (this.records.length === 0)
            return;
        this.cursor =
            (this.cursor + step + this.records.length) % this.records.length;
        this.emit({ kind: "changed" });
    }
    queueLength() {
        return this.records.length;
    }
    /** Confirm the current record. */
    async confirm() {
        const record = this.current();
        if (record)
            await this.submit(record, { verdict: "confirmed" });
    }
    /** Correct the current record; the predicted class is not a legal
     * correction (the corresponding button is disabled in the UI). */
    async correct(label) {
        const record = this.current();
        if (!record || label === record.predicted)
            return;
        await this.submit(record, { verdict: "corrected", label });
    }
    async submit(record, verdict) {
        this.pending.add(record.id);
        this.emit({ kind: "changed" });
        let result;
        try {
            result = await this.api.review(record.id, verdict);
        }
        catch (err) {
            // network failure: roll the optimistic mark back, keep the record
            this.pending.delete(record.id);
            this.lastError = err.message;
            this.emit({ kind: "network-error", message: this.lastError });
            return;
        }
        this.pending.delete(record.id);
        if (result.ok) {
            this.records = this.records.filter((r) => r.id !== record.id);
            this.clampCursor();
            this.lastError = null;
            this.emit({
                kind: "submitted",
                id: record.id,
                cycleStarted: result.value.cycle_started,
            });
            this.emit({ kind: "changed" });
        }
        else if (result.status === 409) {
            // someone else reviewed it; refresh the queue
            this.emit({ kind: "conflict", id: record.id, message: result.error });
            await this.load();
        }
        else {
            this.lastError = result.error;
            this.emit({ kind: "network-error", message: result.error });
        }
    }
}
