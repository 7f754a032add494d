// @vitest-environment jsdom
import { beforeEach, describe, expect, it, vi } from "vitest";

import type { ApiClient, ApiResult } from "../src/api.js";
import { Dashboard } from "../src/dashboard.js";
import { renderDashboard, renderReviewScreen, wireKeyboard } from "../src/dom.js";
import { ReviewQueue } from "../src/state.js";
import type { MetricsPayload, PredictionRecord } from "../src/types.js";

function record(id: number, predicted = "Fluid"): PredictionRecord {
  return {
    id,
    image_ref: `images/${id}.pgm`,
    predicted: predicted as PredictionRecord["predicted"],
    probabilities: [0.05, 0.7, 0.15, 0.1],
    created_at: 0,
    review: "unreviewed",
    corrected_label: null,
  };
}

function ok<T>(value: T): ApiResult<T> {
  return { ok: true, value };
}

function mockApi(records: PredictionRecord[]) {
  return {
    fetchUnreviewed: vi.fn(async () => ok(records.slice())),
    review: vi.fn(async (id: number) =>
      ok({ ...record(id), review: "confirmed", cycle_started: false })),
    imageUrl: (ref: string) => `/images/${ref}`,
  } as unknown as ApiClient;
}

const metrics: MetricsPayload = {
  p0: 0.65,
  pf: 0.82,
  r: 0.17,
  gain: 1.2615,
  q: 0.7,
  rounds: 1,
  cycles: 1,
  stack_size: 0,
  pending_corrections: 2,
  busy: false,
  history: [{ p0: 0.65, pf: 0.82, r: 0.17, gain: 1.2615, q: 0.7, rounds: 1, cycle: 0, status: "retrained" }],
};

describe("review screen rendering", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "<div id='root'></div>";
    root = document.getElementById("root")!;
  });

  it("shows the frame, probability bars and class buttons", async () => {
    const api = mockApi([record(1)]);
    const queue = new ReviewQueue(api);
    await queue.load();
    renderReviewScreen(root, queue, api);
    expect(root.querySelector("img.frame")!.getAttribute("src")).toBe(
      "/images/images/1.pgm",
    );
    expect(root.querySelectorAll(".prob-row")).toHaveLength(4);
    const buttons = root.querySelectorAll<HTMLButtonElement>(".class-btn");
    expect(buttons).toHaveLength(4);
    // the predicted class (Fluid) cannot be used as a correction
    expect(buttons[1].disabled).toBe(true);
    expect(buttons[0].disabled).toBe(false);
  });

  it("clicking a class button submits a correction", async () => {
    const api = mockApi([record(4, "Empty")]);
    const queue = new ReviewQueue(api);
    await queue.load();
    renderReviewScreen(root, queue, api);
    root.querySelectorAll<HTMLButtonElement>(".class-btn")[3].click();
    await vi.waitFor(() => expect(api.review).toHaveBeenCalledOnce());
    expect(api.review).toHaveBeenCalledWith(4, { verdict: "corrected", label: "Jam" });
  });

  it("keyboard: Enter confirms, digits correct", async () => {
    const api = mockApi([record(9, "Empty")]);
    const queue = new ReviewQueue(api);
    await queue.load();
    const handler = wireKeyboard(queue);
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "Enter" }));
    await vi.waitFor(() => expect(api.review).toHaveBeenCalledOnce());
    expect(api.review).toHaveBeenLastCalledWith(9, { verdict: "confirmed" });
    document.removeEventListener("keydown", handler);
  });

  it("renders the empty-queue notice", async () => {
    const api = mockApi([]);
    const queue = new ReviewQueue(api);
    await queue.load();
    renderReviewScreen(root, queue, api);
    expect(root.querySelector(".queue-empty")).not.toBeNull();
  });
});

describe("dashboard rendering", () => {
  it("shows gain values verbatim from the payload", () => {
    document.body.innerHTML = "<div id='dash'></div>";
    const dash = new Dashboard(mockApi([]), 60_000);
    dash.metrics = metrics;
    const root = document.getElementById("dash")!;
    renderDashboard(root, dash);
    const values = Array.from(root.querySelectorAll("dd")).map((n) => n.textContent);
    expect(values).toContain("1.262"); // gain rendered, not recomputed
    expect(values).toContain("0.170");
    expect(root.querySelector(".gauge-fill.ok")).not.toBeNull();
    const btn = root.querySelector<HTMLButtonElement>(".retrain-btn")!;
    expect(btn.disabled).toBe(false);
  });

  it("disables the retrain button while a cycle runs", () => {
    document.body.innerHTML = "<div id='dash'></div>";
    const dash = new Dashboard(mockApi([]), 60_000);
    dash.metrics = { ...metrics, busy: true };
    const root = document.getElementById("dash")!;
    renderDashboard(root, dash);
    expect(root.querySelector<HTMLButtonElement>(".retrain-btn")!.disabled).toBe(true);
  });

  it("disables the retrain button when nothing is stacked", () => {
    document.body.innerHTML = "<div id='dash'></div>";
    const dash = new Dashboard(mockApi([]), 60_000);
    dash.metrics = { ...metrics, pending_corrections: 0, stack_size: 0 };
    const root = document.getElementById("dash")!;
    renderDashboard(root, dash);
    expect(root.querySelector<HTMLButtonElement>(".retrain-btn")!.disabled).toBe(true);
  });
});
