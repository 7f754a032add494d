/** DOM rendering for the review screen and the metrics dashboard. */

import type { ApiClient } from "./api.js";
import type { Dashboard } from "./dashboard.js";
import type { ReviewQueue } from "./state.js";
import type { MetricsPayload, TrafficClassName } from "./types.js";
import { CLASS_NAMES } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function fmt(value: number | null, digits = 3): string {
  return value === null || value === undefined ? "—" : value.toFixed(digits);
}

export function renderReviewScreen(
  root: HTMLElement,
  queue: ReviewQueue,
  api: ApiClient,
): void {
  root.replaceChildren();
  const record = queue.current();
  const counter = el("div", "queue-counter");
  counter.textContent = `${queue.queueLength()} awaiting review`;
  root.append(counter);

  if (!record) {
    root.append(el("p", "queue-empty", "Queue is empty. New frames appear here."));
    return;
  }

  const card = el("div", "record-card");
  card.dataset.recordId = String(record.id);

  const img = el("img", "frame");
  img.src = api.imageUrl(record.image_ref);
  img.alt = `frame ${record.image_ref}`;
  card.append(img);

  const meta = el("div", "record-meta");
  meta.append(el("div", "predicted", `predicted: ${record.predicted}`));
  const bars = el("div", "prob-bars");
  record.probabilities.forEach((p, i) => {
    const row = el("div", "prob-row");
    row.append(el("span", "prob-label", CLASS_NAMES[i]));
    const track = el("div", "prob-track");
    const fill = el("div", "prob-fill");
    fill.style.width = `${Math.round(p * 100)}%`;
    track.append(fill);
    row.append(track);
    row.append(el("span", "prob-value", p.toFixed(3)));
    bars.append(row);
  });
  meta.append(bars);
  card.append(meta);

  const buttons = el("div", "verdict-buttons");
  CLASS_NAMES.forEach((name, i) => {
    const btn = el("button", "class-btn", `${i + 1} ${name}`);
    btn.dataset.label = name;
    // correcting with the predicted class is not a correction: server
    // would reject it with 422, so the button is disabled up front
    btn.disabled = name === record.predicted;
    btn.addEventListener("click", () => void queue.correct(name));
    buttons.append(btn);
  });
  const confirm = el("button", "confirm-btn", "Confirm (Enter)");
  confirm.addEventListener("click", () => void queue.confirm());
  buttons.append(confirm);
  card.append(buttons);
  root.append(card);
}

export function renderDashboard(root: HTMLElement, dash: Dashboard): void {
  root.replaceChildren();
  const m: MetricsPayload | null = dash.metrics;
  if (!m) {
    root.append(el("p", "loading", "loading metrics…"));
    return;
  }

  const gauge = el("div", "gauge");
  const accuracy = m.pf ?? m.p0;
  const label = el(
    "div",
    "gauge-label",
    accuracy === null
      ? `no measurement yet (Q = ${m.q})`
      : `accuracy ${fmt(accuracy)} vs Q ${m.q}`,
  );
  gauge.append(label);
  const track = el("div", "gauge-track");
  const fill = el(
    "div",
    accuracy !== null && accuracy >= m.q ? "gauge-fill ok" : "gauge-fill low",
  );
  fill.style.width = `${Math.round((accuracy ?? 0) * 100)}%`;
  const marker = el("div", "gauge-marker");
  marker.style.left = `${Math.round(m.q * 100)}%`;
  track.append(fill, marker);
  gauge.append(track);
  root.append(gauge);

  const stats = el("dl", "metric-grid");
  const pairs: Array<[string, string]> = [
    ["p0", fmt(m.p0)],
    ["pf", fmt(m.pf)],
    ["r", fmt(m.r)],
    ["gain", fmt(m.gain)],
    ["rounds", String(m.rounds)],
    ["cycles", String(m.cycles)],
    ["stack", String(m.stack_size)],
    ["pending", String(m.pending_corrections)],
  ];
  for (const [k, v] of pairs) {
    stats.append(el("dt", undefined, k), el("dd", undefined, v));
  }
  root.append(stats);

  if (m.history.length > 0) {
    root.append(sparkline(m.history.map((h) => h.gain ?? 1)));
  }

  const retrain = el("button", "retrain-btn", m.busy ? "Retraining…" : "Retrain");
  retrain.disabled = dash.retrainDisabled();
  retrain.addEventListener("click", () => void dash.requestRetrain());
  root.append(retrain);
  if (dash.retrainMessage) {
    root.append(el("div", "retrain-msg", dash.retrainMessage));
  }
}

/** Inline SVG sparkline of per-cycle gain values. */
function sparkline(values: number[], width = 160, height = 32): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "sparkline");
  const min = Math.min(...values, 1);
  const max = Math.max(...values, 1);
  const span = max - min || 1;
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  const points = values
    .map((v, i) => {
      const x = values.length > 1 ? i * step : width / 2;
      const y = height - 2 - ((v - min) / span) * (height - 4);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", points);
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  svg.append(line);
  return svg;
}

export function showToast(message: string): void {
  const toast = el("div", "toast", message);
  document.body.append(toast);
  setTimeout(() => toast.remove(), 2500);
}

export function showBanner(root: HTMLElement, message: string, onRetry: () => void): void {
  root.replaceChildren();
  const banner = el("div", "error-banner");
  banner.append(el("span", undefined, `connection trouble: ${message} `));
  const retry = el("button", "retry-btn", "Retry");
  retry.addEventListener("click", onRetry);
  banner.append(retry);
  root.append(banner);
}

export function wireKeyboard(queue: ReviewQueue): (ev: KeyboardEvent) => void {
  const handler = (ev: KeyboardEvent) => {
    if (ev.key === "Enter") {
      void queue.confirm();
    } else if (ev.key >= "1" && ev.key <= "4") {
      const label = CLASS_NAMES[Number(ev.key) - 1] as TrafficClassName;
      void queue.correct(label);
    } else if (ev.key === "ArrowRight" || ev.key === "j") {
      queue.advance(1);
    } else if (ev.key === "ArrowLeft" || ev.key === "k") {
      queue.advance(-1);
    }
  };
  document.addEventListener("keydown", handler);
  return handler;
}
