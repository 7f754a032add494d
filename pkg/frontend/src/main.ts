/** App assembly: review queue + metrics dashboard against the same-origin
 * service. Served at /ui/, so endpoint paths are site-absolute. */

import { ApiClient } from "./api.js";
import { Dashboard } from "./dashboard.js";
import {
  renderDashboard,
  renderReviewScreen,
  showBanner,
  showToast,
  wireKeyboard,
} from "./dom.js";
import { ReviewQueue } from "./state.js";

const POLL_MS = 2000;

function boot(): void {
  const api = new ApiClient("");
  const queue = new ReviewQueue(api);
  const dash = new Dashboard(api, POLL_MS);

  const queueRoot = document.getElementById("review")!;
  const dashRoot = document.getElementById("dashboard")!;
  const bannerRoot = document.getElementById("banner")!;

  queue.onEvent((event) => {
    if (event.kind === "changed") {
      renderReviewScreen(queueRoot, queue, api);
      bannerRoot.replaceChildren();
    } else if (event.kind === "submitted") {
      if (event.cycleStarted) showToast("auto retraining cycle started");
      void dash.refresh();
    } else if (event.kind === "conflict") {
      showToast(`already reviewed elsewhere: ${event.message}`);
    } else if (event.kind === "network-error") {
      showBanner(bannerRoot, event.message, () => void queue.load());
    }
  });

  dash.onUpdate(() => renderDashboard(dashRoot, dash));

  wireKeyboard(queue);
  void queue.load();
  void dash.refresh();
  dash.start();
  // pick up frames predicted while the tab is open
  setInterval(() => {
    if (queue.queueLength() === 0) void queue.load();
  }, POLL_MS);
}

document.addEventListener("DOMContentLoaded", boot);
