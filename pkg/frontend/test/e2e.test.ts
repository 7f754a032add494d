/** Scripted review-loop session against the real service.
 *
 * Boots the Python service on a scratch data directory, predicts six
 * frames, corrects five of them through the app's review machinery,
 * verifies the server-side stack grew by five, triggers retraining from
 * the dashboard, and checks the dashboard numbers match a raw
 * GET /metrics payload.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Dashboard } from "../src/dashboard.js";
import { ReviewQueue } from "../src/state.js";
import { CLASS_NAMES, type TrafficClassName } from "../src/types.js";

const PORT = 8461;
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;
let dataDir: string;

function pnmFrame(seed: number): Uint8Array {
  // 32x32 P5 scene: dark band with a few bright blocks, varied by seed
  const side = 32;
  const header = new TextEncoder().encode(`P5\n${side} ${side}\n255\n`);
  const raster = new Uint8Array(side * side);
  for (let y = 0; y < side; y++) {
    for (let x = 0; x < side; x++) {
      raster[y * side + x] = y >= 8 && y < 26 ? 45 : 110;
    }
  }
  const blocks = (seed % 5) + 1;
  for (let b = 0; b < blocks; b++) {
    const bx = ((seed * 7 + b * 11) % 27) + 1;
    const by = 9 + ((seed * 3 + b * 5) % 13);
    for (let dy = 0; dy < 3; dy++) {
      for (let dx = 0; dx < 4; dx++) {
        raster[(by + dy) * side + bx + dx] = 230;
      }
    }
  }
  const out = new Uint8Array(header.length + raster.length);
  out.set(header);
  out.set(raster, header.length);
  return out;
}

async function waitForServer(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/metrics`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "refeednet-e2e-"));
  const seeded = spawnSync(
    "python3",
    [
      "-c",
      "import sys; from refeednet.datasets import materialize, synth_dataset; " +
        "materialize(synth_dataset(2, seed=77, domain='shifted'), sys.argv[1])",
      join(dataDir, "retest"),
    ],
    { encoding: "utf-8" },
  );
  if (seeded.status !== 0) throw new Error(`retest seeding failed: ${seeded.stderr}`);

  service = spawn(
    "python3",
    [
      "-c",
      "import sys; from refeednet.service import ServiceConfig, serve; " +
        `serve(ServiceConfig(data_dir=sys.argv[1], port=${PORT}, cycle_epochs=2))`,
      dataDir,
    ],
    { stdio: ["ignore", "inherit", "inherit"] },
  );
  await waitForServer();
}, 60_000);

afterAll(() => {
  service?.kill("SIGTERM");
  rmSync(dataDir, { recursive: true, force: true });
});

describe("review loop end to end", () => {
  it("corrects five records, retrains, and the dashboard matches /metrics", async () => {
    const api = new ApiClient(BASE);

    for (let i = 0; i < 6; i++) {
      const res = await api.predict(pnmFrame(i));
      expect(res.ok).toBe(true);
    }

    const queue = new ReviewQueue(api);
    await queue.load();
    expect(queue.queueLength()).toBe(6);

    const before = await api.metrics();
    if (!before.ok) throw new Error("metrics fetch failed");
    expect(before.value.pending_corrections).toBe(0);

    // correct five records with the first legal (non-predicted) class
    for (let i = 0; i < 5; i++) {
      const current = queue.current();
      expect(current).not.toBeNull();
      const label = CLASS_NAMES.find(
        (name) => name !== current!.predicted,
      ) as TrafficClassName;
      await queue.correct(label);
    }
    expect(queue.queueLength()).toBe(1);

    const after = await api.metrics();
    if (!after.ok) throw new Error("metrics fetch failed");
    expect(after.value.pending_corrections).toBe(5);

    const dash = new Dashboard(api, 100_000);
    await dash.refresh();
    expect(dash.retrainDisabled()).toBe(false);
    const started = await dash.requestRetrain();
    expect(started).toBe(true);

    const settled = await dash.waitUntilIdle(60_000);
    expect(settled.cycles).toBeGreaterThanOrEqual(1);
    expect(settled.pf).not.toBeNull();
    expect(settled.r).not.toBeNull();
    expect(settled.gain).not.toBeNull();

    // dashboard values are verbatim copies of the service payload
    const raw = await api.metrics();
    if (!raw.ok) throw new Error("metrics fetch failed");
    expect(dash.metrics!.pf).toBe(raw.value.pf);
    expect(dash.metrics!.r).toBe(raw.value.r);
    expect(dash.metrics!.gain).toBe(raw.value.gain);
    expect(dash.metrics!.p0).toBe(raw.value.p0);
  }, 120_000);
});
