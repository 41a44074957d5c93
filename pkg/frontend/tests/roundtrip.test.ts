// Scripted end-to-end session against a real annotation service process
// (acceptance: the server-side annotation contains exactly the selected ids,
// and the recomputed mouse travel matches the UI summary).
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, RetryQueue } from "../src/api.js";
import { recomputeTravel, UiGridState } from "../src/state.js";
import type { AnnotationJson, GridSpecJson } from "../src/types.js";
import { annotationSchema } from "./schema.js";

let proc: ChildProcess | null = null;
let base = "";
let api: ApiClient;
let stimulusId = "";

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const addr = srv.address();
      if (addr && typeof addr === "object") {
        const port = addr.port;
        srv.close(() => resolve(port));
      } else {
        reject(new Error("no address"));
      }
    });
  });
}

async function waitHealthy(url: string, timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const r = await fetch(url + "/api/stimuli");
      if (r.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error("service did not become healthy");
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "gridlab-ui-"));
  const pngPath = join(dataDir, "stim.png");
  const render = spawnSync("python3", [
    "-c",
    `from gridlab.fixtures import blank; from gridlab.raster import save_png; save_png(blank(128, 128), ${JSON.stringify(pngPath)})`,
  ]);
  expect(render.status).toBe(0);

  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  proc = spawn("python3", ["-m", "gridlab.service", "--data-dir", join(dataDir, "data"), "--port", String(port)], {
    stdio: "ignore",
  });
  await waitHealthy(base);

  api = new ApiClient(base);
  const create = await fetch(base + "/api/stimuli", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({
      image_png_base64: readFileSync(pngPath).toString("base64"),
      task_prompt: "mark the important patches",
      question: "which patch is largest?",
      budget_ms: 300,
    }),
  });
  expect(create.ok).toBe(true);
  stimulusId = (await create.json()).id;
}, 40000);

afterAll(() => {
  proc?.kill("SIGKILL");
});

describe("scripted annotator session against the live service", () => {
  it("submits exactly the selected blocks and consistent telemetry", async () => {
    const session = await api.createSession("ui-tester", "static");
    expect(session.assigned_mode).toBe("static");

    const next = await api.nextStimulus(session.session_id);
    expect(next.next_stimulus_id).toBe(stimulusId);

    const spec: GridSpecJson = await api.getGrid(stimulusId, "static");
    expect(spec.blocks).toHaveLength(64);

    const state = new UiGridState(spec, "ui-tester");
    // scripted interaction: wander the pointer and toggle k blocks (one
    // toggled twice to exercise deselect-on-click)
    const picks = ["cell-0-0", "cell-2-5", "cell-4-4", "cell-7-1", "cell-6-6"];
    for (const [k, id] of picks.entries()) {
      const block = spec.blocks.find((b) => b.id === id)!;
      for (let step = 0; step < 8; step++) {
        state.recordMove(block.x + step, block.y + (step % 3));
      }
      state.toggleBlock(id, block.x + 4, block.y + 4);
      if (k === 1) {
        state.toggleBlock(id, block.x + 4, block.y + 4); // deselect again
        state.toggleBlock(id, block.x + 4, block.y + 4); // and re-select
      }
    }
    state.toggleBlock("cell-7-1"); // drop one pick entirely
    const expected = ["cell-0-0", "cell-2-5", "cell-4-4", "cell-6-6"];
    expect([...state.selectedIds].sort()).toEqual(expected);

    const payload: AnnotationJson = state.toAnnotation();
    expect(annotationSchema.safeParse(payload).success).toBe(true);

    const queue = new RetryQueue(api);
    const receipt = await queue.submit(payload, session.session_id);
    expect(receipt.resubmitted).toBe(false);

    // server-side record contains exactly those k ids
    const listing = await fetch(
      `${base}/api/stimuli/${stimulusId}/annotations?mode=static`,
    ).then((r) => r.json());
    expect(listing.count).toBe(1);
    const stored = listing.annotations[0];
    expect(stored.participant_id).toBe("ui-tester");
    expect([...stored.selected_block_ids].sort()).toEqual(expected);

    // recomputed travel distance agrees with the submitted summary
    const recomputed = recomputeTravel(stored.events);
    const tolerance = Math.max(stored.events.length / 1000, 1e-6);
    expect(Math.abs(recomputed - stored.mouse_travel_px)).toBeLessThan(tolerance);

    // the session advanced past the single stimulus
    const done = await api.nextStimulus(session.session_id);
    expect(done.completed).toBe(true);

    // importance now reflects the single annotation
    const imp = await fetch(
      `${base}/api/stimuli/${stimulusId}/importance?mode=static`,
    ).then((r) => r.json());
    expect(imp.width).toBe(128);
  }, 30000);

  it("server rejects stale block ids with a listed offender", async () => {
    const spec: GridSpecJson = await api.getGrid(stimulusId, "static");
    const payload = {
      participant_id: "ui-tester-2",
      stimulus_id: spec.stimulus_id,
      grid_mode: spec.mode,
      selected_block_ids: ["cell-0-0", "phantom-1"],
      duration_ms: 10,
      click_count: 2,
      mouse_travel_px: 0,
      events: [],
    };
    const r = await fetch(base + "/api/annotations", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    expect(r.status).toBe(400);
    const body = await r.json();
    expect(body.message).toContain("phantom-1");
  });
});
