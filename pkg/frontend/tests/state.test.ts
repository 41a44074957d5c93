import { describe, expect, it } from "vitest";

import { recomputeTravel, UiGridState } from "../src/state.js";
import type { GridSpecJson } from "../src/types.js";
import { annotationSchema } from "./schema.js";

function staticSpec(n = 8, cell = 32): GridSpecJson {
  const blocks = [];
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      blocks.push({
        id: `cell-${i}-${j}`,
        x: j * cell,
        y: i * cell,
        w: cell,
        h: cell,
        region: "background" as const,
      });
    }
  }
  return { stimulus_id: "stim-1", mode: "static", static_n: n, blocks };
}

function makeClock(): { now: () => number; tick: (ms: number) => void } {
  let t = 0;
  return { now: () => t, tick: (ms) => (t += ms) };
}

describe("UiGridState", () => {
  it("toggling twice restores the selection but keeps both events", () => {
    const clock = makeClock();
    const state = new UiGridState(staticSpec(), "p1", clock.now);
    state.toggleBlock("cell-0-0", 5, 5);
    clock.tick(10);
    state.toggleBlock("cell-0-0", 5, 5);
    expect(state.selectedIds.size).toBe(0);
    expect(state.eventCount).toBe(2);
  });

  it("single toggle selects one block", () => {
    const state = new UiGridState(staticSpec(), "p1", makeClock().now);
    expect(state.toggleBlock("cell-3-4", 150, 100)).toBe(true);
    expect([...state.selectedIds]).toEqual(["cell-3-4"]);
  });

  it("unknown ids are ignored without failing", () => {
    const state = new UiGridState(staticSpec(), "p1", makeClock().now);
    expect(state.toggleBlock("stale-id")).toBe(false);
    expect(state.selectedIds.size).toBe(0);
    expect(state.eventCount).toBe(0);
  });

  it("random toggle scripts leave the symmetric difference selected", () => {
    const spec = staticSpec();
    const ids = spec.blocks.map((b) => b.id);
    let seed = 12345;
    const rand = () => ((seed = (seed * 1103515245 + 12345) & 0x7fffffff) / 0x80000000);
    for (let trial = 0; trial < 50; trial++) {
      const clock = makeClock();
      const state = new UiGridState(spec, "p1", clock.now);
      const counts = new Map<string, number>();
      const nToggles = 1 + Math.floor(rand() * 40);
      for (let k = 0; k < nToggles; k++) {
        const id = ids[Math.floor(rand() * ids.length)];
        state.toggleBlock(id, 0, 0);
        counts.set(id, (counts.get(id) ?? 0) + 1);
        clock.tick(Math.floor(rand() * 20));
      }
      const expected = [...counts.entries()].filter(([, c]) => c % 2 === 1).map(([i]) => i);
      expect([...state.selectedIds].sort()).toEqual(expected.sort());
      expect(state.eventCount).toBe(nToggles);
    }
  });

  it("hover only accepts known ids", () => {
    const state = new UiGridState(staticSpec(), "p1", makeClock().now);
    state.setHover("cell-0-1");
    expect(state.hover).toBe("cell-0-1");
    state.setHover("nope");
    expect(state.hover).toBeNull();
  });

  it("clearAll empties the selection and records toggle_off events", () => {
    const state = new UiGridState(staticSpec(), "p1", makeClock().now);
    state.toggleBlock("cell-0-0");
    state.toggleBlock("cell-1-1");
    state.clearAll();
    expect(state.selectedIds.size).toBe(0);
    const ann = state.toAnnotation();
    expect(ann.events.filter((e) => e.kind === "toggle_off")).toHaveLength(2);
  });

  it("blockAt maps pixels to blocks with right-exclusive bounds", () => {
    const state = new UiGridState(staticSpec(), "p1", makeClock().now);
    expect(state.blockAt(0, 0)).toBe("cell-0-0");
    expect(state.blockAt(31.9, 31.9)).toBe("cell-0-0");
    expect(state.blockAt(32, 32)).toBe("cell-1-1");
    expect(state.blockAt(9999, 0)).toBeNull();
  });

  it("summary travel matches recomputation from events exactly", () => {
    const clock = makeClock();
    const state = new UiGridState(staticSpec(), "p1", clock.now);
    let seed = 777;
    const rand = () => ((seed = (seed * 1103515245 + 12345) & 0x7fffffff) / 0x80000000);
    for (let k = 0; k < 2000; k++) {
      state.recordMove(Math.floor(rand() * 256), Math.floor(rand() * 256));
      clock.tick(5);
    }
    const ann = state.toAnnotation();
    // 1 px tolerance per 1000 events
    expect(Math.abs(recomputeTravel(ann.events) - ann.mouse_travel_px)).toBeLessThan(
      ann.events.length / 1000,
    );
  });

  it("timestamps are monotone even with a jittery clock", () => {
    let calls = 0;
    const jittery = () => {
      calls += 1;
      return 100 + (calls % 3 === 0 ? -5 : calls); // occasionally goes backwards
    };
    const state = new UiGridState(staticSpec(), "p1", jittery);
    for (let k = 0; k < 30; k++) state.toggleBlock("cell-0-0", 1, 1);
    const ts = state.toAnnotation().events.map((e) => e.t_ms);
    for (let k = 1; k < ts.length; k++) expect(ts[k]).toBeGreaterThanOrEqual(ts[k - 1]);
  });
});

describe("annotation schema conformance (acceptance)", () => {
  it("200 random interaction scripts serialize to schema-valid annotations", () => {
    const spec = staticSpec();
    const ids = spec.blocks.map((b) => b.id);
    const specIds = new Set(ids);
    let seed = 424242;
    const rand = () => ((seed = (seed * 1103515245 + 12345) & 0x7fffffff) / 0x80000000);

    let failures = 0;
    for (let script = 0; script < 200; script++) {
      const clock = makeClock();
      const state = new UiGridState(spec, `p-${script}`, clock.now);
      const nActions = Math.floor(rand() * 60);
      for (let a = 0; a < nActions; a++) {
        const r = rand();
        const x = Math.floor(rand() * 256);
        const y = Math.floor(rand() * 256);
        if (r < 0.45) {
          state.toggleBlock(ids[Math.floor(rand() * ids.length)], x, y);
        } else if (r < 0.5) {
          state.toggleBlock(`stale-${a}`, x, y); // must be ignored
        } else if (r < 0.85) {
          state.recordMove(x, y);
        } else if (r < 0.95) {
          state.recordClick(x, y);
        } else {
          state.clearAll();
        }
        clock.tick(Math.floor(rand() * 30));
      }
      const ann = state.toAnnotation();
      const parsed = annotationSchema.safeParse(ann);
      const subset = ann.selected_block_ids.every((id) => specIds.has(id));
      const monotone = ann.events.every(
        (e, k) => k === 0 || e.t_ms >= ann.events[k - 1].t_ms,
      );
      if (!parsed.success || !subset || !monotone) failures += 1;
    }
    expect(failures).toBe(0);
  });
});
