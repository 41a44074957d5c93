import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, RetryQueue } from "../src/api.js";
import type { AnnotationJson } from "../src/types.js";

const ann: AnnotationJson = {
  participant_id: "p1",
  stimulus_id: "s1",
  grid_mode: "static",
  selected_block_ids: ["cell-0-0"],
  duration_ms: 10,
  click_count: 1,
  mouse_travel_px: 0,
  events: [],
};

function clientWith(submit: (a: AnnotationJson, s?: string) => Promise<unknown>): ApiClient {
  const client = new ApiClient("");
  client.submitAnnotation = submit as ApiClient["submitAnnotation"];
  return client;
}

describe("RetryQueue", () => {
  it("delivers queued submissions after the network comes back", async () => {
    vi.useFakeTimers();
    let online = false;
    let deliveries = 0;
    const client = clientWith(async () => {
      if (!online) throw new TypeError("fetch failed"); // network drop
      deliveries += 1;
      return { annotation_id: `a${deliveries}`, resubmitted: deliveries > 1 };
    });
    const queue = new RetryQueue(client, 100);

    const first = queue.submit(ann);
    const second = queue.submit(ann);
    await vi.advanceTimersByTimeAsync(250); // a few failed attempts
    expect(queue.pending).toBe(2);

    online = true; // reconnect: backoff timer flushes the queue in order
    await vi.advanceTimersByTimeAsync(2000);
    const [r1, r2] = await Promise.all([first, second]);
    expect(queue.pending).toBe(0);
    expect(deliveries).toBe(2);
    expect(r1.resubmitted).toBe(false);
    expect(r2.resubmitted).toBe(true); // server replace semantics: exactly-once
    vi.useRealTimers();
  });

  it("does not retry validation failures", async () => {
    let calls = 0;
    const client = clientWith(async () => {
      calls += 1;
      throw new ApiError(400, "unknown block id");
    });
    const queue = new RetryQueue(client, 10);
    await expect(queue.submit(ann)).rejects.toThrow("unknown block id");
    expect(calls).toBe(1);
    expect(queue.pending).toBe(0);
  });

  it("applies exponential backoff between retry rounds", async () => {
    vi.useFakeTimers();
    let attempts = 0;
    const client = clientWith(async () => {
      attempts += 1;
      throw new TypeError("fetch failed");
    });
    const queue = new RetryQueue(client, 100, 10_000);
    void queue.submit(ann).catch(() => undefined);
    await vi.advanceTimersByTimeAsync(0);
    expect(attempts).toBe(1);
    await vi.advanceTimersByTimeAsync(100); // 1st backoff
    expect(attempts).toBe(2);
    await vi.advanceTimersByTimeAsync(199); // 2nd backoff is 200ms
    expect(attempts).toBe(2);
    await vi.advanceTimersByTimeAsync(1);
    expect(attempts).toBe(3);
    vi.useRealTimers();
  });
});
