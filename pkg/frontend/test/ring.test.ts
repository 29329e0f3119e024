import { describe, expect, it } from "vitest";

import { RollingWindow } from "../src/audio/ring.js";

describe("RollingWindow", () => {
  it("is zero-filled before any audio arrives", () => {
    const ring = new RollingWindow(8);
    expect(Array.from(ring.snapshot())).toEqual([0, 0, 0, 0, 0, 0, 0, 0]);
  });

  it("keeps the most recent samples in order", () => {
    const ring = new RollingWindow(4);
    ring.push(Float32Array.from([1, 2]));
    ring.push(Float32Array.from([3, 4, 5]));
    expect(Array.from(ring.snapshot())).toEqual([2, 3, 4, 5]);
  });

  it("always returns exactly its size", () => {
    const ring = new RollingWindow(16000);
    ring.push(new Float32Array(12345).fill(0.25));
    const snap = ring.snapshot();
    expect(snap.length).toBe(16000);
    expect(snap[0]).toBe(0); // still zero-padded at the head
    expect(snap[15999]).toBeCloseTo(0.25, 6);
  });

  it("snapshots are copies, not views", () => {
    const ring = new RollingWindow(3);
    ring.push(Float32Array.from([1, 2, 3]));
    const snap = ring.snapshot();
    ring.push(Float32Array.from([9]));
    expect(Array.from(snap)).toEqual([1, 2, 3]);
  });
});
