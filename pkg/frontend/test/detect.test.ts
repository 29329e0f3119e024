import { describe, expect, it } from "vitest";

import { Detector } from "../src/ui/detect.js";

const LABELS = ["yes", "no", "unknown", "silence"];

function posteriors(values: Record<string, number>): number[] {
  return LABELS.map((l) => values[l] ?? 0);
}

describe("Detector", () => {
  it("fires when a keyword posterior reaches the threshold", () => {
    const d = new Detector({ threshold: 0.7, debounceMs: 750, background: ["unknown", "silence"] });
    const hit = d.update(posteriors({ yes: 0.9, no: 0.1 }), LABELS, 0);
    expect(hit?.label).toBe("yes");
    expect(hit?.posterior).toBeCloseTo(0.9);
  });

  it("stays quiet below the threshold", () => {
    const d = new Detector({ threshold: 0.7, debounceMs: 750, background: ["unknown", "silence"] });
    expect(d.update(posteriors({ yes: 0.6, no: 0.6 }), LABELS, 0)).toBeNull();
  });

  it("ignores the background classes entirely", () => {
    const d = new Detector({ threshold: 0.7, debounceMs: 750, background: ["unknown", "silence"] });
    expect(d.update(posteriors({ silence: 0.99 }), LABELS, 0)).toBeNull();
    expect(d.update(posteriors({ unknown: 0.95 }), LABELS, 100)).toBeNull();
  });

  it("debounces a double trigger 250 ms apart to one event", () => {
    const d = new Detector({ threshold: 0.7, debounceMs: 750, background: ["unknown", "silence"] });
    const first = d.update(posteriors({ yes: 0.95 }), LABELS, 1000);
    const second = d.update(posteriors({ yes: 0.95 }), LABELS, 1250);
    expect(first).not.toBeNull();
    expect(second).toBeNull();
  });

  it("fires again once the debounce interval has passed", () => {
    const d = new Detector({ threshold: 0.7, debounceMs: 750, background: ["unknown", "silence"] });
    expect(d.update(posteriors({ yes: 0.9 }), LABELS, 0)).not.toBeNull();
    expect(d.update(posteriors({ no: 0.9 }), LABELS, 751)).not.toBeNull();
  });

  it("rejects thresholds outside (0, 1)", () => {
    expect(() => new Detector({ threshold: 1.2, debounceMs: 1, background: [] })).toThrow();
  });
});
