/**
 * Threshold + debounce detection policy over posterior snapshots.
 * An event fires when a non-background class reaches the threshold;
 * further events are suppressed for the debounce interval.
 */

export interface DetectorConfig {
  threshold: number;
  debounceMs: number;
  background: string[];
}

export const DEFAULT_DETECTOR: DetectorConfig = {
  threshold: 0.7,
  debounceMs: 750,
  background: ["unknown", "silence"],
};

export interface Detection {
  label: string;
  posterior: number;
  atMs: number;
}

export class Detector {
  private lastEventMs = Number.NEGATIVE_INFINITY;

  constructor(readonly cfg: DetectorConfig = DEFAULT_DETECTOR) {
    if (cfg.threshold <= 0 || cfg.threshold >= 1) {
      throw new Error(`detection threshold must lie in (0, 1), got ${cfg.threshold}`);
    }
  }

  update(posteriors: number[], labels: string[], nowMs: number): Detection | null {
    let best = -1;
    let bestP = 0;
    for (let i = 0; i < posteriors.length; i++) {
      if (this.cfg.background.includes(labels[i])) continue;
      if (posteriors[i] > bestP) {
        bestP = posteriors[i];
        best = i;
      }
    }
    if (best < 0 || bestP < this.cfg.threshold) {
      return null;
    }
    if (nowMs - this.lastEventMs < this.cfg.debounceMs) {
      return null;
    }
    this.lastEventMs = nowMs;
    return { label: labels[best], posterior: bestP, atMs: nowMs };
  }
}
