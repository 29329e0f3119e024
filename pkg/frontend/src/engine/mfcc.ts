/**
 * MFCC front-end mirroring the engine's reference pipeline: reflect pad by
 * fft_size/2, Hann windows every hop, power FFT, Slaney-scale triangular
 * mel filters, floored natural log, orthonormal DCT-II.
 */

import { Fft } from "./fft.js";
import type { MfccParams } from "./kwsm.js";

const MEL_BREAK_HZ = 1000.0;
const MEL_BREAK = 15.0;
const MEL_LOGSTEP = Math.log(6.4) / 27.0;

export function hzToMel(f: number): number {
  if (f < 0) throw new Error("frequency must be >= 0");
  return f < MEL_BREAK_HZ ? (3 * f) / 200 : MEL_BREAK + Math.log(f / MEL_BREAK_HZ) / MEL_LOGSTEP;
}

export function melToHz(m: number): number {
  if (m < 0) throw new Error("mel value must be >= 0");
  return m < MEL_BREAK ? (200 * m) / 3 : MEL_BREAK_HZ * Math.exp(MEL_LOGSTEP * (m - MEL_BREAK));
}

export function melFilterbank(cfg: MfccParams): Float64Array[] {
  const bins = cfg.fft_size / 2 + 1;
  const binHz = new Float64Array(bins);
  for (let i = 0; i < bins; i++) {
    binHz[i] = (i * cfg.sample_rate) / cfg.fft_size;
  }
  const lo = hzToMel(cfg.fmin);
  const hi = hzToMel(cfg.fmax);
  const pts = new Float64Array(cfg.n_mels + 2);
  for (let i = 0; i < pts.length; i++) {
    pts[i] = melToHz(lo + ((hi - lo) * i) / (cfg.n_mels + 1));
  }
  const rows: Float64Array[] = [];
  for (let m = 0; m < cfg.n_mels; m++) {
    const [a, c, b] = [pts[m], pts[m + 1], pts[m + 2]];
    const row = new Float64Array(bins);
    const norm = 2 / (b - a);
    for (let i = 0; i < bins; i++) {
      const up = (binHz[i] - a) / (c - a);
      const down = (b - binHz[i]) / (b - c);
      row[i] = Math.max(0, Math.min(up, down)) * norm;
    }
    rows.push(row);
  }
  return rows;
}

function hannWindow(cfg: MfccParams): Float64Array {
  const win = new Float64Array(cfg.fft_size);
  const pad = (cfg.fft_size - cfg.win_length) >> 1;
  for (let i = 0; i < cfg.win_length; i++) {
    win[pad + i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / cfg.win_length);
  }
  return win;
}

function dctMatrix(n: number): Float64Array {
  // row k, column i: orthonormal DCT-II
  const mat = new Float64Array(n * n);
  for (let k = 0; k < n; k++) {
    const scale = Math.sqrt(2 / n) * (k === 0 ? Math.SQRT1_2 : 1);
    for (let i = 0; i < n; i++) {
      mat[k * n + i] = scale * Math.cos((Math.PI * (2 * i + 1) * k) / (2 * n));
    }
  }
  return mat;
}

export interface FeatureMatrix {
  frames: number;
  coeffs: number;
  data: Float64Array; // row-major, frames x coeffs
}

export class MfccExtractor {
  readonly cfg: MfccParams;
  private readonly fft: Fft;
  private readonly window: Float64Array;
  private readonly filters: Float64Array[];
  private readonly dct: Float64Array;

  constructor(cfg: MfccParams) {
    this.cfg = cfg;
    this.fft = new Fft(cfg.fft_size);
    this.window = hannWindow(cfg);
    this.filters = melFilterbank(cfg);
    this.dct = dctMatrix(cfg.n_mels);
  }

  /** pcm must hold exactly one second at the configured rate. */
  compute(pcm: Float32Array | Float64Array): FeatureMatrix {
    const cfg = this.cfg;
    const n = cfg.sample_rate;
    if (pcm.length !== n) {
      throw new Error(`expected ${n} samples, got ${pcm.length}`);
    }
    const half = cfg.fft_size >> 1;
    const padded = new Float64Array(n + 2 * half);
    for (let i = 0; i < half; i++) {
      padded[i] = pcm[half - i];
    }
    for (let i = 0; i < n; i++) {
      padded[half + i] = pcm[i];
    }
    for (let i = 0; i < half; i++) {
      padded[half + n + i] = pcm[n - 2 - i];
    }

    const frames = 1 + Math.floor(n / cfg.hop);
    const out = new Float64Array(frames * cfg.n_mfcc);
    const frame = new Float64Array(cfg.fft_size);
    const power = new Float64Array(cfg.fft_size / 2 + 1);
    const logmel = new Float64Array(cfg.n_mels);
    for (let t = 0; t < frames; t++) {
      const start = t * cfg.hop;
      for (let i = 0; i < cfg.fft_size; i++) {
        frame[i] = padded[start + i] * this.window[i];
      }
      this.fft.powerSpectrum(frame, power);
      for (let m = 0; m < cfg.n_mels; m++) {
        const row = this.filters[m];
        let acc = 0;
        for (let i = 0; i < power.length; i++) {
          acc += row[i] * power[i];
        }
        logmel[m] = Math.log(Math.max(acc, cfg.log_floor));
      }
      for (let k = 0; k < cfg.n_mfcc; k++) {
        let acc = 0;
        for (let m = 0; m < cfg.n_mels; m++) {
          acc += this.dct[k * cfg.n_mels + m] * logmel[m];
        }
        out[t * cfg.n_mfcc + k] = acc;
      }
    }
    return { frames, coeffs: cfg.n_mfcc, data: out };
  }
}
