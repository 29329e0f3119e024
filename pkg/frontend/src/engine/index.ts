/**
 * Engine boundary: load_model(bytes) -> handle,
 * infer_pcm(handle, float-array[16000]) -> posteriors + per-stage timings.
 * The browser layer only captures, resamples, and renders; every piece of
 * DSP and inference lives behind this boundary.
 */

import { forward } from "./forward.js";
import { parseKwsm, type KwsmModel } from "./kwsm.js";
import { MfccExtractor } from "./mfcc.js";

export interface InferOutput {
  posteriors: number[];
  featurize_ms: number;
  forward_ms: number;
}

interface Loaded {
  model: KwsmModel;
  extractor: MfccExtractor;
}

const loaded = new Map<number, Loaded>();
let nextHandle = 1;

export function load_model(bytes: ArrayBuffer | Uint8Array): number {
  const model = parseKwsm(bytes);
  const handle = nextHandle++;
  loaded.set(handle, { model, extractor: new MfccExtractor(model.mfcc) });
  return handle;
}

export function unload_model(handle: number): void {
  loaded.delete(handle);
}

export function model_labels(handle: number): string[] {
  return get(handle).model.labels.slice();
}

export function infer_pcm(handle: number, pcm: Float32Array | Float64Array): InferOutput {
  const { model, extractor } = get(handle);
  const t0 = performance.now();
  const feat = extractor.compute(pcm);
  const t1 = performance.now();
  const { posteriors } = forward(model, feat);
  const t2 = performance.now();
  return { posteriors, featurize_ms: t1 - t0, forward_ms: t2 - t1 };
}

function get(handle: number): Loaded {
  const entry = loaded.get(handle);
  if (!entry) {
    throw new Error(`unknown model handle ${handle}`);
  }
  return entry;
}
