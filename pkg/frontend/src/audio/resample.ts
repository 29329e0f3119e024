/**
 * Linear-interpolation downsampler to 16 kHz.  Browsers commonly pin
 * capture to 44.1 or 48 kHz, so blocks are resampled before they enter the
 * rolling window.  Output length is floor(n * 16000 / sourceRate), i.e.
 * the rational factor 160/441 for 44.1 kHz input.
 */

export const TARGET_RATE = 16000;

export function downsampleTo16k(block: Float32Array, sourceRate: number): Float32Array {
  if (sourceRate < TARGET_RATE) {
    throw new Error(`capture rate ${sourceRate} Hz below the target ${TARGET_RATE} Hz`);
  }
  if (sourceRate === TARGET_RATE) {
    return block.slice();
  }
  const outLen = Math.floor((block.length * TARGET_RATE) / sourceRate);
  const out = new Float32Array(outLen);
  const ratio = sourceRate / TARGET_RATE;
  for (let i = 0; i < outLen; i++) {
    const pos = i * ratio;
    const lo = Math.floor(pos);
    const hi = Math.min(lo + 1, block.length - 1);
    const frac = pos - lo;
    out[i] = block[lo] * (1 - frac) + block[hi] * frac;
  }
  return out;
}
