/**
 * Parser for the .kwsm binary model format.
 *
 * Layout: magic "KWSM" | version u32 LE | metadata length u32 LE |
 * metadata JSON (space-padded to a 4-byte boundary) | payload of 32-bit
 * little-endian floats, row-major, in the order metadata declares.
 */

export interface MfccParams {
  sample_rate: number;
  win_length: number;
  hop: number;
  fft_size: number;
  n_mels: number;
  n_mfcc: number;
  fmin: number;
  fmax: number;
  log_floor: number;
}

export interface Tensor {
  shape: number[];
  data: Float32Array;
}

export interface KwsmModel {
  arch: string;
  baseChannels: number;
  innerWidths: number[];
  nLabels: number;
  slimReady: boolean;
  labels: string[];
  mfcc: MfccParams;
  tensors: Map<string, Tensor>;
}

const MAGIC = 0x4b57534d; // "KWSM" big-endian read

export function parseKwsm(bytes: ArrayBuffer | Uint8Array): KwsmModel {
  const buf = bytes instanceof Uint8Array ? bytes : new Uint8Array(bytes);
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  if (buf.byteLength < 12 || view.getUint32(0, false) !== MAGIC) {
    throw new Error("not a model file (bad magic)");
  }
  const version = view.getUint32(4, true);
  if (version !== 1) {
    throw new Error(`unsupported model file version ${version}`);
  }
  const metaLen = view.getUint32(8, true);
  if (buf.byteLength < 12 + metaLen) {
    throw new Error("model file metadata truncated");
  }
  const meta = JSON.parse(new TextDecoder().decode(buf.subarray(12, 12 + metaLen)));

  const declared: { name: string; shape: number[] }[] = meta.tensors;
  let expected = 0;
  for (const t of declared) {
    expected += 4 * t.shape.reduce((a, b) => a * b, 1);
  }
  const payloadStart = 12 + metaLen;
  const found = buf.byteLength - payloadStart;
  if (found !== expected) {
    throw new Error(`model payload length mismatch: expected ${expected} bytes, found ${found}`);
  }

  const tensors = new Map<string, Tensor>();
  let offset = payloadStart;
  for (const t of declared) {
    const count = t.shape.reduce((a, b) => a * b, 1);
    const data = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      data[i] = view.getFloat32(offset + 4 * i, true);
    }
    tensors.set(t.name, { shape: t.shape.slice(), data });
    offset += 4 * count;
  }

  return {
    arch: meta.arch,
    baseChannels: meta.base_channels,
    innerWidths: meta.inner_widths.slice(),
    nLabels: meta.n_labels,
    slimReady: meta.slim_ready,
    labels: meta.labels.slice(),
    mfcc: meta.mfcc,
    tensors,
  };
}
