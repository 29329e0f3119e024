/**
 * Fixed-size ring buffer over the most recent second of 16 kHz audio.
 * The capture callback writes, the inference loop reads copies; snapshots
 * are zero-filled until the first full second has arrived.
 */

export class RollingWindow {
  private readonly buf: Float32Array;
  private pos = 0;

  constructor(readonly size = 16000) {
    this.buf = new Float32Array(size);
  }

  push(block: Float32Array): void {
    for (let i = 0; i < block.length; i++) {
      this.buf[this.pos] = block[i];
      this.pos = (this.pos + 1) % this.size;
    }
  }

  /** Ordered copy: oldest sample first, always exactly `size` samples. */
  snapshot(): Float32Array {
    const out = new Float32Array(this.size);
    out.set(this.buf.subarray(this.pos));
    out.set(this.buf.subarray(0, this.pos), this.size - this.pos);
    return out;
  }
}
