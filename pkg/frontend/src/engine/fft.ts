/** Iterative radix-2 complex FFT, sized for the 512-point analysis frames. */

export class Fft {
  private readonly n: number;
  private readonly rev: Uint32Array;
  private readonly cos: Float64Array;
  private readonly sin: Float64Array;

  constructor(n: number) {
    if ((n & (n - 1)) !== 0 || n < 2) {
      throw new Error(`FFT size must be a power of two, got ${n}`);
    }
    this.n = n;
    this.rev = new Uint32Array(n);
    const bits = Math.log2(n);
    for (let i = 0; i < n; i++) {
      let r = 0;
      for (let b = 0; b < bits; b++) {
        r = (r << 1) | ((i >> b) & 1);
      }
      this.rev[i] = r;
    }
    this.cos = new Float64Array(n / 2);
    this.sin = new Float64Array(n / 2);
    for (let i = 0; i < n / 2; i++) {
      this.cos[i] = Math.cos((-2 * Math.PI * i) / n);
      this.sin[i] = Math.sin((-2 * Math.PI * i) / n);
    }
  }

  /** Power spectrum |FFT|^2 of a real frame: n/2 + 1 bins. */
  powerSpectrum(frame: Float64Array, out?: Float64Array): Float64Array {
    const n = this.n;
    if (frame.length !== n) {
      throw new Error(`expected a frame of ${n} samples, got ${frame.length}`);
    }
    const re = new Float64Array(n);
    const im = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      re[this.rev[i]] = frame[i];
    }
    for (let size = 2; size <= n; size <<= 1) {
      const half = size >> 1;
      const step = n / size;
      for (let start = 0; start < n; start += size) {
        for (let k = 0; k < half; k++) {
          const tw = k * step;
          const i = start + k;
          const j = i + half;
          const tre = re[j] * this.cos[tw] - im[j] * this.sin[tw];
          const tim = re[j] * this.sin[tw] + im[j] * this.cos[tw];
          re[j] = re[i] - tre;
          im[j] = im[i] - tim;
          re[i] += tre;
          im[i] += tim;
        }
      }
    }
    const bins = n / 2 + 1;
    const power = out ?? new Float64Array(bins);
    for (let i = 0; i < bins; i++) {
      power[i] = re[i] * re[i] + im[i] * im[i];
    }
    return power;
  }
}
