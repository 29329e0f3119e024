/**
 * Inference for the res8 model family: expansion conv, ReLU, 4x3 average
 * pooling, three residual blocks (conv-BN-ReLU-conv-BN-add-ReLU, bias-free,
 * scale-only batch norm), global average pooling, linear softmax layer.
 * All arithmetic runs in float64; weights widen exactly from float32.
 */

import type { KwsmModel, Tensor } from "./kwsm.js";
import type { FeatureMatrix } from "./mfcc.js";

interface Fmap {
  c: number;
  h: number;
  w: number;
  data: Float64Array;
}

function conv3x3(x: Fmap, weight: Tensor): Fmap {
  const [cout, cin] = weight.shape;
  if (cin !== x.c) {
    throw new Error(`conv expects ${cin} input channels, feature map has ${x.c}`);
  }
  const { h, w } = x;
  const out: Fmap = { c: cout, h, w, data: new Float64Array(cout * h * w) };
  const wd = weight.data;
  for (let co = 0; co < cout; co++) {
    for (let ci = 0; ci < cin; ci++) {
      const wbase = (co * cin + ci) * 9;
      const xbase = ci * h * w;
      const ybase = co * h * w;
      for (let kh = 0; kh < 3; kh++) {
        const h0 = Math.max(0, 1 - kh);
        const h1 = Math.min(h, h + 1 - kh);
        for (let kw = 0; kw < 3; kw++) {
          const wv = wd[wbase + kh * 3 + kw];
          if (wv === 0) continue;
          const w0 = Math.max(0, 1 - kw);
          const w1 = Math.min(w, w + 1 - kw);
          for (let i = h0; i < h1; i++) {
            const yrow = ybase + i * w;
            const xrow = xbase + (i + kh - 1) * w + (kw - 1);
            for (let j = w0; j < w1; j++) {
              out.data[yrow + j] += wv * x.data[xrow + j];
            }
          }
        }
      }
    }
  }
  return out;
}

function reluInPlace(x: Fmap): Fmap {
  for (let i = 0; i < x.data.length; i++) {
    if (x.data[i] < 0) x.data[i] = 0;
  }
  return x;
}

function avgPool(x: Fmap, kh: number, kw: number): Fmap {
  const oh = Math.floor(x.h / kh);
  const ow = Math.floor(x.w / kw);
  const out: Fmap = { c: x.c, h: oh, w: ow, data: new Float64Array(x.c * oh * ow) };
  for (let c = 0; c < x.c; c++) {
    for (let i = 0; i < oh; i++) {
      for (let j = 0; j < ow; j++) {
        let acc = 0;
        for (let di = 0; di < kh; di++) {
          for (let dj = 0; dj < kw; dj++) {
            acc += x.data[c * x.h * x.w + (i * kh + di) * x.w + (j * kw + dj)];
          }
        }
        out.data[(c * oh + i) * ow + j] = acc / (kh * kw);
      }
    }
  }
  return out;
}

function batchNorm(x: Fmap, mean: Tensor, variance: Tensor, gamma: Tensor | undefined, eps = 1e-5): Fmap {
  const hw = x.h * x.w;
  for (let c = 0; c < x.c; c++) {
    const g = gamma ? gamma.data[c] : 1.0;
    const scale = g / Math.sqrt(variance.data[c] + eps);
    const mu = mean.data[c];
    for (let i = 0; i < hw; i++) {
      const idx = c * hw + i;
      x.data[idx] = (x.data[idx] - mu) * scale;
    }
  }
  return x;
}

export function softmax(logits: number[]): number[] {
  const m = Math.max(...logits);
  const exps = logits.map((z) => Math.exp(z - m));
  const sum = exps.reduce((a, b) => a + b, 0);
  return exps.map((e) => e / sum);
}

export interface ForwardResult {
  posteriors: number[];
  logits: number[];
}

export function forward(model: KwsmModel, feat: FeatureMatrix): ForwardResult {
  const need = (name: string): Tensor => {
    const t = model.tensors.get(name);
    if (!t) throw new Error(`model is missing tensor ${name}`);
    return t;
  };

  let x: Fmap = { c: 1, h: feat.frames, w: feat.coeffs, data: feat.data };
  x = avgPool(reluInPlace(conv3x3(x, need("conv0"))), 4, 3);

  for (let b = 0; b < model.innerWidths.length; b++) {
    const inner = batchNorm(
      conv3x3(x, need(`block${b}.conv1`)),
      need(`block${b}.bn1.mean`),
      need(`block${b}.bn1.var`),
      model.tensors.get(`block${b}.bn1.gamma`),
    );
    const main = batchNorm(
      conv3x3(reluInPlace(inner), need(`block${b}.conv2`)),
      need(`block${b}.bn2.mean`),
      need(`block${b}.bn2.var`),
      undefined,
    );
    for (let i = 0; i < main.data.length; i++) {
      main.data[i] += x.data[i];
    }
    x = reluInPlace(main);
  }

  const hw = x.h * x.w;
  const pooled = new Float64Array(x.c);
  for (let c = 0; c < x.c; c++) {
    let acc = 0;
    for (let i = 0; i < hw; i++) {
      acc += x.data[c * hw + i];
    }
    pooled[c] = acc / hw;
  }

  const fcW = need("fc.weight");
  const fcB = need("fc.bias");
  const logits: number[] = [];
  for (let k = 0; k < model.nLabels; k++) {
    let acc = fcB.data[k];
    for (let c = 0; c < x.c; c++) {
      acc += fcW.data[k * x.c + c] * pooled[c];
    }
    logits.push(acc);
  }
  return { posteriors: softmax(logits), logits };
}
