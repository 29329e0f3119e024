"""Shared fixtures and independent straight-line oracles.

The oracles here intentionally avoid the package's kernel and graph code:
they are naive loop re-implementations used to pin expected values.
"""

import numpy as np
import pytest

from kwslim.graph import ModelSpec, init_model


def naive_conv2d(x, w):
    """Reference 3x3 / stride 1 / pad 1 convolution, plain loops."""
    n_, ci, h_, w_ = x.shape
    co = w.shape[0]
    y = np.zeros((n_, co, h_, w_), dtype=np.float64)
    for n in range(n_):
        for o in range(co):
            for h in range(h_):
                for i in range(w_):
                    acc = 0.0
                    for c in range(ci):
                        for kh in range(3):
                            for kw in range(3):
                                hh, ww = h + kh - 1, i + kw - 1
                                if 0 <= hh < h_ and 0 <= ww < w_:
                                    acc += float(x[n, c, hh, ww]) * float(w[o, c, kh, kw])
                    y[n, o, h, i] = acc
    return y


def naive_forward(m, feat):
    """Straight-line re-implementation of the full inference pipeline."""
    x = naive_conv2d(np.asarray(feat, dtype=np.float64)[None, None], m.conv0)
    x = np.maximum(x, 0.0)
    n, c, h, w = x.shape
    oh, ow = h // 4, w // 3
    pooled = np.zeros((n, c, oh, ow))
    for i in range(oh):
        for j in range(ow):
            pooled[:, :, i, j] = x[:, :, 4 * i : 4 * i + 4, 3 * j : 3 * j + 3].mean(axis=(2, 3))
    x = pooled

    def bn(t, p):
        out = np.empty_like(t)
        for ch in range(t.shape[1]):
            g = 1.0 if p.gamma is None else float(p.gamma[ch])
            out[:, ch] = g * (t[:, ch] - float(p.mean[ch])) / np.sqrt(float(p.var[ch]) + p.eps)
        return out

    for blk in m.blocks:
        inner = np.maximum(bn(naive_conv2d(x, blk.conv1), blk.bn1), 0.0)
        x = np.maximum(x + bn(naive_conv2d(inner, blk.conv2), blk.bn2), 0.0)
    vec = x.mean(axis=(2, 3))[0]
    logits = m.fc_w.astype(np.float64) @ vec + m.fc_b.astype(np.float64)
    e = np.exp(logits - logits.max())
    return e / e.sum(), logits


def tiny_spec(base=2, inner=(2, 2, 2), n_labels=3, slim_ready=False):
    return ModelSpec(arch="tiny", base_channels=base, inner_widths=inner,
                     n_labels=n_labels, slim_ready=slim_ready)


@pytest.fixture
def tiny_model():
    spec = tiny_spec()
    return init_model(spec, seed=11, dtype=np.float64,
                      labels=tuple(f"c{i}" for i in range(spec.n_labels)))
