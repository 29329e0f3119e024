"""res8-family residual models: layers, forward pass, and cost accounting.

Tensors are plain numpy arrays.  A block computes
ReLU(x + BN2(Conv2(ReLU(BN1(Conv1(x)))))) with bias-free 3x3 convolutions
and scale-only batch norm; slim-ready models carry a gamma vector on BN1
(the prunable bottleneck), base models carry no affine terms at all.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ContractError
from .features import MfccConfig

N_BLOCKS = 3
POOL_KERNEL = (4, 3)
INPUT_SHAPE = (101, 40)

CANONICAL_LABELS = (
    "yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go",
    "unknown", "silence",
)

ARCH_BASE_CHANNELS = {"res8": 45, "res8-narrow": 19}


@dataclass(frozen=True)
class ModelSpec:
    arch: str
    base_channels: int
    inner_widths: tuple
    n_labels: int = 12
    slim_ready: bool = False

    def __post_init__(self):
        object.__setattr__(self, "inner_widths", tuple(int(k) for k in self.inner_widths))
        if self.base_channels < 1:
            raise ContractError(f"base_channels must be >= 1, got {self.base_channels}")
        if len(self.inner_widths) != N_BLOCKS:
            raise ContractError(f"expected {N_BLOCKS} inner widths, got {self.inner_widths}")
        if any(k < 1 or k > self.base_channels for k in self.inner_widths):
            raise ContractError(
                f"inner widths {self.inner_widths} must lie in [1, {self.base_channels}]"
            )
        if self.n_labels < 2:
            raise ContractError(f"n_labels must be >= 2, got {self.n_labels}")

    @classmethod
    def named(cls, arch, n_labels=12, slim_ready=False):
        if arch not in ARCH_BASE_CHANNELS:
            raise ContractError(f"unknown architecture {arch!r}; choose from {sorted(ARCH_BASE_CHANNELS)}")
        c = ARCH_BASE_CHANNELS[arch]
        return cls(arch=arch, base_channels=c, inner_widths=(c,) * N_BLOCKS,
                   n_labels=n_labels, slim_ready=slim_ready)


@dataclass
class BatchNorm:
    mean: np.ndarray
    var: np.ndarray
    gamma: np.ndarray | None = None
    eps: float = 1e-5

    @property
    def channels(self):
        return len(self.mean)


@dataclass
class ResBlock:
    conv1: np.ndarray   # (k, C, 3, 3)
    bn1: BatchNorm      # k channels, carries gamma when slim-ready
    conv2: np.ndarray   # (C, k, 3, 3)
    bn2: BatchNorm      # C channels, never affine


@dataclass
class Model:
    spec: ModelSpec
    conv0: np.ndarray   # (C, 1, 3, 3)
    blocks: list[ResBlock]
    fc_w: np.ndarray    # (n_labels, C)
    fc_b: np.ndarray    # (n_labels,)
    labels: tuple = CANONICAL_LABELS
    mfcc: MfccConfig = field(default_factory=MfccConfig)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        if len(self.labels) != self.spec.n_labels:
            raise ContractError(
                f"{len(self.labels)} label names for a {self.spec.n_labels}-way model"
            )

    @property
    def dtype(self):
        return self.conv0.dtype

    def copy(self):
        return copy.deepcopy(self)


def default_labels(n):
    if n == len(CANONICAL_LABELS):
        return CANONICAL_LABELS
    return tuple(f"class{i:02d}" for i in range(n))


def init_model(spec, seed=0, dtype=np.float32, labels=None, mfcc=None):
    """He-initialized model; gamma vectors (all ones) only when slim-ready."""
    rng = np.random.default_rng(seed)
    c = spec.base_channels

    def he(shape, fan_in):
        return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)

    def bn(channels, with_gamma):
        return BatchNorm(
            mean=np.zeros(channels, dtype=dtype),
            var=np.ones(channels, dtype=dtype),
            gamma=np.ones(channels, dtype=dtype) if with_gamma else None,
        )

    blocks = []
    for k in spec.inner_widths:
        blocks.append(ResBlock(
            conv1=he((k, c, 3, 3), 9 * c),
            bn1=bn(k, spec.slim_ready),
            conv2=he((c, k, 3, 3), 9 * k),
            bn2=bn(c, False),
        ))
    return Model(
        spec=spec,
        conv0=he((c, 1, 3, 3), 9),
        blocks=blocks,
        fc_w=(rng.standard_normal((spec.n_labels, c)) * np.sqrt(1.0 / c)).astype(dtype),
        fc_b=np.zeros(spec.n_labels, dtype=dtype),
        labels=labels if labels is not None else default_labels(spec.n_labels),
        mfcc=mfcc if mfcc is not None else MfccConfig(),
    )


def _batched(x):
    x = np.asarray(x)
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ContractError(f"expected a (C, H, W) or (N, C, H, W) tensor, got shape {x.shape}")


def conv2d(x, w):
    """3x3 convolution, stride 1, zero padding 1, no bias."""
    xb, squeeze = _batched(x)
    y = kernels.conv2d_forward(xb, np.asarray(w))
    return y[0] if squeeze else y


def relu(x):
    return np.maximum(x, 0)


def batchnorm_infer(x, bn):
    """Per-channel gamma * (x - mean) / sqrt(var + eps); gamma treated as 1 when absent."""
    xb, squeeze = _batched(x)
    if xb.shape[1] != bn.channels:
        raise ContractError(f"input has {xb.shape[1]} channels, batch norm has {bn.channels}")
    scale = 1.0 / np.sqrt(bn.var + bn.eps)
    if bn.gamma is not None:
        scale = scale * bn.gamma
    y = (xb - bn.mean[:, None, None]) * scale[:, None, None]
    return y[0] if squeeze else y


def avg_pool(x, kernel=POOL_KERNEL):
    """Non-overlapping average pooling; trailing remainder rows/cols are dropped."""
    xb, squeeze = _batched(x)
    kh, kw = kernel
    n, c, h, w = xb.shape
    oh, ow = h // kh, w // kw
    if oh == 0 or ow == 0:
        raise ContractError(f"input {h}x{w} smaller than pooling kernel {kernel}")
    y = xb[:, :, : oh * kh, : ow * kw].reshape(n, c, oh, kh, ow, kw).mean(axis=(3, 5))
    return y[0] if squeeze else y


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward_batch(m, feats):
    """Inference-mode logits for a batch of feature matrices (N, 101, 40)."""
    feats = np.asarray(feats, dtype=m.dtype)
    if feats.ndim != 3:
        raise ContractError(f"expected (N, frames, coeffs) features, got shape {feats.shape}")
    x = avg_pool(relu(conv2d(feats[:, None, :, :], m.conv0)))
    for blk in m.blocks:
        inner = relu(batchnorm_infer(conv2d(x, blk.conv1), blk.bn1))
        x = relu(x + batchnorm_infer(conv2d(inner, blk.conv2), blk.bn2))
    pooled = x.mean(axis=(2, 3))
    return pooled @ m.fc_w.T + m.fc_b


def model_forward(m, feat):
    """Posterior probabilities and raw logits for one feature matrix."""
    feat = np.asarray(feat)
    if feat.ndim != 2:
        raise ContractError(f"expected a 2D feature matrix, got shape {feat.shape}")
    logits = forward_batch(m, feat[None])[0]
    return softmax(logits), logits


def count_params(m):
    """Trainable parameter count (conv weights, gammas when present, linear layer)."""
    spec = m.spec
    c, nl = spec.base_channels, spec.n_labels
    total = 9 * c + nl * c + nl
    for k in spec.inner_widths:
        total += 9 * k * (c + c)
        if spec.slim_ready:
            total += k
    return total


def count_multiplies(m, input_hw=INPUT_SHAPE):
    """Multiply count per forward pass.

    Convention: every conv output position costs taps x in-channels
    multiplies (padding positions included), the expansion conv runs at
    full input resolution, block convs at the pooled resolution, and the
    classifier costs n_labels x channels.  Batch norm and pooling are not
    counted.
    """
    spec = m.spec
    h, w = input_hw
    ph, pw = h // POOL_KERNEL[0], w // POOL_KERNEL[1]
    c = spec.base_channels
    total = h * w * 9 * c                      # expansion conv, 1 -> C at full resolution
    for k in spec.inner_widths:
        total += ph * pw * 9 * (c * k + k * c)  # conv1 C->k plus conv2 k->C
    total += spec.n_labels * c
    return total
