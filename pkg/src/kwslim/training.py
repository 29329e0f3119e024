"""Reverse-mode gradients, SGD with momentum, and the training loop.

Training-mode batch norm normalizes by batch statistics (biased variance)
and updates running statistics with momentum 0.1; the backward pass
differentiates through those batch statistics.  The optional L1 penalty on
the prunable gamma vectors is applied as a subgradient added to the data
gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .audio import AugmentConfig, augment, fit_length, read_wav
from .errors import ContractError
from .features import compute_mfcc
from .graph import POOL_KERNEL, Model, avg_pool, forward_batch, init_model, relu
from .slimming import collect_gammas

LR_DROP_FACTOR = 0.1


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.1
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 30
    lambda_l1: float = 0.0
    bn_momentum: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ContractError(f"learning rate must be > 0, got {self.lr}")
        if self.lambda_l1 < 0:
            raise ContractError(f"lambda_l1 must be >= 0, got {self.lambda_l1}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ContractError("batch_size must be >= 1 and epochs >= 0")


def cross_entropy(logits, label):
    """-log softmax(logits)[label], via the log-sum-exp stable form."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < len(logits):
        raise ContractError(f"label {label} outside [0, {len(logits)})")
    m = logits.max()
    return float(m + np.log(np.exp(logits - m).sum()) - logits[label])


def _batch_ce(logits, labels):
    """Mean cross-entropy over a batch plus the gradient w.r.t. logits."""
    n, k = logits.shape
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= k:
        raise ContractError(f"labels must lie in [0, {k})")
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), labels].mean()
    dlogits = np.exp(log_probs)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def _bn_train_forward(x, bn, momentum, update_running):
    axes = (0, 2, 3)
    mu = x.mean(axis=axes)
    var = x.var(axis=axes)
    inv = 1.0 / np.sqrt(var + bn.eps)
    xhat = (x - mu[:, None, None]) * inv[:, None, None]
    y = xhat if bn.gamma is None else xhat * bn.gamma[:, None, None]
    if update_running:
        bn.mean[...] = (1.0 - momentum) * bn.mean + momentum * mu
        bn.var[...] = (1.0 - momentum) * bn.var + momentum * var
    nstat = x.shape[0] * x.shape[2] * x.shape[3]
    return y, (xhat, inv, bn.gamma, nstat)


def _bn_train_backward(gy, cache):
    xhat, inv, gamma, nstat = cache
    dgamma = None
    if gamma is not None:
        dgamma = (gy * xhat).sum(axis=(0, 2, 3))
        gy = gy * gamma[:, None, None]
    s1 = gy.sum(axis=(0, 2, 3))
    s2 = (gy * xhat).sum(axis=(0, 2, 3))
    gx = (inv[:, None, None] / nstat) * (nstat * gy - s1[:, None, None] - xhat * s2[:, None, None])
    return gx, dgamma


def _avg_pool_backward(gp, in_shape, kernel=POOL_KERNEL):
    kh, kw = kernel
    n, c, h, w = in_shape
    oh, ow = gp.shape[2], gp.shape[3]
    gx = np.zeros(in_shape, dtype=gp.dtype)
    gx[:, :, : oh * kh, : ow * kw] = np.repeat(np.repeat(gp, kh, axis=2), kw, axis=3) / (kh * kw)
    return gx


def trainable_params(m):
    """Live views of every trainable tensor, keyed by canonical name."""
    params = {"conv0": m.conv0}
    for b, blk in enumerate(m.blocks):
        params[f"block{b}.conv1"] = blk.conv1
        if blk.bn1.gamma is not None:
            params[f"block{b}.bn1.gamma"] = blk.bn1.gamma
        params[f"block{b}.conv2"] = blk.conv2
    params["fc.weight"] = m.fc_w
    params["fc.bias"] = m.fc_b
    return params


def _forward_train(m, feats, bn_momentum, update_running):
    x_in = np.asarray(feats, dtype=m.dtype)[:, None, :, :]
    z0 = kernels.conv2d_forward(x_in, m.conv0)
    a0 = relu(z0)
    x = avg_pool(a0)
    block_caches = []
    for blk in m.blocks:
        z1 = kernels.conv2d_forward(x, blk.conv1)
        h1, bn1_cache = _bn_train_forward(z1, blk.bn1, bn_momentum, update_running)
        a1 = relu(h1)
        z2 = kernels.conv2d_forward(a1, blk.conv2)
        h2, bn2_cache = _bn_train_forward(z2, blk.bn2, bn_momentum, update_running)
        s = x + h2
        out = relu(s)
        block_caches.append((x, h1, a1, bn1_cache, bn2_cache, s))
        x = out
    pooled = x.mean(axis=(2, 3))
    logits = pooled @ m.fc_w.T + m.fc_b
    return logits, (x_in, z0, a0, block_caches, x, pooled)


def training_loss(m, feats, labels, bn_momentum=0.1):
    """Batch-statistics loss without touching the running statistics."""
    logits, _ = _forward_train(m, feats, bn_momentum, update_running=False)
    loss, _ = _batch_ce(logits, labels)
    return loss


def model_backward(m, feats, labels, bn_momentum=0.1, update_running=True):
    """Mean batch loss and exact gradients for every trainable tensor."""
    feats = np.asarray(feats)
    if feats.ndim != 3 or feats.shape[0] == 0:
        raise ContractError(f"expected a nonempty (N, frames, coeffs) batch, got shape {feats.shape}")
    labels = np.asarray(labels)
    if len(labels) != feats.shape[0]:
        raise ContractError(f"{feats.shape[0]} samples but {len(labels)} labels")

    logits, (x_in, z0, a0, block_caches, x_out, pooled) = _forward_train(
        m, feats, bn_momentum, update_running
    )
    loss, dlogits = _batch_ce(logits, labels)
    dlogits = dlogits.astype(m.dtype)

    grads = {
        "fc.weight": dlogits.T @ pooled,
        "fc.bias": dlogits.sum(axis=0),
    }
    n, c, ph, pw = x_out.shape
    dx = (dlogits @ m.fc_w)[:, :, None, None] / (ph * pw)
    dx = np.broadcast_to(dx, x_out.shape).copy()

    for b in range(len(m.blocks) - 1, -1, -1):
        blk = m.blocks[b]
        x_b, h1, a1, bn1_cache, bn2_cache, s = block_caches[b]
        ds = dx * (s > 0)
        dz2, _ = _bn_train_backward(ds, bn2_cache)
        grads[f"block{b}.conv2"] = kernels.conv2d_weight_grad(a1, dz2)
        da1 = kernels.conv2d_input_grad(dz2, blk.conv2)
        dh1 = da1 * (h1 > 0)
        dz1, dgamma = _bn_train_backward(dh1, bn1_cache)
        if dgamma is not None:
            grads[f"block{b}.bn1.gamma"] = dgamma
        grads[f"block{b}.conv1"] = kernels.conv2d_weight_grad(x_b, dz1)
        dx = kernels.conv2d_input_grad(dz1, blk.conv1) + ds

    da0 = _avg_pool_backward(dx, a0.shape)
    dz0 = da0 * (z0 > 0)
    grads["conv0"] = kernels.conv2d_weight_grad(x_in, dz0)
    return loss, grads


def l1_subgrad_gammas(m, lambda_l1):
    """Subgradient of lambda * sum |gamma| over the prunable scale vectors."""
    if not m.spec.slim_ready:
        raise ContractError("model has no scale parameters; train with slim_ready to enable the L1 penalty")
    return {
        f"block{b}.bn1.gamma": lambda_l1 * np.sign(blk.bn1.gamma)
        for b, blk in enumerate(m.blocks)
    }


def sgd_step(params, grads, velocity, lr, momentum):
    """v <- momentum v + g; p <- p - lr v.  Updates params in place."""
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ContractError(f"gradient shape {g.shape} does not match {name} shape {p.shape}")
        v = velocity.setdefault(name, np.zeros_like(p))
        v[...] = momentum * v + g
        p[...] = p - lr * v
    return params


def _gamma_small_fraction(m, threshold=0.01):
    if not m.spec.slim_ready:
        return None
    mags = np.array([mag for _, _, mag in collect_gammas(m)])
    return float((mags < threshold).mean())


def _load_clip_cache(entries):
    cache = {}
    for e in entries:
        if e.path not in cache:
            cache[e.path] = fit_length(read_wav(e.path))
    return cache


def _featurize_entries(entries, cache, mfcc_cfg):
    return np.stack([compute_mfcc(cache[e.path], mfcc_cfg) for e in entries]).astype(np.float32)


def _split_accuracy(m, feats, labels, chunk=256):
    correct = 0
    for i in range(0, len(feats), chunk):
        logits = forward_batch(m, feats[i : i + chunk])
        correct += int((logits.argmax(axis=1) == labels[i : i + chunk]).sum())
    return correct / len(feats)


def train(spec, manifest, cfg, augment_cfg=None, noise_clips=None, log=None):
    """Train a fresh model; returns the parameters of the best-validation epoch."""
    if len(manifest.label_names) != spec.n_labels:
        raise ContractError(
            f"manifest has {len(manifest.label_names)} labels but the model is {spec.n_labels}-way"
        )
    model = init_model(spec, seed=cfg.seed, labels=manifest.label_names)
    return _fit(model, manifest, cfg, augment_cfg, noise_clips, log)


def finetune(model, manifest, cfg, augment_cfg=None, noise_clips=None, log=None):
    """Continue training an existing (typically pruned) model."""
    return _fit(model.copy(), manifest, cfg, augment_cfg, noise_clips, log)


def _fit(model, manifest, cfg, augment_cfg, noise_clips, log):
    if cfg.lambda_l1 > 0 and not model.spec.slim_ready:
        raise ContractError("lambda_l1 > 0 requires a slim-ready model")
    train_entries = manifest.split_entries("train")
    if not train_entries:
        raise ContractError("manifest has an empty train split")
    val_entries = manifest.split_entries("validation")
    if augment_cfg is None:
        augment_cfg = AugmentConfig()
    noise_clips = noise_clips or []

    cache = _load_clip_cache(train_entries + val_entries)
    val_feats = _featurize_entries(val_entries, cache, model.mfcc) if val_entries else None
    val_labels = np.array([e.label for e in val_entries])

    velocity = {}
    best_acc, best_model = -1.0, None
    drop_epoch = (2 * cfg.epochs) // 3

    for epoch in range(cfg.epochs):
        rng = np.random.default_rng([cfg.seed, epoch])
        order = rng.permutation(len(train_entries))
        lr = cfg.lr * (LR_DROP_FACTOR if epoch >= drop_epoch else 1.0)
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_entries[i] for i in order[start : start + cfg.batch_size]]
            feats = np.stack([
                compute_mfcc(augment(cache[e.path], augment_cfg, noise_clips, rng), model.mfcc)
                for e in batch
            ]).astype(np.float32)
            labels = np.array([e.label for e in batch])
            loss, grads = model_backward(model, feats, labels, cfg.bn_momentum)
            if cfg.lambda_l1 > 0:
                for name, inc in l1_subgrad_gammas(model, cfg.lambda_l1).items():
                    grads[name] = grads[name] + inc
            sgd_step(trainable_params(model), grads, velocity, lr, cfg.momentum)
            losses.append(loss)

        val_acc = _split_accuracy(model, val_feats, val_labels) if val_feats is not None else None
        if log is not None:
            log({
                "epoch": epoch + 1,
                "train_loss": float(np.mean(losses)),
                "val_accuracy": val_acc,
                "gamma_below_0p01_fraction": _gamma_small_fraction(model),
            })
        if val_acc is not None and val_acc > best_acc:
            best_acc, best_model = val_acc, model.copy()

    return best_model if best_model is not None else model
