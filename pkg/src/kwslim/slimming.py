"""Channel selection by gamma magnitude and structural pruning.

Only the intra-block bottleneck (BN1 of each residual block) is prunable:
removing its channels shrinks conv1 output filters and conv2 input filters
while leaving every block's external width, and therefore the identity
skips, untouched.  Ranking is global across the three prunable layers with
a per-layer floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError
from .graph import BatchNorm, Model, ModelSpec, ResBlock


@dataclass(frozen=True)
class SlimConfig:
    fraction: float
    min_keep: int = 1

    def __post_init__(self):
        if not 0 <= self.fraction < 1:
            raise ConfigError(f"prune fraction must lie in [0, 1), got {self.fraction}")
        if self.min_keep < 1:
            raise ConfigError(f"min_keep must be >= 1, got {self.min_keep}")


@dataclass(frozen=True)
class PruneMask:
    """Sorted kept-channel indices for each prunable layer (block order)."""

    kept: tuple

    def __post_init__(self):
        object.__setattr__(self, "kept", tuple(tuple(sorted(int(c) for c in layer)) for layer in self.kept))
        for layer_id, layer in enumerate(self.kept):
            if not layer:
                raise ContractError(f"prunable layer {layer_id} would keep no channels")
            if len(set(layer)) != len(layer):
                raise ContractError(f"prunable layer {layer_id} repeats kept channels")


def collect_gammas(m):
    """(layer_id, channel, |gamma|) for every prunable channel, in layer-then-channel order."""
    out = []
    for b, blk in enumerate(m.blocks):
        if blk.bn1.gamma is None:
            raise ContractError(
                "model carries no scale parameters; train it slim-ready before pruning"
            )
        out.extend((b, c, float(abs(g))) for c, g in enumerate(blk.bn1.gamma))
    return out


def select_channels(gammas, cfg):
    """Prune the globally smallest |gamma| entries, honoring the per-layer floor.

    Candidates are visited in ascending (|gamma|, layer, channel) order and
    pruned greedily; a candidate whose removal would push its layer below
    min_keep is retained and the next smallest candidate takes its place.
    """
    if not gammas:
        raise ContractError("no prunable channels to rank")
    layer_ids = sorted({layer for layer, _, _ in gammas})
    sizes = {layer: sum(1 for l, _, _ in gammas if l == layer) for layer in layer_ids}
    target = int(round(cfg.fraction * len(gammas)))

    pruned = {layer: set() for layer in layer_ids}
    n_pruned = 0
    for layer, channel, _ in sorted(gammas, key=lambda t: (t[2], t[0], t[1])):
        if n_pruned == target:
            break
        if sizes[layer] - len(pruned[layer]) <= cfg.min_keep:
            continue
        pruned[layer].add(channel)
        n_pruned += 1

    kept = tuple(
        tuple(c for c in range(sizes[layer]) if c not in pruned[layer]) for layer in layer_ids
    )
    return PruneMask(kept=kept)


def prune_model(m, mask):
    """Structurally remove pruned bottleneck channels; other tensors are copied verbatim."""
    if len(mask.kept) != len(m.blocks):
        raise ContractError(f"mask covers {len(mask.kept)} layers, model has {len(m.blocks)}")
    blocks = []
    for blk, kept in zip(m.blocks, mask.kept):
        idx = np.array(kept)
        if idx.max() >= blk.bn1.channels:
            raise ContractError(
                f"mask keeps channel {idx.max()} but the layer has only {blk.bn1.channels}"
            )
        blocks.append(ResBlock(
            conv1=blk.conv1[idx].copy(),
            bn1=BatchNorm(
                mean=blk.bn1.mean[idx].copy(),
                var=blk.bn1.var[idx].copy(),
                gamma=blk.bn1.gamma[idx].copy() if blk.bn1.gamma is not None else None,
                eps=blk.bn1.eps,
            ),
            conv2=blk.conv2[:, idx].copy(),
            bn2=BatchNorm(blk.bn2.mean.copy(), blk.bn2.var.copy(), None, blk.bn2.eps),
        ))
    spec = ModelSpec(
        arch=m.spec.arch,
        base_channels=m.spec.base_channels,
        inner_widths=tuple(len(k) for k in mask.kept),
        n_labels=m.spec.n_labels,
        slim_ready=m.spec.slim_ready,
    )
    return Model(
        spec=spec,
        conv0=m.conv0.copy(),
        blocks=blocks,
        fc_w=m.fc_w.copy(),
        fc_b=m.fc_b.copy(),
        labels=m.labels,
        mfcc=m.mfcc,
    )


def slim_variant_name(arch, fraction):
    """File/report naming for slim variants, e.g. res8 at 0.4 -> res8-40."""
    return f"{arch}-{int(round(fraction * 100))}"
