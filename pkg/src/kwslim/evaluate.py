"""Accuracy evaluation over manifest splits (no augmentation)."""

from __future__ import annotations

import numpy as np

from .audio import fit_length, read_wav
from .errors import ContractError
from .features import compute_mfcc
from .graph import forward_batch


def evaluate_accuracy(model, manifest, split, chunk=128):
    """Fraction of clips in the split whose posterior argmax equals the label."""
    entries = manifest.split_entries(split)
    if not entries:
        raise ContractError(f"manifest has an empty {split} split")
    if len(manifest.label_names) != model.spec.n_labels:
        raise ContractError(
            f"manifest has {len(manifest.label_names)} labels but the model is "
            f"{model.spec.n_labels}-way"
        )
    correct = 0
    for start in range(0, len(entries), chunk):
        batch = entries[start : start + chunk]
        feats = np.stack([
            compute_mfcc(fit_length(read_wav(e.path)), model.mfcc) for e in batch
        ])
        preds = forward_batch(model, feats).argmax(axis=1)
        correct += int((preds == np.array([e.label for e in batch])).sum())
    return correct / len(entries)
