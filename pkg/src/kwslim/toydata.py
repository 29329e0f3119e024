"""Synthetic tone datasets for desk-scale training, tests, and the demo.

Each class is a sine at a fixed base frequency with per-clip jitter in
amplitude, phase, frequency, and additive noise, so the task is learnable
but not degenerate.  Clips are written as real 16-bit WAV files so the
same ingestion path as production data is exercised.
"""

from __future__ import annotations

import os

import numpy as np

from .audio import (
    SAMPLE_RATE,
    AudioClip,
    DatasetManifest,
    ManifestEntry,
    NOISE_DIRNAME,
    write_wav,
)

TONE_FREQS = (320.0, 540.0, 910.0, 1530.0, 2570.0, 4330.0, 360.0, 620.0, 1040.0, 1750.0)


def tone_clip(freq_hz, rng, duration_s=1.0, noise_std=0.02):
    """One jittered sine clip."""
    n = int(round(duration_s * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE
    freq = freq_hz * (1.0 + rng.uniform(-0.02, 0.02))
    amp = rng.uniform(0.25, 0.75)
    phase = rng.uniform(0, 2 * np.pi)
    wave = amp * np.sin(2 * np.pi * freq * t + phase)
    wave += rng.normal(0.0, noise_std, n)
    return AudioClip(np.clip(wave, -1.0, 1.0).astype(np.float32))


def make_tone_manifest(root, n_classes=3, train_per_class=50, val_per_class=15,
                       test_per_class=0, seed=0):
    """Write tone WAVs under root/<class>/ and return the matching manifest."""
    rng = np.random.default_rng(seed)
    root = str(root)
    labels = [f"tone{i}" for i in range(n_classes)]
    counts = (("train", train_per_class), ("validation", val_per_class), ("test", test_per_class))
    entries = []
    for label_id, label in enumerate(labels):
        os.makedirs(os.path.join(root, label), exist_ok=True)
        i = 0
        for split, count in counts:
            for _ in range(count):
                path = os.path.join(root, label, f"{label}_{i:03d}.wav")
                write_wav(path, tone_clip(TONE_FREQS[label_id], rng))
                entries.append(ManifestEntry(path, label_id, split))
                i += 1
    entries.sort(key=lambda e: e.path)
    return DatasetManifest(label_names=labels, entries=entries)


def make_tone_command_tree(root, keywords=None, files_per_keyword=12,
                           unknown_words=("hum", "buzz"), noise_files=2, seed=0):
    """Speech-commands style directory tree built from tones.

    Ten tone "keywords" plus a couple of non-target words and a background
    noise directory, with several files per pseudo-speaker so the
    hash-split machinery has something to chew on.
    """
    rng = np.random.default_rng(seed)
    root = str(root)
    if keywords is None:
        keywords = [f"tone{i}" for i in range(10)]
    freqs = dict(zip(keywords, TONE_FREQS))
    extra = dict(zip(unknown_words, (5100.0, 6200.0)))
    for word, freq in {**freqs, **extra}.items():
        d = os.path.join(root, word)
        os.makedirs(d, exist_ok=True)
        for i in range(files_per_keyword):
            speaker = f"spk{rng.integers(0, 1 << 28):07x}"
            write_wav(os.path.join(d, f"{speaker}_nohash_0.wav"), tone_clip(freq, rng))
    noise_dir = os.path.join(root, NOISE_DIRNAME)
    os.makedirs(noise_dir, exist_ok=True)
    for i in range(noise_files):
        samples = rng.uniform(-0.3, 0.3, 3 * SAMPLE_RATE).astype(np.float32)
        write_wav(os.path.join(noise_dir, f"noise_{i}.wav"), AudioClip(samples))
    return list(keywords)
