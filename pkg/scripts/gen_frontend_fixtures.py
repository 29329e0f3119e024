#!/usr/bin/env python3
"""Freeze golden fixtures for the frontend engine tests.

Writes a tiny seeded model as .kwsm plus a JSON document holding a PCM
window, its feature matrix, and the posteriors/logits both for the tiny
model and for the bundled demo model.  The TypeScript engine must
reproduce these numbers from the same bytes.
"""

import json
import os

import numpy as np

from kwslim.features import compute_mfcc
from kwslim.audio import AudioClip
from kwslim.graph import ModelSpec, init_model, model_forward
from kwslim.store import load_model, save_model

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "frontend", "test", "fixtures")
ASSETS = os.path.join(HERE, "..", "frontend", "assets")


def main():
    os.makedirs(FIXTURES, exist_ok=True)

    spec = ModelSpec(arch="tiny", base_channels=6, inner_widths=(4, 6, 3),
                     n_labels=12, slim_ready=True)
    tiny = init_model(spec, seed=42)
    tiny_path = os.path.join(FIXTURES, "tiny.kwsm")
    save_model(tiny, tiny_path)

    # PCM drawn as exact int16/32768 grid values so the JSON round trip is lossless
    rng = np.random.default_rng(1234)
    t = np.arange(16000) / 16000.0
    wave = 0.4 * np.sin(2 * np.pi * 540.0 * t) + 0.1 * np.sin(2 * np.pi * 1750.0 * t)
    wave += rng.normal(0, 0.02, 16000)
    pcm = np.round(np.clip(wave, -1, 1) * 32768).clip(-32768, 32767) / 32768.0
    clip = AudioClip(pcm.astype(np.float32))

    feat = compute_mfcc(clip)
    cases = {}
    post, logits = model_forward(tiny, feat)
    cases["tiny"] = {"posteriors": post.tolist(), "logits": logits.tolist()}

    demo_path = os.path.join(ASSETS, "models", "res8-narrow-toy.kwsm")
    if os.path.exists(demo_path):
        demo = load_model(demo_path)
        post, logits = model_forward(demo, compute_mfcc(clip, demo.mfcc))
        cases["res8-narrow-toy"] = {"posteriors": post.tolist(), "logits": logits.tolist()}

    doc = {
        "pcm": pcm.tolist(),
        "features": feat.tolist(),
        "cases": cases,
    }
    out = os.path.join(FIXTURES, "engine_golden.json")
    with open(out, "w") as fh:
        json.dump(doc, fh)
    print(f"wrote {tiny_path} and {out} ({len(cases)} golden cases)")


if __name__ == "__main__":
    main()
