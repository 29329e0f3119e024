#!/usr/bin/env python3
"""Train the toy demo models and export them into frontend/assets/.

Builds a speech-commands style tone dataset (12 labels: ten tone
"keywords" plus unknown and silence), trains a slim-ready res8-narrow,
prunes 40% and 80% variants with a short fine-tune, and exports all three
through the CLI's asset layout.  Everything is seeded; rebuilding
overwrites the assets deterministically.
"""

import json
import os
import sys
import tempfile

from kwslim.audio import DatasetManifest, build_manifest
from kwslim.cli import main as cli
from kwslim.toydata import make_tone_command_tree

ASSETS = os.path.join(os.path.dirname(__file__), "..", "frontend", "assets")


def run(argv):
    code = cli(argv)
    if code != 0:
        sys.exit(f"command failed ({code}): {' '.join(argv)}")


def main():
    assets = os.path.abspath(ASSETS)
    os.makedirs(assets, exist_ok=True)
    with tempfile.TemporaryDirectory() as work:
        data = os.path.join(work, "data")
        keywords = make_tone_command_tree(data, files_per_keyword=18, seed=11)
        manifest = os.path.join(work, "manifest.json")
        run(["prepare", "--data", data, "--out", manifest, "--keywords", ",".join(keywords)])

        base = os.path.join(work, "res8-narrow-toy.kwsm")
        run(["train", "--data", manifest, "--arch", "res8-narrow", "--slim-ready",
             "--sparsity", "1e-3", "--epochs", "18", "--lr", "0.03", "--batch-size", "16",
             "--noise-dir", data, "--out", base])

        variants = [("res8-narrow-toy", base)]
        for fraction in ("0.4", "0.8"):
            tag = f"res8-narrow-toy-{int(float(fraction) * 100)}"
            pruned = os.path.join(work, f"{tag}.kwsm")
            run(["prune", "--model", base, "--fraction", fraction, "--out", pruned])
            tuned = os.path.join(work, f"{tag}-ft.kwsm")
            run(["finetune", "--model", pruned, "--data", manifest, "--epochs", "6",
                 "--lr", "0.005", "--batch-size", "16", "--noise-dir", data, "--out", tuned])
            variants.append((tag, tuned))

        for name, path in variants:
            run(["export", "--model", path, "--out", assets, "--name", name])
        with open(os.path.join(assets, "models", "index.json"), "w") as fh:
            json.dump([name for name, _ in variants], fh, indent=2)

        run(["eval", "--model", base, "--data", manifest, "--split", "test"])
    print(f"assets written to {assets}")


if __name__ == "__main__":
    main()
