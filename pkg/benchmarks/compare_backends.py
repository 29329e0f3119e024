#!/usr/bin/env python3
"""Compare the compiled and numpy convolution backends across the model family.

Runs the latency harness once per (backend, model) pair in a single process
and prints a table of p50 forward / end-to-end times.  Useful for checking
how each backend scales with channel pruning before picking a deployment
default.

    python3 benchmarks/compare_backends.py [--runs N] [--warmup N]
"""

import argparse

from kwslim import kernels
from kwslim.bench import BenchConfig, run_bench
from kwslim.graph import ModelSpec, count_multiplies, init_model
from kwslim.slimming import SlimConfig, collect_gammas, prune_model, select_channels


def model_family():
    out = []
    for arch in ("res8", "res8-narrow"):
        base = init_model(ModelSpec.named(arch, slim_ready=True), seed=0)
        for blk in base.blocks:
            c = blk.bn1.gamma.shape[0]
            blk.bn1.gamma[...] = [(i + 1) / c for i in range(c)]
        out.append((arch, base))
        for fraction in (0.4, 0.8):
            mask = select_channels(collect_gammas(base), SlimConfig(fraction=fraction))
            out.append((f"{arch}-{int(fraction * 100)}", prune_model(base, mask)))
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=50)
    parser.add_argument("--warmup", type=int, default=8)
    args = parser.parse_args()

    models = model_family()
    cfg = BenchConfig(runs=args.runs, warmup=args.warmup)
    print(f"{'model':<16}{'mult (M)':>10}" + "".join(
        f"{b + ' fwd':>14}{b + ' e2e':>14}" for b in kernels.available_backends()))
    for name, model in models:
        row = f"{name:<16}{count_multiplies(model) / 1e6:>10.2f}"
        for backend in kernels.available_backends():
            kernels.set_backend(backend)
            report = run_bench(model, cfg, model_name=name)
            row += f"{report.p50('forward'):>12.2f} ms{report.p50('end_to_end'):>12.2f} ms"
        print(row)


if __name__ == "__main__":
    main()
