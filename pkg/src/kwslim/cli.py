"""Command-line surface: prepare -> train -> prune -> finetune -> eval -> bench.

Exit codes: 0 success, 1 contract/config/usage error, 2 I/O or data error.
File outputs are written to a temp file and renamed, so an interrupted
command never leaves a half-written manifest, model, or report behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import bench as bench_mod
from . import kernels
from .audio import KEYWORDS, DatasetManifest, build_manifest, fit_length, load_noise_clips, read_wav
from .errors import ConfigError, ContractError, DataError
from .evaluate import evaluate_accuracy
from .features import compute_mfcc
from .graph import ModelSpec, count_multiplies, count_params, model_forward
from .slimming import SlimConfig, collect_gammas, prune_model, select_channels, slim_variant_name
from .store import load_model, save_model
from .training import TrainConfig, finetune, train


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage problems are config errors (exit 1), not argparse's default 2
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _atomic_write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(doc, json_flag=True):
    print(json.dumps(doc, indent=2, sort_keys=True))


def _train_config(args):
    return TrainConfig(
        lr=args.lr,
        momentum=args.momentum,
        batch_size=args.batch_size,
        epochs=args.epochs,
        lambda_l1=args.sparsity,
        seed=args.seed,
    )


def _log_line(record):
    print(json.dumps(record, sort_keys=True))
    sys.stdout.flush()


def cmd_prepare(args):
    keywords = tuple(args.keywords.split(",")) if args.keywords else KEYWORDS
    manifest = build_manifest(args.data, keywords=keywords,
                              noise_vol_max=args.noise_vol_max, seed=args.seed)
    _atomic_write_text(args.out, manifest.to_json())
    counts = {s: len(manifest.split_entries(s)) for s in ("train", "validation", "test")}
    _emit({"out": args.out, "labels": manifest.label_names, "entries": len(manifest.entries),
           "splits": counts})
    return 0


def cmd_train(args):
    manifest = DatasetManifest.load(args.data)
    spec = ModelSpec.named(args.arch, n_labels=len(manifest.label_names),
                           slim_ready=args.slim_ready)
    noise = load_noise_clips(args.noise_dir) if args.noise_dir else []
    model = train(spec, manifest, _train_config(args), noise_clips=noise, log=_log_line)
    save_model(model, args.out)
    _emit({"out": args.out, "arch": spec.arch, "params": count_params(model)})
    return 0


def cmd_finetune(args):
    manifest = DatasetManifest.load(args.data)
    model = load_model(args.model)
    noise = load_noise_clips(args.noise_dir) if args.noise_dir else []
    tuned = finetune(model, manifest, _train_config(args), noise_clips=noise, log=_log_line)
    save_model(tuned, args.out)
    _emit({"out": args.out, "arch": tuned.spec.arch, "params": count_params(tuned)})
    return 0


def cmd_prune(args):
    model = load_model(args.model)
    mask = select_channels(collect_gammas(model), SlimConfig(fraction=args.fraction))
    pruned = prune_model(model, mask)
    pruned.spec = ModelSpec(
        arch=slim_variant_name(model.spec.arch, args.fraction),
        base_channels=pruned.spec.base_channels,
        inner_widths=pruned.spec.inner_widths,
        n_labels=pruned.spec.n_labels,
        slim_ready=pruned.spec.slim_ready,
    )
    save_model(pruned, args.out)
    _emit({
        "out": args.out,
        "arch": pruned.spec.arch,
        "inner_widths": list(pruned.spec.inner_widths),
        "params": count_params(pruned),
        "multiplies": count_multiplies(pruned),
    })
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    manifest = DatasetManifest.load(args.data)
    acc = evaluate_accuracy(model, manifest, args.split)
    _emit({"split": args.split, "accuracy": acc,
           "entries": len(manifest.split_entries(args.split))})
    return 0


def cmd_infer(args):
    model = load_model(args.model)
    clip = fit_length(read_wav(args.wav))
    posteriors, _ = model_forward(model, compute_mfcc(clip, model.mfcc))
    top = int(np.argmax(posteriors))
    _emit({
        "wav": args.wav,
        "labels": list(model.labels),
        "posteriors": [float(p) for p in posteriors],
        "label": model.labels[top],
        "label_id": top,
    })
    return 0


def cmd_bench(args):
    if args.backend != "auto":
        kernels.set_backend(args.backend)
    model = load_model(args.model)
    cfg = bench_mod.BenchConfig(runs=args.runs, warmup=args.warmup,
                                seed=args.seed, device_label=args.device_label)
    report = bench_mod.run_bench(model, cfg, model_name=_model_name(args.model))
    if args.out:
        _atomic_write_text(args.out, report.to_json())
    if args.csv:
        _atomic_write_text(args.csv, report.to_csv())
    print(report.to_json(), end="")
    return 0


def cmd_tradeoff(args):
    manifest = DatasetManifest.load(args.data)
    named = [(_model_name(path), load_model(path)) for path in args.model]
    cfg = bench_mod.BenchConfig(runs=args.runs, warmup=args.warmup, seed=args.seed)
    rows = bench_mod.emit_tradeoff(named, manifest, cfg, split=args.split)
    csv_text = bench_mod.tradeoff_csv(rows)
    if args.out:
        _atomic_write_text(args.out, csv_text)
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
    else:
        print(csv_text, end="")
    return 0


def cmd_export(args):
    model = load_model(args.model)
    name = args.name or _model_name(args.model)
    models_dir = os.path.join(args.out, "models")
    os.makedirs(models_dir, exist_ok=True)
    dest = os.path.join(models_dir, f"{name}.kwsm")
    save_model(model, dest)
    _atomic_write_text(os.path.join(args.out, "labels.json"),
                       json.dumps(list(model.labels)) + "\n")
    _emit({"model": dest, "labels": os.path.join(args.out, "labels.json")})
    return 0


def _model_name(path):
    return os.path.splitext(os.path.basename(path))[0]


def build_parser():
    parser = _Parser(prog="kwslim", description="Keyword spotting engine with channel slimming")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", action="store_true",
                       help="machine-readable JSON on stdout (default for most commands)")
        return p

    p = add("prepare", cmd_prepare, help="scan a dataset tree into a manifest")
    p.add_argument("--data", required=True, help="dataset root directory")
    p.add_argument("--out", required=True, help="manifest JSON path")
    p.add_argument("--keywords", default=None, help="comma-separated target words (default: standard 10)")
    p.add_argument("--noise-vol-max", type=float, default=0.1)

    for name, fn in (("train", cmd_train), ("finetune", cmd_finetune)):
        p = add(name, fn, help=f"{name} a model on a manifest")
        p.add_argument("--data", required=True, help="manifest JSON path")
        p.add_argument("--out", required=True, help="output .kwsm path")
        p.add_argument("--epochs", type=int, default=30)
        p.add_argument("--lr", type=float, default=0.1)
        p.add_argument("--momentum", type=float, default=0.9)
        p.add_argument("--batch-size", type=int, default=64)
        p.add_argument("--sparsity", type=float, default=0.0, help="L1 weight on the BN scales")
        p.add_argument("--noise-dir", default=None, help="dataset root holding _background_noise_")
        if name == "train":
            p.add_argument("--arch", choices=("res8", "res8-narrow"), required=True)
            p.add_argument("--slim-ready", action="store_true",
                           help="attach prunable scale parameters to the bottleneck norms")
        else:
            p.add_argument("--model", required=True)

    p = add("prune", cmd_prune, help="remove the smallest-scale bottleneck channels")
    p.add_argument("--model", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--out", required=True)

    p = add("eval", cmd_eval, help="accuracy on a manifest split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("train", "validation", "test"), default="test")

    p = add("infer", cmd_infer, help="classify one WAV file")
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)

    p = add("bench", cmd_bench, help="latency benchmark")
    p.add_argument("--model", required=True)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--device-label", default="local")
    p.add_argument("--backend", choices=("auto",) + kernels.available_backends(), default="auto")
    p.add_argument("--out", default=None, help="also write the JSON report here")
    p.add_argument("--csv", default=None, help="also write a per-stage CSV here")

    p = add("tradeoff", cmd_tradeoff, help="accuracy/latency table over several models")
    p.add_argument("--model", action="append", required=True, help="repeat for each .kwsm")
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("train", "validation", "test"), default="test")
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--out", default=None, help="also write the CSV here")

    p = add("export", cmd_export, help="copy a model plus labels into the demo asset layout")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="asset directory (gets models/ and labels.json)")
    p.add_argument("--name", default=None)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except (ContractError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
