"""Latency measurement with per-stage breakdown and tradeoff tables.

Each timed run featurizes a clip and runs the forward pass back to back;
featurize, forward, and end-to-end are measured from the same monotonic
clock so scheduling gaps between the stages stay visible instead of being
summed away.  Warmup runs are executed and discarded before any sample is
recorded.
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioClip
from .errors import ContractError
from .evaluate import evaluate_accuracy
from .features import compute_mfcc
from .graph import count_multiplies, count_params, model_forward

STAGES = ("featurize", "forward", "end_to_end")


@dataclass(frozen=True)
class BenchConfig:
    runs: int = 100
    warmup: int = 10
    source: str = "fixed"      # "fixed" reuses one clip, "random" draws a new one per run
    seed: int = 0
    device_label: str = "local"

    def __post_init__(self):
        if self.runs < 1:
            raise ContractError(f"runs must be >= 1, got {self.runs}")
        if self.warmup < 0:
            raise ContractError(f"warmup must be >= 0, got {self.warmup}")
        if self.source not in ("fixed", "random"):
            raise ContractError(f"unknown input source {self.source!r}")


@dataclass
class BenchReport:
    device_label: str
    model_name: str
    runs: int
    warmup: int
    stages: dict = field(default_factory=dict)
    backend: str = ""

    def to_dict(self):
        return {
            "device_label": self.device_label,
            "model": self.model_name,
            "backend": self.backend,
            "runs": self.runs,
            "warmup": self.warmup,
            "stages": self.stages,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        buf.write("stage,mean,std,min,p50,p95,p99,max\n")
        for stage in STAGES:
            s = self.stages[stage]
            buf.write(stage + "," + ",".join(
                f"{s[k]:.6f}" for k in ("mean", "std", "min", "p50", "p95", "p99", "max")) + "\n")
        return buf.getvalue()

    def p50(self, stage):
        return self.stages[stage]["p50"]


def stage_stats(durations_ms):
    """Summary statistics for one stage's timings."""
    d = np.asarray(durations_ms, dtype=np.float64)
    if np.any(d <= 0):
        raise ContractError("recorded a zero-duration run; clock resolution is insufficient")
    return {
        "mean": float(d.mean()),
        "std": float(d.std()),
        "min": float(d.min()),
        "p50": float(np.percentile(d, 50)),
        "p95": float(np.percentile(d, 95)),
        "p99": float(np.percentile(d, 99)),
        "max": float(d.max()),
    }


def _random_clip(rng):
    return AudioClip((rng.uniform(-0.5, 0.5, 16000)).astype(np.float32))


def run_bench(model, cfg=BenchConfig(), model_name=None, clock=time.perf_counter_ns):
    """Time featurize/forward/end-to-end over cfg.runs runs after cfg.warmup discards."""
    from .kernels import backend_name

    rng = np.random.default_rng(cfg.seed)
    fixed = _random_clip(rng)
    samples = {stage: [] for stage in STAGES}

    for i in range(cfg.warmup + cfg.runs):
        clip = fixed if cfg.source == "fixed" else _random_clip(rng)
        t0 = clock()
        feat = compute_mfcc(clip, model.mfcc)
        t1 = clock()
        model_forward(model, feat)
        t2 = clock()
        if i < cfg.warmup:
            continue
        samples["featurize"].append((t1 - t0) / 1e6)
        samples["forward"].append((t2 - t1) / 1e6)
        samples["end_to_end"].append((t2 - t0) / 1e6)

    report = BenchReport(
        device_label=cfg.device_label,
        model_name=model_name or model.spec.arch,
        runs=cfg.runs,
        warmup=cfg.warmup,
        backend=backend_name(),
    )
    report.stages = {stage: stage_stats(samples[stage]) for stage in STAGES}
    return report


def emit_tradeoff(named_models, manifest, cfg=BenchConfig(), split="test"):
    """Accuracy/latency/cost table, CSV-ready, sorted by multiply count ascending."""
    if len(named_models) < 2:
        raise ContractError(f"a tradeoff needs at least 2 models, got {len(named_models)}")
    rows = []
    for name, model in named_models:
        report = run_bench(model, cfg, model_name=name)
        rows.append({
            "name": name,
            "params": count_params(model),
            "multiplies": count_multiplies(model),
            "accuracy": evaluate_accuracy(model, manifest, split),
            "p50_ms": report.p50("end_to_end"),
        })
    rows.sort(key=lambda r: r["multiplies"])
    return rows


def tradeoff_csv(rows):
    buf = io.StringIO()
    buf.write("name,params,multiplies,accuracy,p50_ms\n")
    for r in rows:
        buf.write(f"{r['name']},{r['params']},{r['multiplies']},{r['accuracy']:.6f},{r['p50_ms']:.6f}\n")
    return buf.getvalue()
