"""Acceptance gate: every release criterion at its stated tolerance.

Each test prints one PASS line on success (run with -s to see them; a
failure is pytest's usual FAIL).  The two toy training runs are shared
through a session fixture because the sparsity comparison needs the
lambda=0 and lambda=1e-2 runs under identical seeds.
"""

import math

import numpy as np
import pytest

from kwslim import kernels
from kwslim.audio import AudioClip, AugmentConfig
from kwslim.bench import BenchConfig, run_bench
from kwslim.errors import ContractError
from kwslim.features import MfccConfig, compute_mfcc
from kwslim.graph import ModelSpec, count_multiplies, count_params, init_model, model_forward
from kwslim.slimming import PruneMask, SlimConfig, collect_gammas, prune_model, select_channels
from kwslim.store import model_from_bytes, model_to_bytes, tensor_items
from kwslim.toydata import make_tone_manifest
from kwslim.training import (
    TrainConfig,
    model_backward,
    train,
    trainable_params,
    training_loss,
)

TOY_SEED = 1
TOY_TRAIN_CFG = dict(lr=0.05, epochs=30, batch_size=16, seed=TOY_SEED)


def _ok(line):
    print(f"PASS: {line}")


# ----------------------------------------------------------------------
# parameter and multiply accounting
# ----------------------------------------------------------------------

def test_parameter_budgets():
    res8 = init_model(ModelSpec.named("res8"), seed=0)
    narrow = init_model(ModelSpec.named("res8-narrow"), seed=0)
    assert count_params(res8) == 110_307
    assert count_params(narrow) == 19_905
    _ok("parameter budgets: res8=110,307 res8-narrow=19,905 exactly")


def test_multiply_ratio():
    res8 = init_model(ModelSpec.named("res8"), seed=0)
    narrow = init_model(ModelSpec.named("res8-narrow"), seed=0)
    ratio = count_multiplies(res8) / count_multiplies(narrow)
    target = 30 / 5.65
    assert abs(ratio - target) / target < 0.05
    _ok(f"multiply ratio res8/res8-narrow = {ratio:.3f}, within 5% of {target:.2f}")


# ----------------------------------------------------------------------
# feature front-end
# ----------------------------------------------------------------------

def test_feature_shape_property():
    cfg = MfccConfig()
    rng = np.random.default_rng(123)
    for _ in range(100):
        clip = AudioClip(rng.uniform(-1, 1, 16000).astype(np.float32))
        assert compute_mfcc(clip, cfg).shape == (101, 40)
    _ok("feature shape: 101x40 on 100 random 1 s clips")


# ----------------------------------------------------------------------
# gradients
# ----------------------------------------------------------------------

GRAD_FIXTURES = [
    (ModelSpec("tiny", 2, (2, 2, 2), 3, False), 0, 100),
    (ModelSpec("tiny", 2, (2, 2, 2), 3, True), 2, 102),
    (ModelSpec("tiny", 3, (2, 3, 1), 4, True), 4, 104),
    (ModelSpec("tiny", 2, (1, 2, 2), 12, False), 6, 106),
    (ModelSpec("tiny", 3, (3, 3, 3), 5, True), 2, 102),
]


def test_gradient_correctness():
    h = 1e-3
    for spec, model_seed, data_seed in GRAD_FIXTURES:
        m = init_model(spec, seed=model_seed, dtype=np.float64,
                       labels=tuple(f"c{i}" for i in range(spec.n_labels)))
        rng = np.random.default_rng(data_seed)
        feats = rng.standard_normal((2, 13, 8))
        labels = rng.integers(0, spec.n_labels, 2)
        _, grads = model_backward(m, feats, labels, update_running=False)
        for name, p in trainable_params(m).items():
            g = grads[name]
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = p[idx]
                p[idx] = orig + h
                lp = training_loss(m, feats, labels)
                p[idx] = orig - h
                lm = training_loss(m, feats, labels)
                p[idx] = orig
                fd = (lp - lm) / (2 * h)
                denom = max(abs(fd), abs(g[idx]))
                if denom < 1e-6:
                    assert abs(fd - g[idx]) < 1e-2, f"{name}{idx}"
                else:
                    err = abs(fd - g[idx]) / denom
                    assert err < 1e-4, f"{name}{idx}: relative error {err:.3e}"
    _ok("gradient correctness: 5 seeded tiny configs, central FD (h=1e-3), rel err < 1e-4")


# ----------------------------------------------------------------------
# slimming equivalence
# ----------------------------------------------------------------------

def test_slimming_equivalence():
    m = init_model(ModelSpec.named("res8-narrow", slim_ready=True), seed=5)
    dropped = {0: (0, 7, 18), 1: (3,), 2: (5, 11)}
    for b, channels in dropped.items():
        m.blocks[b].bn1.gamma[list(channels)] = 0.0
    mask = PruneMask(kept=tuple(
        tuple(c for c in range(19) if c not in dropped[b]) for b in range(3)
    ))
    pruned = prune_model(m, mask)
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        feat = rng.standard_normal((101, 40)).astype(np.float32)
        _, full = model_forward(m, feat)
        _, slim = model_forward(pruned, feat)
        worst = max(worst, float(np.abs(full - slim).max()))
    assert worst < 1e-5
    _ok(f"slimming equivalence: zero-gamma pruning shifts logits by at most {worst:.2e} (< 1e-5)")


# ----------------------------------------------------------------------
# training on the synthetic tone task
# ----------------------------------------------------------------------

@pytest.fixture(scope="session")
def toy_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance_tones")
    return make_tone_manifest(root, n_classes=3, train_per_class=50, val_per_class=15,
                              seed=7)


@pytest.fixture(scope="session")
def trained_pair(toy_manifest):
    """lambda=0 and lambda=1e-2 runs under identical seeds.

    Trained without a validation split so both artifacts are the
    end-of-training parameters: the tone task saturates validation within a
    few epochs, and the best-epoch snapshot would predate any L1 shrinkage.
    The held-out entries stay unseen for the generalization check.
    """
    from kwslim.audio import DatasetManifest

    train_only = DatasetManifest(toy_manifest.label_names, toy_manifest.split_entries("train"))
    spec = ModelSpec.named("res8-narrow", n_labels=3, slim_ready=True)
    aug = AugmentConfig(noise_prob=0.0)
    plain = train(spec, train_only, TrainConfig(**TOY_TRAIN_CFG), augment_cfg=aug)
    sparse = train(spec, train_only, TrainConfig(lambda_l1=1e-2, **TOY_TRAIN_CFG),
                   augment_cfg=aug)
    return plain, sparse


def test_desk_scale_learning(toy_manifest, trained_pair):
    from kwslim.evaluate import evaluate_accuracy
    plain, _ = trained_pair
    train_acc = evaluate_accuracy(plain, toy_manifest, "train")
    val_acc = evaluate_accuracy(plain, toy_manifest, "validation")
    assert train_acc >= 0.95
    assert val_acc >= 0.80
    _ok(f"desk-scale learning: res8-narrow tones train={train_acc:.3f} (>=0.95) "
        f"held-out={val_acc:.3f} (>=0.80) within 30 epochs")


def test_sparsity_induction(trained_pair):
    plain, sparse = trained_pair

    def small_count(m):
        return sum(1 for _, _, mag in collect_gammas(m) if mag < 0.05)

    n_plain, n_sparse = small_count(plain), small_count(sparse)
    assert n_sparse > n_plain
    _ok(f"sparsity induction: |gamma|<0.05 count {n_sparse} (lambda=1e-2) > {n_plain} (lambda=0)")


# ----------------------------------------------------------------------
# multiply shrinkage and latency of the slim variants
# ----------------------------------------------------------------------

def _uniform_gamma_fixture(seed=0):
    """Slim-ready res8 whose per-layer gamma ladders are identical, so the
    global cut removes the same number of channels from every layer."""
    m = init_model(ModelSpec.named("res8", slim_ready=True), seed=seed)
    for blk in m.blocks:
        blk.bn1.gamma[...] = (np.arange(1, 46) / 45.0).astype(np.float32)
    return m


def _slim(m, fraction):
    return prune_model(m, select_channels(collect_gammas(m), SlimConfig(fraction=fraction)))


def test_multiply_shrinkage():
    m = _uniform_gamma_fixture()
    m40, m80 = _slim(m, 0.4), _slim(m, 0.8)
    assert m40.spec.inner_widths == (27, 27, 27)
    assert m80.spec.inner_widths == (9, 9, 9)
    r40 = count_multiplies(m40) / count_multiplies(m)
    r80 = count_multiplies(m80) / count_multiplies(m)
    assert r80 <= 0.25
    assert r40 <= 0.65
    _ok(f"multiply shrinkage: res8-80/res8 = {r80:.3f} (<=0.25), res8-40/res8 = {r40:.3f} (<=0.65)")


def test_latency_ordering():
    if "cython" in kernels.available_backends():
        kernels.set_backend("cython")
    m = _uniform_gamma_fixture()
    cfg = BenchConfig(runs=50, warmup=8)
    p50 = {
        name: run_bench(model, cfg, model_name=name).p50("end_to_end")
        for name, model in (("res8", m), ("res8-40", _slim(m, 0.4)), ("res8-80", _slim(m, 0.8)))
    }
    assert p50["res8-80"] < p50["res8-40"] < p50["res8"]
    assert p50["res8-80"] <= 0.6 * p50["res8"]
    _ok(f"latency ordering ({kernels.backend_name()} backend): "
        f"res8-80 {p50['res8-80']:.2f} ms < res8-40 {p50['res8-40']:.2f} ms "
        f"< res8 {p50['res8']:.2f} ms; ratio {p50['res8-80'] / p50['res8']:.2f} <= 0.6")


# ----------------------------------------------------------------------
# model file format
# ----------------------------------------------------------------------

def test_format_fidelity_thousand_iterations():
    rng = np.random.default_rng(99)
    for i in range(1000):
        base = int(rng.integers(1, 6))
        spec = ModelSpec(
            arch=f"r{i % 5}",
            base_channels=base,
            inner_widths=tuple(int(rng.integers(1, base + 1)) for _ in range(3)),
            n_labels=int(rng.integers(2, 14)),
            slim_ready=bool(rng.integers(0, 2)),
        )
        m = init_model(spec, seed=int(rng.integers(1 << 31)),
                       labels=tuple(f"c{j}" for j in range(spec.n_labels)))
        if spec.slim_ready and rng.integers(0, 2):
            kept = tuple(
                tuple(sorted(rng.choice(w, size=int(rng.integers(1, w + 1)), replace=False).tolist()))
                for w in spec.inner_widths
            )
            m = prune_model(m, PruneMask(kept=kept))
        blob = model_to_bytes(m)
        back = model_from_bytes(blob)
        assert model_to_bytes(back) == blob
        for (na, ta), (nb, tb) in zip(tensor_items(m), tensor_items(back)):
            assert na == nb and ta.tobytes() == tb.tobytes()
        assert back.spec == m.spec
    _ok("format fidelity: 1,000 random save/load round trips bitwise equal")
