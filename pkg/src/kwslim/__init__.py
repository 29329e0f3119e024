"""kwslim: keyword spotting with MFCC features, res8 residual CNNs, and channel slimming."""

from .audio import (
    AudioClip,
    AugmentConfig,
    DatasetManifest,
    ManifestEntry,
    assign_split,
    build_manifest,
    fit_length,
    mix_noise,
    read_wav,
    time_shift,
    write_wav,
)
from .bench import BenchConfig, BenchReport, emit_tradeoff, run_bench
from .errors import ConfigError, ContractError, DataError, KwslimError
from .evaluate import evaluate_accuracy
from .features import MfccConfig, compute_mfcc, hz_to_mel, mel_filterbank, mel_to_hz
from .graph import (
    BatchNorm,
    Model,
    ModelSpec,
    ResBlock,
    avg_pool,
    batchnorm_infer,
    conv2d,
    count_multiplies,
    count_params,
    init_model,
    model_forward,
)
from .slimming import PruneMask, SlimConfig, collect_gammas, prune_model, select_channels
from .store import load_model, save_model
from .training import (
    TrainConfig,
    cross_entropy,
    finetune,
    l1_subgrad_gammas,
    model_backward,
    sgd_step,
    train,
)

__version__ = "0.1.0"
