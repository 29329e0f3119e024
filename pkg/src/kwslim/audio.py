"""WAV ingestion, dataset manifests with deterministic splits, augmentation.

Dataset layout mirrors the usual speech-commands convention: one directory
per spoken word plus a ``_background_noise_`` directory.  Manifest entries
for the synthetic "silence" class point at 1 s noise crops that
:func:`build_manifest` materializes as real WAV files under ``_silence_``
(seeded, so rebuilding the manifest is byte-identical).
"""

from __future__ import annotations

import hashlib
import json
import os
import wave
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DataError

SAMPLE_RATE = 16000
CLIP_SAMPLES = 16000

KEYWORDS = ("yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go")
UNKNOWN_LABEL = "unknown"
SILENCE_LABEL = "silence"
NOISE_DIRNAME = "_background_noise_"
SILENCE_DIRNAME = "_silence_"
SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM samples in [-1, 1] plus their sample rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ContractError("audio clip must hold at least one sample")

    @property
    def duration_ms(self):
        return 1000.0 * len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class AugmentConfig:
    shift_ms: int = 100          # timeshift drawn from Uniform[-shift_ms, shift_ms]
    noise_prob: float = 0.8
    noise_vol_max: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.shift_ms < 0 or self.noise_vol_max < 0 or not 0 <= self.noise_prob <= 1:
            raise ContractError(f"invalid augmentation config: {self}")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    split: str


@dataclass
class DatasetManifest:
    label_names: list[str]
    entries: list[ManifestEntry] = field(default_factory=list)

    def split_entries(self, split):
        if split not in SPLITS:
            raise ContractError(f"unknown split {split!r}, expected one of {SPLITS}")
        return [e for e in self.entries if e.split == split]

    def to_json(self):
        doc = {
            "labels": list(self.label_names),
            "entries": [{"path": e.path, "label": e.label, "split": e.split} for e in self.entries],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
            entries = [ManifestEntry(e["path"], int(e["label"]), e["split"]) for e in doc["entries"]]
            return cls(label_names=list(doc["labels"]), entries=entries)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed manifest document: {exc}") from exc

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def read_wav(path, expected_rate=SAMPLE_RATE):
    """Read a 16-bit PCM mono WAV file into an AudioClip.

    Raw int16 values are scaled by 1/32768 so the full negative range maps
    onto [-1, 1).  Any header mismatch raises DataError naming the field.
    """
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getcomptype() != "NONE":
                raise DataError(f"{path}: compression type {wf.getcomptype()!r}, expected PCM")
            if wf.getsampwidth() != 2:
                raise DataError(f"{path}: sample width {8 * wf.getsampwidth()} bit, expected 16 bit")
            if wf.getnchannels() != 1:
                raise DataError(f"{path}: {wf.getnchannels()} channels, expected mono")
            if wf.getframerate() != expected_rate:
                raise DataError(f"{path}: sample rate {wf.getframerate()} Hz, expected {expected_rate} Hz")
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except wave.Error as exc:
        raise DataError(f"{path}: not a RIFF/WAVE file ({exc})") from exc
    except EOFError as exc:
        raise DataError(f"{path}: truncated WAV header") from exc
    if len(raw) < 2 * n_frames:
        raise DataError(f"{path}: data chunk truncated, header claims {2 * n_frames} bytes, found {len(raw)}")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0
    return AudioClip(samples=samples, sample_rate=expected_rate)


def write_wav(path, clip):
    """Write an AudioClip as 16-bit PCM mono WAV (used for fixtures and silence crops)."""
    data = np.clip(np.round(np.asarray(clip.samples, dtype=np.float64) * 32768.0), -32768, 32767)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(data.astype("<i2").tobytes())


def time_shift(clip, shift_ms):
    """Shift content by shift_ms, zero-filling the vacated end; length is preserved."""
    n = len(clip.samples)
    shift = int(round(shift_ms * clip.sample_rate / 1000.0))
    if abs(shift) > n:
        raise ContractError(f"shift of {shift_ms} ms exceeds clip duration {clip.duration_ms:.1f} ms")
    out = np.zeros_like(clip.samples)
    if shift > 0:
        out[shift:] = clip.samples[: n - shift]
    elif shift < 0:
        out[: n + shift] = clip.samples[-shift:]
    else:
        out[:] = clip.samples
    return AudioClip(samples=out, sample_rate=clip.sample_rate)


def mix_noise(clip, noise, volume, rng=None):
    """Add a noise crop at the given volume, clamping the sum to [-1, 1].

    The crop offset is drawn from rng when provided, otherwise 0.
    """
    if volume < 0:
        raise ContractError(f"noise volume must be >= 0, got {volume}")
    n = len(clip.samples)
    slack = len(noise.samples) - n
    if slack < 0:
        raise ContractError(f"noise clip ({len(noise.samples)} samples) shorter than target ({n})")
    offset = int(rng.integers(0, slack + 1)) if rng is not None else 0
    crop = noise.samples[offset : offset + n]
    mixed = np.clip(clip.samples + volume * crop, -1.0, 1.0)
    return AudioClip(samples=mixed.astype(clip.samples.dtype), sample_rate=clip.sample_rate)


def fit_length(clip, n_samples=CLIP_SAMPLES):
    """Zero-pad short clips at the tail; center-crop long ones."""
    cur = len(clip.samples)
    if cur == n_samples:
        return clip
    if cur < n_samples:
        out = np.zeros(n_samples, dtype=clip.samples.dtype)
        out[:cur] = clip.samples
    else:
        start = (cur - n_samples) // 2
        out = clip.samples[start : start + n_samples].copy()
    return AudioClip(samples=out, sample_rate=clip.sample_rate)


def speaker_token(filename):
    """Speaker identity embedded in a filename: the part before '_nohash_', else the stem."""
    stem = os.path.splitext(os.path.basename(str(filename)))[0]
    if not stem:
        raise ContractError(f"cannot extract a speaker token from {filename!r}")
    return stem.split("_nohash_")[0]


def assign_split(filename, train_pct=80, val_pct=10):
    """Deterministic split from the SHA-1 of the speaker token.

    bucket = int(last 8 hex digits of SHA-1(token)) mod 100; buckets below
    train_pct go to train, below train_pct + val_pct to validation, the
    rest to test.  Files sharing a speaker always share a split.
    """
    token = speaker_token(filename)
    digest = hashlib.sha1(token.encode("utf-8")).hexdigest()
    bucket = int(digest[-8:], 16) % 100
    if bucket < train_pct:
        return "train"
    if bucket < train_pct + val_pct:
        return "validation"
    return "test"


def _wav_files(directory):
    return sorted(
        os.path.join(directory, name)
        for name in os.listdir(directory)
        if name.lower().endswith(".wav")
    )


def build_manifest(root_dir, keywords=KEYWORDS, noise_vol_max=0.1, seed=0):
    """Scan a speech-commands style tree into a DatasetManifest.

    Target keywords become their own labels; every other word directory is
    pooled into "unknown" and downsampled to the mean per-keyword file
    count; the same count of "silence" entries is synthesized as random 1 s
    crops of the background noise clips, written under ``_silence_``.
    Deterministic for a fixed (root, keywords, seed).
    """
    root_dir = str(root_dir)
    if not os.path.isdir(root_dir):
        raise DataError(f"dataset root {root_dir} is not a directory")
    subdirs = sorted(
        d for d in os.listdir(root_dir)
        if os.path.isdir(os.path.join(root_dir, d)) and d not in (NOISE_DIRNAME, SILENCE_DIRNAME)
    )
    missing = [k for k in keywords if k not in subdirs]
    if missing:
        raise DataError(f"dataset root {root_dir} is missing keyword directories: {', '.join(missing)}")

    label_names = list(keywords) + [UNKNOWN_LABEL, SILENCE_LABEL]
    labels = {name: i for i, name in enumerate(label_names)}
    rng = np.random.default_rng(seed)
    entries = []

    keyword_counts = []
    for word in keywords:
        files = _wav_files(os.path.join(root_dir, word))
        keyword_counts.append(len(files))
        entries.extend(ManifestEntry(f, labels[word], assign_split(f)) for f in files)
    if not any(keyword_counts):
        raise DataError(f"no keyword WAV files found under {root_dir}")
    per_class = int(round(sum(keyword_counts) / len(keyword_counts)))

    unknown_pool = []
    for word in subdirs:
        if word in keywords:
            continue
        unknown_pool.extend(_wav_files(os.path.join(root_dir, word)))
    if unknown_pool:
        take = min(per_class, len(unknown_pool))
        picked = sorted(rng.choice(len(unknown_pool), size=take, replace=False).tolist())
        for i in picked:
            f = unknown_pool[i]
            entries.append(ManifestEntry(f, labels[UNKNOWN_LABEL], assign_split(f)))

    noise_dir = os.path.join(root_dir, NOISE_DIRNAME)
    noise_files = _wav_files(noise_dir) if os.path.isdir(noise_dir) else []
    if noise_files:
        entries.extend(_synthesize_silence(root_dir, noise_files, per_class, noise_vol_max, rng, labels))

    entries.sort(key=lambda e: e.path)
    return DatasetManifest(label_names=label_names, entries=entries)


def _synthesize_silence(root_dir, noise_files, count, vol_max, rng, labels):
    silence_dir = os.path.join(root_dir, SILENCE_DIRNAME)
    os.makedirs(silence_dir, exist_ok=True)
    entries = []
    for i in range(count):
        src = read_wav(noise_files[int(rng.integers(0, len(noise_files)))])
        base = fit_length(src) if len(src.samples) <= CLIP_SAMPLES else None
        if base is None:
            start = int(rng.integers(0, len(src.samples) - CLIP_SAMPLES + 1))
            base = AudioClip(src.samples[start : start + CLIP_SAMPLES], src.sample_rate)
        volume = float(rng.uniform(0.0, vol_max))
        crop = AudioClip(np.clip(base.samples * volume, -1.0, 1.0), base.sample_rate)
        path = os.path.join(silence_dir, f"silence_{i:04d}.wav")
        write_wav(path, crop)
        # index-partitioned splits keep the 80/10/10 proportions exact even
        # for a handful of files (there is no speaker to hash)
        frac = i / count
        split = "train" if frac < 0.8 else ("validation" if frac < 0.9 else "test")
        entries.append(ManifestEntry(path, labels[SILENCE_LABEL], split))
    return entries


def load_noise_clips(root_dir):
    """Background noise clips for augmentation, empty list when absent."""
    noise_dir = os.path.join(str(root_dir), NOISE_DIRNAME)
    if not os.path.isdir(noise_dir):
        return []
    return [read_wav(f) for f in _wav_files(noise_dir)]


def augment(clip, cfg, noise_clips, rng):
    """Training-time augmentation: random timeshift, then optional noise mix."""
    shift = float(rng.uniform(-cfg.shift_ms, cfg.shift_ms))
    out = time_shift(clip, shift)
    if noise_clips and cfg.noise_prob > 0 and rng.random() < cfg.noise_prob:
        usable = [nc for nc in noise_clips if len(nc.samples) >= len(out.samples)]
        if usable:
            noise = usable[int(rng.integers(0, len(usable)))]
            out = mix_noise(out, noise, float(rng.uniform(0.0, cfg.noise_vol_max)), rng)
    return out
