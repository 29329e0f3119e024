"""MFCC front-end: 1 s of 16 kHz audio -> 101x40 coefficient matrix.

Pipeline: reflect-pad by fft_size/2, Hann-windowed frames every 10 ms,
magnitude-squared FFT, Slaney-style mel filterbank, floored natural log,
orthonormal DCT-II over the mel axis.  The filterbank, window, and DCT
matrix are cached per config and shared read-only.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ContractError

# Slaney mel scale: linear 3f/200 below the 1 kHz break, log above.
_MEL_BREAK_HZ = 1000.0
_MEL_BREAK = 15.0
_MEL_LOGSTEP = np.log(6.4) / 27.0


@dataclass(frozen=True)
class MfccConfig:
    sample_rate: int = 16000
    win_length: int = 480      # 30 ms
    hop: int = 160             # 10 ms
    fft_size: int = 512
    n_mels: int = 40
    n_mfcc: int = 40
    fmin: float = 0.0
    fmax: float = 8000.0
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.n_mfcc > self.n_mels:
            raise ConfigError(f"n_mfcc ({self.n_mfcc}) must not exceed n_mels ({self.n_mels})")
        if self.win_length > self.fft_size:
            raise ConfigError(f"win_length ({self.win_length}) must not exceed fft_size ({self.fft_size})")
        if self.fmax > self.sample_rate / 2:
            raise ConfigError(f"fmax ({self.fmax}) above Nyquist ({self.sample_rate / 2})")

    @property
    def n_frames(self):
        return 1 + self.sample_rate // self.hop

    def to_dict(self):
        return {
            "sample_rate": self.sample_rate,
            "win_length": self.win_length,
            "hop": self.hop,
            "fft_size": self.fft_size,
            "n_mels": self.n_mels,
            "n_mfcc": self.n_mfcc,
            "fmin": self.fmin,
            "fmax": self.fmax,
            "log_floor": self.log_floor,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def hz_to_mel(f):
    """Slaney mel scale; raises on negative frequency."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ContractError("frequency must be >= 0")
    mel = 3.0 * f / 200.0
    above = f >= _MEL_BREAK_HZ
    if np.any(above):
        mel = np.where(above, _MEL_BREAK + np.log(np.maximum(f, _MEL_BREAK_HZ) / _MEL_BREAK_HZ) / _MEL_LOGSTEP, mel)
    return mel if mel.ndim else float(mel)


def mel_to_hz(m):
    """Exact inverse of hz_to_mel."""
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ContractError("mel value must be >= 0")
    f = 200.0 * m / 3.0
    above = m >= _MEL_BREAK
    if np.any(above):
        f = np.where(above, _MEL_BREAK_HZ * np.exp(_MEL_LOGSTEP * (np.maximum(m, _MEL_BREAK) - _MEL_BREAK)), f)
    return f if f.ndim else float(f)


@lru_cache(maxsize=8)
def mel_filterbank(cfg: MfccConfig):
    """Triangular mel filters, (n_mels, fft_size/2 + 1), area-normalized."""
    n_bins = cfg.fft_size // 2 + 1
    bin_hz = np.arange(n_bins) * cfg.sample_rate / cfg.fft_size
    mel_pts = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    hz_pts = np.array([mel_to_hz(m) for m in mel_pts])
    fb = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        lo, center, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (bin_hz - lo) / (center - lo)
        down = (hi - bin_hz) / (hi - center)
        tri = np.maximum(0.0, np.minimum(up, down))
        if not np.any(tri > 0):
            raise ConfigError(
                f"mel filter {m} has empty support; n_mels={cfg.n_mels} too large for fft_size={cfg.fft_size}"
            )
        fb[m] = tri * (2.0 / (hi - lo))
    return fb


@lru_cache(maxsize=8)
def _window(cfg: MfccConfig):
    # periodic Hann of win_length, zero-padded symmetrically to fft_size
    n = np.arange(cfg.win_length)
    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / cfg.win_length)
    pad = (cfg.fft_size - cfg.win_length) // 2
    out = np.zeros(cfg.fft_size)
    out[pad : pad + cfg.win_length] = hann
    return out


@lru_cache(maxsize=8)
def dct_matrix(n: int):
    """Orthonormal DCT-II matrix, (n, n); row k dotted with x gives coefficient k."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    mat[0] /= np.sqrt(2.0)
    return mat


def log_mel_energies(clip, cfg=MfccConfig()):
    """Floored log mel energies, (n_frames, n_mels)."""
    if clip.sample_rate != cfg.sample_rate:
        raise ContractError(f"clip rate {clip.sample_rate} != config rate {cfg.sample_rate}")
    if len(clip.samples) != cfg.sample_rate:
        raise ContractError(f"expected a 1 s clip ({cfg.sample_rate} samples), got {len(clip.samples)}")
    x = np.asarray(clip.samples, dtype=np.float64)
    half = cfg.fft_size // 2
    padded = np.pad(x, half, mode="reflect")
    starts = np.arange(cfg.n_frames) * cfg.hop
    frames = np.stack([padded[s : s + cfg.fft_size] for s in starts])
    spectrum = np.abs(np.fft.rfft(frames * _window(cfg), axis=1)) ** 2
    energies = spectrum @ mel_filterbank(cfg).T
    return np.log(np.maximum(energies, cfg.log_floor))


def compute_mfcc(clip, cfg=MfccConfig()):
    """MFCC matrix (n_frames, n_mfcc); (101, 40) under the default config."""
    logmel = log_mel_energies(clip, cfg)
    return logmel @ dct_matrix(cfg.n_mels)[: cfg.n_mfcc].T


def features_to_csv(feat):
    """Debug dump: one frame per row, coefficients comma-separated."""
    buf = io.StringIO()
    for row in np.asarray(feat):
        buf.write(",".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()
