"""Backend selection for the convolution hot path.

Two interchangeable implementations exist: the compiled extension
(``kwslim._convk``, built from Cython) and a numpy fallback.  The compiled
backend is picked at import when present; ``KWSLIM_BACKEND=numpy|cython``
overrides, and :func:`set_backend` switches at runtime (used by the
backend-comparison benchmark).
"""

import os

import numpy as np

from . import _kernels_np
from .errors import ConfigError, ContractError

_IMPLS = {"numpy": _kernels_np}
try:
    from . import _convk

    _IMPLS["cython"] = _convk
except ImportError:
    _convk = None


def available_backends():
    return tuple(sorted(_IMPLS))


def _default_backend():
    requested = os.environ.get("KWSLIM_BACKEND", "auto")
    if requested == "auto":
        return "cython" if "cython" in _IMPLS else "numpy"
    if requested not in _IMPLS:
        raise ConfigError(
            f"KWSLIM_BACKEND={requested!r} is not available; built backends: {available_backends()}"
        )
    return requested


_active = _default_backend()


def backend_name():
    return _active


def set_backend(name):
    """Switch the kernel backend; returns the previously active name."""
    global _active
    if name not in _IMPLS:
        raise ConfigError(f"unknown backend {name!r}; built backends: {available_backends()}")
    previous = _active
    _active = name
    return previous


def _as_pair(a, b):
    if a.ndim != 4 or b.ndim != 4:
        raise ContractError(f"expected 4D tensors, got shapes {a.shape} / {b.shape}")
    dtype = np.result_type(a, b)
    if dtype not in (np.float32, np.float64):
        dtype = np.float64
    return (np.ascontiguousarray(a, dtype=dtype), np.ascontiguousarray(b, dtype=dtype))


def _check_weight(w):
    if w.shape[2:] != (3, 3):
        raise ContractError(f"expected a (Cout, Cin, 3, 3) weight, got {w.shape}")


def conv2d_forward(x, w):
    x, w = _as_pair(np.asarray(x), np.asarray(w))
    _check_weight(w)
    if x.shape[1] != w.shape[1]:
        raise ContractError(f"input has {x.shape[1]} channels but weight expects {w.shape[1]}")
    return _IMPLS[_active].conv2d_forward(x, w)


def conv2d_input_grad(gy, w):
    gy, w = _as_pair(np.asarray(gy), np.asarray(w))
    _check_weight(w)
    if gy.shape[1] != w.shape[0]:
        raise ContractError(f"output grad has {gy.shape[1]} channels but weight produces {w.shape[0]}")
    return _IMPLS[_active].conv2d_input_grad(gy, w)


def conv2d_weight_grad(x, gy):
    x, gy = _as_pair(np.asarray(x), np.asarray(gy))
    if x.shape[0] != gy.shape[0] or x.shape[2:] != gy.shape[2:]:
        raise ContractError(f"input {x.shape} and output grad {gy.shape} disagree")
    return _IMPLS[_active].conv2d_weight_grad(x, gy)
