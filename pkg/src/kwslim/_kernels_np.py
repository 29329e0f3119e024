"""Numpy fallback for the 3x3 convolution kernels.

All convolutions in the model family are 3x3, stride 1, zero-padded by one,
bias-free, so the kernels are specialized to that case.  Each kernel
lowers to a single GEMM over im2col columns built from a sliding-window
view of the padded tensor.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _columns(x):
    """(N, C, H, W) -> im2col matrix (C*9, N*H*W) of the 1-padded input."""
    n, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))      # (N, C, H, W, 3, 3)
    return win.transpose(1, 4, 5, 0, 2, 3).reshape(c * 9, n * h * w)


def conv2d_forward(x, w):
    """x: (N, Cin, H, W), w: (Cout, Cin, 3, 3) -> (N, Cout, H, W)."""
    n, c, h, width = x.shape
    co = w.shape[0]
    y = w.reshape(co, c * 9) @ _columns(x)
    return np.ascontiguousarray(y.reshape(co, n, h, width).transpose(1, 0, 2, 3))


def conv2d_input_grad(gy, w):
    """Gradient w.r.t. the conv input: (N, Cout, H, W) x w -> (N, Cin, H, W)."""
    n, co, h, width = gy.shape
    ci = w.shape[1]
    # transposed convolution = correlation with the 180-degree-flipped kernel
    wt = w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(ci, co * 9)
    gx = wt @ _columns(gy)
    return np.ascontiguousarray(gx.reshape(ci, n, h, width).transpose(1, 0, 2, 3))


def conv2d_weight_grad(x, gy):
    """Gradient w.r.t. the conv weight: accumulates over batch and positions."""
    n, co, h, width = gy.shape
    ci = x.shape[1]
    gy_flat = gy.transpose(1, 0, 2, 3).reshape(co, n * h * width)
    return (gy_flat @ _columns(x).T).reshape(co, ci, 3, 3)
