# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled 3x3 convolution kernels (stride 1, pad 1, no bias).

Direct-loop implementation with the innermost loop over the contiguous
width axis so the C compiler can vectorize it.  Border taps are handled
by clipping the loop bounds instead of padding, so no temporaries are
allocated on the hot path.
"""

import numpy as np

cimport cython

ctypedef fused real:
    float
    double


def conv2d_forward(real[:, :, :, ::1] x, real[:, :, :, ::1] w):
    cdef Py_ssize_t N = x.shape[0], Ci = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t Co = w.shape[0]
    if real is float:
        y_arr = np.zeros((N, Co, H, W), dtype=np.float32)
    else:
        y_arr = np.zeros((N, Co, H, W), dtype=np.float64)
    cdef real[:, :, :, ::1] y = y_arr
    cdef Py_ssize_t n, co, ci, kh, kw, h, i, h0, h1, w0, w1
    cdef real wv
    with nogil:
        for n in range(N):
            for co in range(Co):
                for ci in range(Ci):
                    for kh in range(3):
                        h0 = 1 - kh if kh == 0 else 0
                        h1 = H if kh < 2 else H - 1
                        for kw in range(3):
                            wv = w[co, ci, kh, kw]
                            if wv == 0:
                                continue
                            w0 = 1 - kw if kw == 0 else 0
                            w1 = W if kw < 2 else W - 1
                            for h in range(h0, h1):
                                for i in range(w0, w1):
                                    y[n, co, h, i] = y[n, co, h, i] + wv * x[n, ci, h + kh - 1, i + kw - 1]
    return y_arr


def conv2d_input_grad(real[:, :, :, ::1] gy, real[:, :, :, ::1] w):
    cdef Py_ssize_t N = gy.shape[0], Co = gy.shape[1], H = gy.shape[2], W = gy.shape[3]
    cdef Py_ssize_t Ci = w.shape[1]
    if real is float:
        gx_arr = np.zeros((N, Ci, H, W), dtype=np.float32)
    else:
        gx_arr = np.zeros((N, Ci, H, W), dtype=np.float64)
    cdef real[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t n, co, ci, kh, kw, p, q, p0, p1, q0, q1
    cdef real wv
    # gx[p, q] += w[co, ci, kh, kw] * gy[p + 1 - kh, q + 1 - kw]
    with nogil:
        for n in range(N):
            for ci in range(Ci):
                for co in range(Co):
                    for kh in range(3):
                        p0 = kh - 1 if kh == 2 else 0
                        p1 = H if kh > 0 else H - 1
                        for kw in range(3):
                            wv = w[co, ci, kh, kw]
                            if wv == 0:
                                continue
                            q0 = kw - 1 if kw == 2 else 0
                            q1 = W if kw > 0 else W - 1
                            for p in range(p0, p1):
                                for q in range(q0, q1):
                                    gx[n, ci, p, q] = gx[n, ci, p, q] + wv * gy[n, co, p + 1 - kh, q + 1 - kw]
    return gx_arr


def conv2d_weight_grad(real[:, :, :, ::1] x, real[:, :, :, ::1] gy):
    cdef Py_ssize_t N = x.shape[0], Ci = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t Co = gy.shape[1]
    if real is float:
        gw_arr = np.zeros((Co, Ci, 3, 3), dtype=np.float32)
    else:
        gw_arr = np.zeros((Co, Ci, 3, 3), dtype=np.float64)
    cdef real[:, :, :, ::1] gw = gw_arr
    cdef Py_ssize_t n, co, ci, kh, kw, h, i, h0, h1, w0, w1
    cdef double acc
    with nogil:
        for co in range(Co):
            for ci in range(Ci):
                for kh in range(3):
                    h0 = 1 - kh if kh == 0 else 0
                    h1 = H if kh < 2 else H - 1
                    for kw in range(3):
                        w0 = 1 - kw if kw == 0 else 0
                        w1 = W if kw < 2 else W - 1
                        acc = 0.0
                        for n in range(N):
                            for h in range(h0, h1):
                                for i in range(w0, w1):
                                    acc += (<double> gy[n, co, h, i]) * (<double> x[n, ci, h + kh - 1, i + kw - 1])
                        gw[co, ci, kh, kw] = <real> acc
    return gw_arr
