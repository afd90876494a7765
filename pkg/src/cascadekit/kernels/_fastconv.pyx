# Compiled convolution and pooling kernels. Same layout contract as the
# numpy backend: NHWC float64 activations, pre-padded conv input, stride 1.
# Conv kernels arrive here transposed to (c_out, kh, kw, c_in) so the hot
# inner loop runs over contiguous memory in both operands.

import numpy as np

cimport numpy as cnp

cnp.import_array()

name = "compiled"


def conv2d_forward_t(double[:, :, :, ::1] xp, double[:, :, :, ::1] wt,
                     double[::1] b):
    cdef Py_ssize_t n = xp.shape[0], hp = xp.shape[1], wp = xp.shape[2]
    cdef Py_ssize_t cin = xp.shape[3]
    cdef Py_ssize_t cout = wt.shape[0], kh = wt.shape[1], kw = wt.shape[2]
    cdef Py_ssize_t ho = hp - kh + 1, wo = wp - kw + 1
    out_arr = np.empty((n, ho, wo, cout), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t s, i, j, co, ki, kj, ci
    cdef double acc
    for s in range(n):
        for i in range(ho):
            for j in range(wo):
                for co in range(cout):
                    acc = b[co]
                    for ki in range(kh):
                        for kj in range(kw):
                            for ci in range(cin):
                                acc += xp[s, i + ki, j + kj, ci] * wt[co, ki, kj, ci]
                    out[s, i, j, co] = acc
    return out_arr


def conv2d_backward_input_t(double[:, :, :, ::1] gy, double[:, :, :, ::1] wt,
                            Py_ssize_t hp, Py_ssize_t wp):
    cdef Py_ssize_t n = gy.shape[0], ho = gy.shape[1], wo = gy.shape[2]
    cdef Py_ssize_t cout = gy.shape[3]
    cdef Py_ssize_t kh = wt.shape[1], kw = wt.shape[2], cin = wt.shape[3]
    gx_arr = np.zeros((n, hp, wp, cin), dtype=np.float64)
    cdef double[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t s, i, j, co, ki, kj, ci
    cdef double g
    for s in range(n):
        for i in range(ho):
            for j in range(wo):
                for co in range(cout):
                    g = gy[s, i, j, co]
                    if g == 0.0:
                        continue
                    for ki in range(kh):
                        for kj in range(kw):
                            for ci in range(cin):
                                gx[s, i + ki, j + kj, ci] += g * wt[co, ki, kj, ci]
    return gx_arr


def conv2d_backward_params_t(double[:, :, :, ::1] xp, double[:, :, :, ::1] gy,
                             Py_ssize_t kh, Py_ssize_t kw):
    cdef Py_ssize_t n = xp.shape[0], cin = xp.shape[3]
    cdef Py_ssize_t ho = gy.shape[1], wo = gy.shape[2], cout = gy.shape[3]
    gw_arr = np.zeros((cout, kh, kw, cin), dtype=np.float64)
    gb_arr = np.zeros(cout, dtype=np.float64)
    cdef double[:, :, :, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr
    cdef Py_ssize_t s, i, j, co, ki, kj, ci
    cdef double g
    for s in range(n):
        for i in range(ho):
            for j in range(wo):
                for co in range(cout):
                    g = gy[s, i, j, co]
                    gb[co] += g
                    if g == 0.0:
                        continue
                    for ki in range(kh):
                        for kj in range(kw):
                            for ci in range(cin):
                                gw[co, ki, kj, ci] += g * xp[s, i + ki, j + kj, ci]
    return gw_arr, gb_arr


def maxpool2_forward(double[:, :, :, ::1] x):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t ho = h // 2, wo = w // 2
    out_arr = np.empty((n, ho, wo, c), dtype=np.float64)
    am_arr = np.empty((n, ho, wo, c), dtype=np.int64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef cnp.int64_t[:, :, :, ::1] am = am_arr
    cdef Py_ssize_t s, i, j, ch, wi, wj, k
    cdef double best, v
    cdef Py_ssize_t besti
    for s in range(n):
        for i in range(ho):
            for j in range(wo):
                for ch in range(c):
                    best = x[s, 2 * i, 2 * j, ch]
                    besti = 0
                    k = 0
                    for wi in range(2):
                        for wj in range(2):
                            v = x[s, 2 * i + wi, 2 * j + wj, ch]
                            if v > best:
                                best = v
                                besti = k
                            k += 1
                    out[s, i, j, ch] = best
                    am[s, i, j, ch] = besti
    return out_arr, am_arr


def maxpool2_backward(double[:, :, :, ::1] gy, cnp.int64_t[:, :, :, ::1] am,
                      Py_ssize_t h, Py_ssize_t w):
    cdef Py_ssize_t n = gy.shape[0], ho = gy.shape[1], wo = gy.shape[2]
    cdef Py_ssize_t c = gy.shape[3]
    gx_arr = np.zeros((n, h, w, c), dtype=np.float64)
    cdef double[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t s, i, j, ch, k
    for s in range(n):
        for i in range(ho):
            for j in range(wo):
                for ch in range(c):
                    k = am[s, i, j, ch]
                    gx[s, 2 * i + (k >> 1), 2 * j + (k & 1), ch] = gy[s, i, j, ch]
    return gx_arr
