"""Pure-numpy convolution and pooling kernels.

Layout conventions (shared with the compiled backend):

* activations: ``(n, h, w, c)`` float64, C-contiguous
* conv kernels: ``(kh, kw, c_in, c_out)`` float64
* convolutions are stride 1 and expect *pre-padded* input, so the output
  spatial size is ``(h - kh + 1, w - kw + 1)``

The convolution is evaluated as kh*kw shifted GEMMs, which keeps memory flat
compared to a full im2col buffer while still running on BLAS.
"""

from __future__ import annotations

import numpy as np

name = "numpy"


def conv2d_forward(xp: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Valid convolution of a pre-padded batch ``xp`` with kernel ``w``."""
    n, hp, wp, _ = xp.shape
    kh, kw, _, c_out = w.shape
    ho, wo = hp - kh + 1, wp - kw + 1
    out = np.empty((n, ho, wo, c_out), dtype=np.float64)
    out[...] = b
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, i:i + ho, j:j + wo, :]
            out += patch @ w[i, j]
    return out


def conv2d_backward_input(gy: np.ndarray, w: np.ndarray,
                          padded_shape: tuple[int, ...]) -> np.ndarray:
    """Gradient w.r.t. the pre-padded input."""
    kh, kw, _, _ = w.shape
    _, ho, wo, _ = gy.shape
    gx = np.zeros(padded_shape, dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            gx[:, i:i + ho, j:j + wo, :] += gy @ w[i, j].T
    return gx


def conv2d_backward_params(xp: np.ndarray, gy: np.ndarray,
                           kh: int, kw: int) -> tuple[np.ndarray, np.ndarray]:
    """Gradients w.r.t. the kernel and bias."""
    n, ho, wo, c_out = gy.shape
    c_in = xp.shape[3]
    gy_flat = gy.reshape(-1, c_out)
    gw = np.empty((kh, kw, c_in, c_out), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, i:i + ho, j:j + wo, :].reshape(-1, c_in)
            gw[i, j] = patch.T @ gy_flat
    gb = gy_flat.sum(axis=0)
    return gw, gb


def maxpool2_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 stride-2 max pooling with floor semantics (odd trailing row/column
    dropped). Returns the pooled output and the within-window argmax used by
    the backward pass; ties go to the first element in window scan order."""
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    xc = x[:, :2 * ho, :2 * wo, :]
    windows = (xc.reshape(n, ho, 2, wo, 2, c)
                 .transpose(0, 1, 3, 5, 2, 4)
                 .reshape(n, ho, wo, c, 4))
    argmax = windows.argmax(axis=4)
    out = np.take_along_axis(windows, argmax[..., None], axis=4)[..., 0]
    return np.ascontiguousarray(out), argmax


def maxpool2_backward(gy: np.ndarray, argmax: np.ndarray,
                      input_shape: tuple[int, ...]) -> np.ndarray:
    n, ho, wo, c = gy.shape
    flat = np.zeros((n, ho, wo, c, 4), dtype=np.float64)
    np.put_along_axis(flat, argmax[..., None], gy[..., None], axis=4)
    gx = np.zeros(input_shape, dtype=np.float64)
    gx[:, :2 * ho, :2 * wo, :] = (flat.reshape(n, ho, wo, c, 2, 2)
                                      .transpose(0, 1, 4, 2, 5, 3)
                                      .reshape(n, 2 * ho, 2 * wo, c))
    return gx
