"""Convolution/pooling kernel dispatch.

Two interchangeable backends implement the same operations: a compiled
Cython extension (``_fastconv``) and a pure-numpy fallback. The compiled one
is preferred when importable; ``CASCADEKIT_BACKEND=numpy|compiled`` forces
the choice, and :func:`use_backend` switches it temporarily (tests, the
backend benchmark).

All functions take NHWC float64 arrays; convolution input is pre-padded and
stride 1. Results are deterministic for a fixed backend.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

from . import numpy_backend

try:
    from . import _fastconv
except ImportError:
    _fastconv = None


class _CompiledBackend:
    """Adapts the extension's transposed-kernel entry points to the
    (kh, kw, c_in, c_out) layout used by the rest of the package."""

    name = "compiled"

    @staticmethod
    def conv2d_forward(xp, w, b):
        wt = np.ascontiguousarray(w.transpose(3, 0, 1, 2))
        return _fastconv.conv2d_forward_t(np.ascontiguousarray(xp), wt,
                                          np.ascontiguousarray(b))

    @staticmethod
    def conv2d_backward_input(gy, w, padded_shape):
        wt = np.ascontiguousarray(w.transpose(3, 0, 1, 2))
        return _fastconv.conv2d_backward_input_t(
            np.ascontiguousarray(gy), wt, padded_shape[1], padded_shape[2])

    @staticmethod
    def conv2d_backward_params(xp, gy, kh, kw):
        gwt, gb = _fastconv.conv2d_backward_params_t(
            np.ascontiguousarray(xp), np.ascontiguousarray(gy), kh, kw)
        return np.ascontiguousarray(gwt.transpose(1, 2, 3, 0)), gb

    @staticmethod
    def maxpool2_forward(x):
        return _fastconv.maxpool2_forward(np.ascontiguousarray(x))

    @staticmethod
    def maxpool2_backward(gy, argmax, input_shape):
        return _fastconv.maxpool2_backward(np.ascontiguousarray(gy),
                                           np.ascontiguousarray(argmax),
                                           input_shape[1], input_shape[2])


def available_backends() -> tuple[str, ...]:
    return ("compiled", "numpy") if _fastconv is not None else ("numpy",)


def _resolve(name: str):
    if name == "numpy":
        return numpy_backend
    if name == "compiled":
        if _fastconv is None:
            raise RuntimeError("compiled kernels requested but the extension "
                               "is not built; reinstall or use the numpy backend")
        return _CompiledBackend
    raise ValueError(f"unknown kernel backend {name!r}")


_env = os.environ.get("CASCADEKIT_BACKEND", "").strip().lower()
if _env:
    _active = _resolve(_env)
elif _fastconv is not None:
    _active = _CompiledBackend
else:
    _active = numpy_backend


def active_backend() -> str:
    return _active.name


def set_backend(name: str) -> None:
    global _active
    _active = _resolve(name)


@contextmanager
def use_backend(name: str):
    """Temporarily switch the active backend."""
    global _active
    previous = _active
    _active = _resolve(name)
    try:
        yield
    finally:
        _active = previous


def conv2d_forward(xp, w, b):
    return _active.conv2d_forward(xp, w, b)


def conv2d_backward_input(gy, w, padded_shape):
    return _active.conv2d_backward_input(gy, w, padded_shape)


def conv2d_backward_params(xp, gy, kh, kw):
    return _active.conv2d_backward_params(xp, gy, kh, kw)


def maxpool2_forward(x):
    return _active.maxpool2_forward(x)


def maxpool2_backward(gy, argmax, input_shape):
    return _active.maxpool2_backward(gy, argmax, input_shape)
