"""Runtime network: batched NHWC forward/backward over the layer stack.

Compute is float64 throughout; parameters are upcast once from the float32
bundle at construction. Inference (`train=False`) is deterministic: dropout
is the identity and batchnorm uses its moving statistics.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import ConfigMismatchError, NumericError
from . import spec as nnspec
from .spec import NetworkSpec
from .weights import WeightBundle, init_bundle, spec_hash, validate_bundle

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy of sigmoid(logits), computed stably."""
    losses = np.maximum(logits, 0.0) - logits * labels + np.log1p(np.exp(-np.abs(logits)))
    return float(losses.mean())


class _Relu:
    """Mixin-style helper: applies the layer's activation and its gradient."""

    activation = "none"

    def _activate(self, z):
        if self.activation == "relu":
            self._act_mask = z > 0
            return np.where(self._act_mask, z, 0.0)
        if self.activation == "sigmoid":
            return sigmoid(z)
        return z

    def _activation_grad(self, gy, z):
        if self.activation == "relu":
            return np.where(self._act_mask, gy, 0.0)
        if self.activation == "sigmoid":
            s = sigmoid(z)
            return gy * s * (1.0 - s)
        return gy


class _Conv(_Relu):
    def __init__(self, layer: nnspec.LayerSpec, params):
        self.kernel = params["kernel"].astype(np.float64)
        self.bias = params["bias"].astype(np.float64)
        self.pad = layer.kernel // 2
        self.activation = layer.activation
        self.grads = {}

    def params(self):
        return {"kernel": self.kernel, "bias": self.bias}

    def forward(self, x, train, rng):
        p = self.pad
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        z = kernels.conv2d_forward(xp, self.kernel, self.bias)
        if train:
            self._xp = xp
            self._z = z
        return self._activate(z)

    def backward(self, gy):
        gz = self._activation_grad(gy, self._z)
        kh = self.kernel.shape[0]
        gw, gb = kernels.conv2d_backward_params(self._xp, gz, kh, kh)
        self.grads = {"kernel": gw, "bias": gb}
        gxp = kernels.conv2d_backward_input(gz, self.kernel, self._xp.shape)
        p = self.pad
        if p == 0:
            return gxp
        return gxp[:, p:-p, p:-p, :]


class _MaxPool:
    def __init__(self):
        self.grads = {}

    def params(self):
        return {}

    def forward(self, x, train, rng):
        out, argmax = kernels.maxpool2_forward(x)
        if train:
            self._argmax = argmax
            self._in_shape = x.shape
        return out

    def backward(self, gy):
        return kernels.maxpool2_backward(gy, self._argmax, self._in_shape)


class _BatchNorm:
    def __init__(self, params):
        self.gamma = params["gamma"].astype(np.float64)
        self.beta = params["beta"].astype(np.float64)
        self.moving_mean = params["mean"].astype(np.float64)
        self.moving_var = params["var"].astype(np.float64)
        self.grads = {}

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def forward(self, x, train, rng):
        if not train:
            ivar = 1.0 / np.sqrt(self.moving_var + BN_EPSILON)
            return self.gamma * (x - self.moving_mean) * ivar + self.beta
        mean = x.mean(axis=(0, 1, 2))
        var = x.var(axis=(0, 1, 2))
        self._ivar = 1.0 / np.sqrt(var + BN_EPSILON)
        self._xhat = (x - mean) * self._ivar
        self.moving_mean = BN_MOMENTUM * self.moving_mean + (1 - BN_MOMENTUM) * mean
        self.moving_var = BN_MOMENTUM * self.moving_var + (1 - BN_MOMENTUM) * var
        return self.gamma * self._xhat + self.beta

    def backward(self, gy):
        m = gy.shape[0] * gy.shape[1] * gy.shape[2]
        self.grads = {
            "gamma": (gy * self._xhat).sum(axis=(0, 1, 2)),
            "beta": gy.sum(axis=(0, 1, 2)),
        }
        dxhat = gy * self.gamma
        s1 = dxhat.sum(axis=(0, 1, 2))
        s2 = (dxhat * self._xhat).sum(axis=(0, 1, 2))
        return (self._ivar / m) * (m * dxhat - s1 - self._xhat * s2)


class _Dropout:
    def __init__(self, rate: float, enabled: bool):
        self.rate = rate
        self.enabled = enabled
        self.grads = {}

    def params(self):
        return {}

    def forward(self, x, train, rng):
        if not train or not self.enabled or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, gy):
        if self._mask is None:
            return gy
        return gy * self._mask


class _Flatten:
    def __init__(self):
        self.grads = {}

    def params(self):
        return {}

    def forward(self, x, train, rng):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gy):
        return gy.reshape(self._shape)


class _Dense(_Relu):
    def __init__(self, layer: nnspec.LayerSpec, params):
        self.kernel = params["kernel"].astype(np.float64)
        self.bias = params["bias"].astype(np.float64)
        self.activation = layer.activation
        self.grads = {}

    def params(self):
        return {"kernel": self.kernel, "bias": self.bias}

    def forward(self, x, train, rng):
        z = x @ self.kernel + self.bias
        if train:
            self._x = x
            self._z = z
        self.last_logits = z
        return self._activate(z)

    def backward(self, gy, wrt_logits=False):
        gz = gy if wrt_logits else self._activation_grad(gy, self._z)
        self.grads = {"kernel": self._x.T @ gz, "bias": gz.sum(axis=0)}
        return gz @ self.kernel.T


class Network:
    """A (spec, weights) pair compiled to runtime layers.

    Thread-safety: inference is read-only and safe to share; training methods
    mutate layer state and must stay on a single thread per instance.
    """

    def __init__(self, spec: NetworkSpec, bundle: WeightBundle | None = None,
                 seed: int = 0, dropout_enabled: bool = True):
        if bundle is None:
            bundle = init_bundle(spec, seed)
        validate_bundle(spec, bundle)
        self.spec = spec
        self.layers = []
        for i, layer in enumerate(spec.layers):
            params = bundle.blocks.get(i, {})
            if layer.kind == nnspec.CONV2D:
                self.layers.append(_Conv(layer, params))
            elif layer.kind == nnspec.MAXPOOL2:
                self.layers.append(_MaxPool())
            elif layer.kind == nnspec.BATCHNORM:
                self.layers.append(_BatchNorm(params))
            elif layer.kind == nnspec.DROPOUT:
                self.layers.append(_Dropout(layer.rate, dropout_enabled))
            elif layer.kind == nnspec.FLATTEN:
                self.layers.append(_Flatten())
            else:
                self.layers.append(_Dense(layer, params))

    def forward_batch(self, x: np.ndarray, train: bool = False,
                      rng: np.random.Generator | None = None) -> np.ndarray:
        """Scores in [0, 1], shape (n,). Raises on shape mismatch and on
        non-finite activations (the symptom of corrupted weights)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[1:] != self.spec.input_dims:
            raise ConfigMismatchError(
                f"input dims {x.shape[1:]} do not match network input {self.spec.input_dims}")
        out = x
        for layer in self.layers:
            out = layer.forward(out, train, rng)
        logits = self.layers[-1].last_logits
        if not np.isfinite(logits).all():
            raise NumericError("non-finite activations in forward pass (corrupted weights?)")
        return out[:, 0]

    def score(self, x: np.ndarray) -> float:
        """Inference score of a single (h, w, c) input."""
        return float(self.forward_batch(np.asarray(x)[None, ...])[0])

    def predict_batch(self, x: np.ndarray, chunk: int = 64) -> np.ndarray:
        """Inference scores over a dataset, evaluated in chunks."""
        parts = [self.forward_batch(x[i:i + chunk]) for i in range(0, len(x), chunk)]
        return np.concatenate(parts) if parts else np.empty(0)

    def loss_and_grad(self, x: np.ndarray, y: np.ndarray,
                      rng: np.random.Generator | None = None) -> float:
        """Train-mode forward + full backward; gradients land on the layers."""
        y = np.asarray(y, dtype=np.float64)
        scores = self.forward_batch(x, train=True, rng=rng)
        logits = self.layers[-1].last_logits[:, 0]
        loss = bce_from_logits(logits, y)
        delta = ((scores - y) / len(y))[:, None]
        grad = self.layers[-1].backward(delta, wrt_logits=True)
        for layer in reversed(self.layers[:-1]):
            grad = layer.backward(grad)
        return loss

    def eval_loss(self, x: np.ndarray, y: np.ndarray, chunk: int = 64) -> tuple[float, float]:
        """(mean BCE, accuracy at 0.5) in inference mode."""
        y = np.asarray(y, dtype=np.float64)
        total, hits = 0.0, 0
        for i in range(0, len(x), chunk):
            xs, ys = x[i:i + chunk], y[i:i + chunk]
            scores = self.forward_batch(xs)
            logits = self.layers[-1].last_logits[:, 0]
            total += bce_from_logits(logits, ys) * len(ys)
            hits += int(((scores >= 0.5) == (ys >= 0.5)).sum())
        return total / len(y), hits / len(y)

    def parameter_items(self):
        """(layer_index, name, array) over all trainable parameters."""
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params().items():
                yield i, name, arr

    def to_bundle(self) -> WeightBundle:
        """Float32 snapshot of the current parameters and moving statistics."""
        blocks: dict[int, dict[str, np.ndarray]] = {}
        for i, layer in enumerate(self.layers):
            if isinstance(layer, (_Conv, _Dense)):
                blocks[i] = {"kernel": layer.kernel.astype(np.float32),
                             "bias": layer.bias.astype(np.float32)}
            elif isinstance(layer, _BatchNorm):
                blocks[i] = {"gamma": layer.gamma.astype(np.float32),
                             "beta": layer.beta.astype(np.float32),
                             "mean": layer.moving_mean.astype(np.float32),
                             "var": layer.moving_var.astype(np.float32)}
        return WeightBundle(spec_hash(self.spec), blocks)
