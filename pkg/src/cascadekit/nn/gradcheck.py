"""Finite-difference validation of the backward pass.

Runs in train mode (batch statistics) with dropout disabled so the loss is a
deterministic, piecewise-smooth function of the parameters. Central
differences are exact to O(epsilon^2) away from ReLU kinks and pooling ties,
which have measure zero under the randomized weights used here.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from .network import Network, bce_from_logits
from .spec import NetworkSpec, count_params
from .weights import WeightBundle, expected_blocks, spec_hash

# Denominator floor: elementwise |a - f| <= err * max(|a|,|f|,FLOOR) means an
# absolute tolerance of err * FLOOR for near-zero gradients.
REL_FLOOR = 1e-4

MAX_CHECK_PARAMS = 20_000


def random_bundle(spec: NetworkSpec, seed: int = 0) -> WeightBundle:
    """Weights drawn to keep every layer active: nonzero biases, batchnorm
    statistics away from their init fixed point."""
    rng = np.random.default_rng(seed)
    blocks: dict[int, dict[str, np.ndarray]] = {}
    for idx, name, shape in expected_blocks(spec):
        if name == "kernel":
            fan_in = int(np.prod(shape[:-1]))
            arr = rng.normal(0.0, 0.5 / np.sqrt(fan_in), size=shape)
        elif name == "bias":
            arr = rng.uniform(-0.1, 0.1, size=shape)
        elif name == "gamma":
            arr = rng.uniform(0.7, 1.3, size=shape)
        elif name == "var":
            arr = rng.uniform(0.5, 1.5, size=shape)
        else:
            arr = rng.uniform(-0.3, 0.3, size=shape)
        blocks.setdefault(idx, {})[name] = arr.astype(np.float32)
    return WeightBundle(spec_hash(spec), blocks)


def gradient_check(spec: NetworkSpec, x: np.ndarray, epsilon: float = 1e-5,
                   label: float = 1.0, seed: int = 0,
                   bundle: WeightBundle | None = None) -> float:
    """Max relative error between analytic and central-difference gradients
    over all trainable parameters."""
    if not 1e-6 <= epsilon <= 1e-3:
        raise InputError("epsilon must lie in [1e-6, 1e-3]")
    total, _ = count_params(spec)
    if total > MAX_CHECK_PARAMS:
        raise InputError(f"network too large for finite differences ({total} parameters)")

    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[None, ...]
    y = np.full(x.shape[0], float(label))

    if bundle is None:
        bundle = random_bundle(spec, seed)
    net = Network(spec, bundle, dropout_enabled=False)

    net.loss_and_grad(x, y)
    analytic = {(i, name): net.layers[i].grads[name].copy()
                for i, name, _ in net.parameter_items()}

    def loss_at() -> float:
        net.forward_batch(x, train=True)
        return bce_from_logits(net.layers[-1].last_logits[:, 0], y)

    worst = 0.0
    for i, name, arr in list(net.parameter_items()):
        grad = analytic[(i, name)]
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for j in range(flat.size):
            saved = flat[j]
            flat[j] = saved + epsilon
            hi = loss_at()
            flat[j] = saved - epsilon
            lo = loss_at()
            flat[j] = saved
            fd = (hi - lo) / (2.0 * epsilon)
            a = gflat[j]
            err = abs(a - fd) / max(abs(a), abs(fd), REL_FLOOR)
            if err > worst:
                worst = err
    return worst
