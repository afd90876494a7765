"""Declarative network architecture: layer specs, shape chaining, parameter
counting, and the two stock architectures (full-size and small test-scale).

Conventions: activations are (h, w, c) row-major; convolutions are SAME
padding, stride 1; max pooling is 2x2 stride 2 with floor semantics, so five
pooling stages map side 300 to 9.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

CONV2D = "conv2d"
MAXPOOL2 = "maxpool2"
BATCHNORM = "batchnorm"
DROPOUT = "dropout"
FLATTEN = "flatten"
DENSE = "dense"

_KINDS = (CONV2D, MAXPOOL2, BATCHNORM, DROPOUT, FLATTEN, DENSE)
_ACTIVATIONS = ("relu", "sigmoid", "none")


@dataclass(frozen=True)
class LayerSpec:
    """One layer. `filters` is the width of conv/dense layers, `kernel` the
    (odd, square) conv kernel side, `rate` the dropout rate."""

    kind: str
    filters: int = 0
    kernel: int = 0
    activation: str = "none"
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.kind == CONV2D:
            if self.filters <= 0:
                raise ValueError("conv2d needs a positive filter count")
            if self.kernel <= 0 or self.kernel % 2 == 0:
                raise ValueError("conv2d kernel must be a positive odd integer")
        elif self.kernel:
            raise ValueError(f"{self.kind} does not take a kernel size")
        if self.kind == DENSE and self.filters <= 0:
            raise ValueError("dense needs a positive width")
        if self.kind == DROPOUT:
            if not 0.0 <= self.rate < 1.0:
                raise ValueError("dropout rate must be in [0, 1)")
        elif self.rate:
            raise ValueError(f"{self.kind} does not take a dropout rate")
        if self.activation != "none" and self.kind not in (CONV2D, DENSE):
            raise ValueError(f"{self.kind} does not take an activation")


def conv2d(filters: int, kernel: int, activation: str = "relu") -> LayerSpec:
    return LayerSpec(CONV2D, filters=filters, kernel=kernel, activation=activation)


def maxpool2() -> LayerSpec:
    return LayerSpec(MAXPOOL2)


def batchnorm() -> LayerSpec:
    return LayerSpec(BATCHNORM)


def dropout(rate: float) -> LayerSpec:
    return LayerSpec(DROPOUT, rate=rate)


def flatten() -> LayerSpec:
    return LayerSpec(FLATTEN)


def dense(width: int, activation: str = "relu") -> LayerSpec:
    return LayerSpec(DENSE, filters=width, activation=activation)


@dataclass(frozen=True)
class NetworkSpec:
    """An ordered layer stack with a fixed input shape.

    Construction validates the whole chain: shapes must stay positive,
    exactly one flatten must be present, only dense/dropout may follow it,
    and the final layer must be dense(1, sigmoid) so the network emits a
    single score in [0, 1]. Sigmoid is rejected anywhere else.
    """

    input_dims: tuple[int, int, int]
    layers: tuple[LayerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "input_dims", tuple(self.input_dims))
        object.__setattr__(self, "layers", tuple(self.layers))
        h, w, c = self.input_dims
        if h <= 0 or w <= 0 or c <= 0:
            raise ValueError(f"input dims must be positive, got {self.input_dims}")
        if not self.layers:
            raise ValueError("network needs at least one layer")
        chain = self.shape_chain()  # raises on inconsistent shapes
        flat_at = [i for i, l in enumerate(self.layers) if l.kind == FLATTEN]
        if len(flat_at) != 1:
            raise ValueError(f"expected exactly one flatten layer, got {len(flat_at)}")
        for i, layer in enumerate(self.layers[flat_at[0] + 1:], flat_at[0] + 1):
            if layer.kind not in (DENSE, DROPOUT):
                raise ValueError(f"layer {i}: only dense/dropout may follow flatten")
        last = self.layers[-1]
        if last.kind != DENSE or last.filters != 1 or last.activation != "sigmoid":
            raise ValueError("final layer must be dense(1) with sigmoid activation")
        for i, layer in enumerate(self.layers[:-1]):
            if layer.activation == "sigmoid":
                raise ValueError(f"layer {i}: sigmoid is only allowed on the final dense")
        del chain

    def shape_chain(self) -> list[tuple[int, ...]]:
        """Output dims after each layer; spatial dims are (h, w, c) tuples,
        post-flatten dims are 1-tuples."""
        dims: tuple[int, ...] = self.input_dims
        out = []
        for i, layer in enumerate(self.layers):
            dims = _layer_output(layer, dims, i)
            out.append(dims)
        return out

    def to_json(self) -> str:
        payload = {
            "input_dims": list(self.input_dims),
            "layers": [_layer_payload(l) for l in self.layers],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "NetworkSpec":
        payload = json.loads(text)
        layers = tuple(LayerSpec(**entry) for entry in payload["layers"])
        return NetworkSpec(tuple(payload["input_dims"]), layers)


def _layer_payload(layer: LayerSpec) -> dict:
    out = {"kind": layer.kind}
    if layer.filters:
        out["filters"] = layer.filters
    if layer.kernel:
        out["kernel"] = layer.kernel
    if layer.activation != "none":
        out["activation"] = layer.activation
    if layer.kind == DROPOUT:
        out["rate"] = layer.rate
    return out


def _layer_output(layer: LayerSpec, dims: tuple[int, ...], index: int) -> tuple[int, ...]:
    spatial = len(dims) == 3
    if layer.kind == CONV2D:
        if not spatial:
            raise ValueError(f"layer {index}: conv2d after flatten")
        h, w, _ = dims
        return (h, w, layer.filters)
    if layer.kind == MAXPOOL2:
        if not spatial:
            raise ValueError(f"layer {index}: maxpool2 after flatten")
        h, w, c = dims
        if h < 2 or w < 2:
            raise ValueError(f"layer {index}: cannot pool a {h}x{w} map")
        return (h // 2, w // 2, c)
    if layer.kind == BATCHNORM:
        if not spatial:
            raise ValueError(f"layer {index}: batchnorm after flatten")
        return dims
    if layer.kind == DROPOUT:
        return dims
    if layer.kind == FLATTEN:
        if not spatial:
            raise ValueError(f"layer {index}: flatten after flatten")
        h, w, c = dims
        return (h * w * c,)
    if layer.kind == DENSE:
        if spatial:
            raise ValueError(f"layer {index}: dense before flatten")
        return (layer.filters,)
    raise AssertionError(layer.kind)


def count_params(spec: NetworkSpec) -> tuple[int, list[int]]:
    """Total and per-layer parameter counts.

    conv: (k*k*c_in + 1) * filters; dense: (in + 1) * out;
    batchnorm: 4 per channel (gamma, beta and the two moving statistics);
    pool/dropout/flatten: 0.
    """
    per_layer = []
    dims: tuple[int, ...] = spec.input_dims
    for i, layer in enumerate(spec.layers):
        if layer.kind == CONV2D:
            per_layer.append((layer.kernel * layer.kernel * dims[2] + 1) * layer.filters)
        elif layer.kind == DENSE:
            per_layer.append((dims[0] + 1) * layer.filters)
        elif layer.kind == BATCHNORM:
            per_layer.append(4 * dims[2])
        else:
            per_layer.append(0)
        dims = _layer_output(layer, dims, i)
    return sum(per_layer), per_layer


def spec_hash(spec: NetworkSpec) -> bytes:
    """8-byte architecture checksum embedded in weight files."""
    return hashlib.sha256(spec.to_json().encode()).digest()[:8]


def standard_network(channels: int, input_side: int = 300) -> NetworkSpec:
    """The full-size architecture: five conv/pool/batchnorm blocks
    (32@5x5, then 64/128/256/64 @3x3), dropout, and a 128/64/1 dense head.
    `channels` is 3 for the color model and 1 for the grayscale one."""
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    if input_side < 32:
        raise ValueError("input side must be >= 32 so five pools keep a >=1x1 map")
    blocks = []
    for filters, kernel in ((32, 5), (64, 3), (128, 3), (256, 3), (64, 3)):
        blocks += [conv2d(filters, kernel), maxpool2(), batchnorm()]
    head = [
        dropout(0.2),
        flatten(),
        dense(128),
        dropout(0.2),
        dense(64),
        dense(1, activation="sigmoid"),
    ]
    return NetworkSpec((input_side, input_side, channels), tuple(blocks + head))


def small_network(channels: int, input_side: int = 64) -> NetworkSpec:
    """Reduced three-block variant of the same design, sized so that training
    on synthetic data takes seconds rather than minutes."""
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    if input_side < 8:
        raise ValueError("input side must be >= 8")
    layers = [
        conv2d(8, 5), maxpool2(), batchnorm(),
        conv2d(16, 3), maxpool2(), batchnorm(),
        conv2d(16, 3), maxpool2(), batchnorm(),
        dropout(0.2),
        flatten(),
        dense(32),
        dropout(0.2),
        dense(16),
        dense(1, activation="sigmoid"),
    ]
    return NetworkSpec((input_side, input_side, channels), tuple(layers))
