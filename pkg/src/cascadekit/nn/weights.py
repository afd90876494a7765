"""Trained-parameter container and its portable binary format.

Layout on disk: magic ``CGW1``, an 8-byte architecture checksum, then one
block per parameter array in a fixed order (layers ascending, block kinds
ascending within a layer). Each block is::

    layer_index: u32 LE | block_kind: u8 | element_count: u64 LE | f32 LE data

Parameters are stored as float32; the in-memory bundle keeps the same dtype
so that save -> load round-trips bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import WeightFormatError
from . import spec as nnspec
from .spec import NetworkSpec, spec_hash

MAGIC = b"CGW1"

BLOCK_KINDS = {
    (nnspec.CONV2D, "kernel"): 1,
    (nnspec.CONV2D, "bias"): 2,
    (nnspec.DENSE, "kernel"): 3,
    (nnspec.DENSE, "bias"): 4,
    (nnspec.BATCHNORM, "gamma"): 5,
    (nnspec.BATCHNORM, "beta"): 6,
    (nnspec.BATCHNORM, "mean"): 7,
    (nnspec.BATCHNORM, "var"): 8,
}

_HEADER = struct.Struct("<IBQ")


@dataclass
class WeightBundle:
    """Per-layer parameter arrays (float32), keyed by layer index then name."""

    spec_hash: bytes
    blocks: dict[int, dict[str, np.ndarray]]

    def __eq__(self, other):
        if not isinstance(other, WeightBundle):
            return NotImplemented
        if self.spec_hash != other.spec_hash:
            return False
        if self.blocks.keys() != other.blocks.keys():
            return False
        for idx, params in self.blocks.items():
            theirs = other.blocks[idx]
            if params.keys() != theirs.keys():
                return False
            for name, arr in params.items():
                if not np.array_equal(arr, theirs[name]):
                    return False
        return True


def expected_blocks(spec: NetworkSpec) -> list[tuple[int, str, tuple[int, ...]]]:
    """(layer_index, block_name, shape) for every parameter array, in the
    canonical serialization order."""
    out = []
    dims = spec.input_dims
    chain = spec.shape_chain()
    for i, layer in enumerate(spec.layers):
        if layer.kind == nnspec.CONV2D:
            out.append((i, "kernel", (layer.kernel, layer.kernel, dims[2], layer.filters)))
            out.append((i, "bias", (layer.filters,)))
        elif layer.kind == nnspec.DENSE:
            out.append((i, "kernel", (dims[0], layer.filters)))
            out.append((i, "bias", (layer.filters,)))
        elif layer.kind == nnspec.BATCHNORM:
            for name in ("gamma", "beta", "mean", "var"):
                out.append((i, name, (dims[2],)))
        dims = chain[i]
    return out


def validate_bundle(spec: NetworkSpec, bundle: WeightBundle) -> None:
    """Check the bundle structurally matches the spec; raises WeightFormatError
    naming the first offending layer."""
    if bundle.spec_hash != spec_hash(spec):
        raise WeightFormatError("architecture checksum does not match the network spec")
    seen = set()
    for idx, name, shape in expected_blocks(spec):
        arr = bundle.blocks.get(idx, {}).get(name)
        if arr is None:
            raise WeightFormatError(f"layer {idx}: missing {name} block")
        if arr.shape != shape:
            raise WeightFormatError(
                f"layer {idx}: {name} shape {arr.shape} does not match expected {shape}")
        if name == "var" and not (arr > 0).all():
            raise WeightFormatError(f"layer {idx}: moving variance must be strictly positive")
        seen.add((idx, name))
    for idx, params in bundle.blocks.items():
        for name in params:
            if (idx, name) not in seen:
                raise WeightFormatError(f"layer {idx}: unexpected {name} block")


def init_bundle(spec: NetworkSpec, seed: int) -> WeightBundle:
    """He-style fan-in uniform init for kernels, zeros for biases, identity
    statistics for batchnorm. Deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    blocks: dict[int, dict[str, np.ndarray]] = {}
    for idx, name, shape in expected_blocks(spec):
        params = blocks.setdefault(idx, {})
        if name == "kernel":
            fan_in = int(np.prod(shape[:-1]))
            limit = np.sqrt(6.0 / fan_in)
            params[name] = rng.uniform(-limit, limit, size=shape).astype(np.float32)
        elif name in ("bias", "beta", "mean"):
            params[name] = np.zeros(shape, dtype=np.float32)
        elif name in ("gamma", "var"):
            params[name] = np.ones(shape, dtype=np.float32)
    return WeightBundle(spec_hash(spec), blocks)


def save_bytes(bundle: WeightBundle) -> bytes:
    parts = [MAGIC, bundle.spec_hash]
    for idx in sorted(bundle.blocks):
        params = bundle.blocks[idx]
        kinds = sorted((_block_code(params, name), name) for name in params)
        for code, name in kinds:
            arr = np.ascontiguousarray(params[name], dtype=np.float32)
            parts.append(_HEADER.pack(idx, code, arr.size))
            parts.append(arr.tobytes())
    return b"".join(parts)


def _block_code(params: dict[str, np.ndarray], name: str) -> int:
    # conv and dense share block names; the kernel rank tells them apart
    if name == "kernel":
        return 1 if params[name].ndim == 4 else 3
    if name == "bias":
        return 2 if params["kernel"].ndim == 4 else 4
    return {"gamma": 5, "beta": 6, "mean": 7, "var": 8}[name]


def load_bytes(data: bytes, spec: NetworkSpec) -> WeightBundle:
    """Parse and validate a weight file against `spec`. Structural mismatches
    are reported with the first offending layer index."""
    if data[:4] != MAGIC:
        raise WeightFormatError("bad magic: not a CGW1 weight file")
    if len(data) < 12:
        raise WeightFormatError("truncated header")
    file_hash = data[4:12]
    offset = 12
    blocks: dict[int, dict[str, np.ndarray]] = {}
    for idx, name, shape in expected_blocks(spec):
        layer_kind = spec.layers[idx].kind
        want_code = BLOCK_KINDS[(layer_kind, name)]
        want_count = int(np.prod(shape))
        if offset + _HEADER.size > len(data):
            raise WeightFormatError(f"layer {idx}: truncated before {name} block")
        got_idx, got_code, got_count = _HEADER.unpack_from(data, offset)
        offset += _HEADER.size
        if got_idx != idx or got_code != want_code:
            raise WeightFormatError(
                f"layer {idx}: expected {name} block, found layer {got_idx} kind {got_code}")
        if got_count != want_count:
            raise WeightFormatError(
                f"layer {idx}: {name} has {got_count} elements, expected {want_count}")
        end = offset + 4 * want_count
        if end > len(data):
            raise WeightFormatError(f"layer {idx}: truncated {name} data")
        arr = np.frombuffer(data[offset:end], dtype="<f4").reshape(shape).copy()
        offset = end
        blocks.setdefault(idx, {})[name] = arr
    if offset != len(data):
        raise WeightFormatError(f"{len(data) - offset} trailing bytes after final block")
    if file_hash != spec_hash(spec):
        raise WeightFormatError("architecture checksum does not match the network spec")
    bundle = WeightBundle(file_hash, blocks)
    validate_bundle(spec, bundle)
    return bundle


def save_file(bundle: WeightBundle, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_bytes(bundle))


def load_file(path, spec: NetworkSpec) -> WeightBundle:
    with open(path, "rb") as fh:
        return load_bytes(fh.read(), spec)
