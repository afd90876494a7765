"""From-scratch CNN engine: specs, weights, forward/backward, training."""

from .gradcheck import gradient_check, random_bundle
from .network import Network, bce_from_logits, sigmoid
from .spec import (
    BATCHNORM,
    CONV2D,
    DENSE,
    DROPOUT,
    FLATTEN,
    MAXPOOL2,
    LayerSpec,
    NetworkSpec,
    batchnorm,
    conv2d,
    count_params,
    dense,
    dropout,
    flatten,
    maxpool2,
    small_network,
    spec_hash,
    standard_network,
)
from .train import TrainConfig, TrainResult, stratified_split, train
from .weights import (
    WeightBundle,
    expected_blocks,
    init_bundle,
    load_bytes,
    load_file,
    save_bytes,
    save_file,
    validate_bundle,
)

__all__ = [
    "BATCHNORM", "CONV2D", "DENSE", "DROPOUT", "FLATTEN", "MAXPOOL2",
    "LayerSpec", "NetworkSpec", "Network", "TrainConfig", "TrainResult",
    "WeightBundle", "batchnorm", "bce_from_logits", "conv2d", "count_params",
    "dense", "dropout", "expected_blocks", "flatten", "gradient_check",
    "init_bundle", "load_bytes", "load_file", "maxpool2", "random_bundle",
    "save_bytes", "save_file", "sigmoid", "small_network", "spec_hash",
    "standard_network", "stratified_split", "train", "validate_bundle",
]
