"""Minibatch SGD training loop with best-validation-loss checkpointing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, NumericError, TrainingDivergedError
from .network import Network
from .spec import NetworkSpec
from .weights import WeightBundle, init_bundle


@dataclass
class TrainConfig:
    epochs: int = 400
    batch_size: int = 32
    learning_rate: float = 0.01
    val_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise InputError("epochs must be positive")
        if self.batch_size < 1:
            raise InputError("batch_size must be positive")
        if self.learning_rate < 0:
            raise InputError("learning_rate must be non-negative")
        if not 0.0 < self.val_fraction < 1.0:
            raise InputError("val_fraction must lie in (0, 1)")


@dataclass
class TrainResult:
    bundle: WeightBundle
    best_epoch: int
    history: dict[str, list[float]] = field(default_factory=dict)


def stratified_split(y: np.ndarray, val_fraction: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Index split keeping the class ratio; at least one sample of each class
    lands on each side."""
    train_idx, val_idx = [], []
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        members = rng.permutation(members)
        k = int(round(val_fraction * len(members)))
        k = min(max(k, 1), len(members) - 1)
        val_idx.append(members[:k])
        train_idx.append(members[k:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def train(spec: NetworkSpec, x: np.ndarray, y: np.ndarray, config: TrainConfig,
          val_data: tuple[np.ndarray, np.ndarray] | None = None,
          init: WeightBundle | None = None) -> TrainResult:
    """Fit `spec` to the labeled tensors and return the snapshot with the
    lowest validation loss.

    The validation set is split off internally (stratified, seeded) unless
    `val_data` supplies one. History lists `train_loss`, `val_loss` and
    `val_accuracy` carry one entry per epoch. A non-finite loss aborts with
    the offending epoch index. Fully reproducible for a fixed config.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) == 0:
        raise InputError("dataset is empty")
    if len(x) != len(y):
        raise InputError("inputs and labels differ in length")
    if not (np.any(y == 0) and np.any(y == 1)):
        raise InputError("dataset must contain both classes")

    seeds = np.random.SeedSequence(config.seed).spawn(4)
    if val_data is None:
        if min(int((y == 0).sum()), int((y == 1).sum())) < 2:
            raise InputError("need at least two samples per class to split off validation data")
        tr, va = stratified_split(y, config.val_fraction, np.random.default_rng(seeds[1]))
        x_tr, y_tr, x_va, y_va = x[tr], y[tr], x[va], y[va]
    else:
        x_tr, y_tr = x, y
        x_va = np.asarray(val_data[0], dtype=np.float64)
        y_va = np.asarray(val_data[1], dtype=np.float64)
        if len(x_va) == 0:
            raise InputError("validation set is empty")

    if init is None:
        init = init_bundle(spec, int(seeds[0].generate_state(1)[0]))
    net = Network(spec, init)
    rng_order = np.random.default_rng(seeds[2])
    rng_dropout = np.random.default_rng(seeds[3])

    history: dict[str, list[float]] = {"train_loss": [], "val_loss": [], "val_accuracy": []}
    best_loss = math.inf
    best_epoch = -1
    best_bundle = net.to_bundle()

    for epoch in range(config.epochs):
        order = rng_order.permutation(len(x_tr))
        batch_losses = []
        for start in range(0, len(order), config.batch_size):
            sel = order[start:start + config.batch_size]
            try:
                loss = net.loss_and_grad(x_tr[sel], y_tr[sel], rng=rng_dropout)
            except NumericError as exc:
                raise TrainingDivergedError(epoch) from exc
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch)
            batch_losses.append(loss)
            for i, name, arr in net.parameter_items():
                arr -= config.learning_rate * net.layers[i].grads[name]
        try:
            val_loss, val_acc = net.eval_loss(x_va, y_va)
        except NumericError as exc:
            raise TrainingDivergedError(epoch) from exc
        if not math.isfinite(val_loss):
            raise TrainingDivergedError(epoch)
        history["train_loss"].append(float(np.mean(batch_losses)))
        history["val_loss"].append(val_loss)
        history["val_accuracy"].append(val_acc)
        if val_loss < best_loss:
            best_loss = val_loss
            best_epoch = epoch
            best_bundle = net.to_bundle()

    return TrainResult(bundle=best_bundle, best_epoch=best_epoch, history=history)
