"""Linear probes: softmax regression from frozen activations to labels.

A probe measures how much task information a layer's representation
exposes to a linear readout. Training is deterministic full-batch
gradient descent on the L2-penalized cross-entropy, with per-dimension
feature standardization and seeded initialization, so identical inputs
always give identical probes.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInputError, DimensionMismatchError, NonFiniteValueError
from .layers import LayerPosition, LayerSet
from .linalg import as_matrix

__all__ = ["ProbeConfig", "ProbeResult", "train_probe", "probe_curve"]


@dataclass(frozen=True)
class ProbeConfig:
    """Probe hyperparameters. The defaults are declared choices, not
    tuned values: standardized features, weak L2, 500 plain GD steps."""

    l2_penalty: float = 1e-4
    step_size: float = 0.1
    iterations: int = 500
    init_seed: int = 0
    init_scale: float = 0.01
    standardize: bool = True
    split_fraction: float = 0.8  # train share used by probe_curve
    split_seed: int = 0


@dataclass(frozen=True)
class ProbeResult:
    """Fitted probe for one layer."""

    layer_name: str
    position: LayerPosition
    train_accuracy: float
    test_accuracy: float
    weights: np.ndarray  # p x C, in standardized-feature space when standardize=True
    bias: np.ndarray     # length C
    losses: np.ndarray   # objective value per iteration (before each step)


def _check_labels(y: np.ndarray, what: str) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise DimensionMismatchError(f"{what} must be 1-D")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == y.astype(np.int64)):
            raise DimensionMismatchError(f"{what} must be integer class ids")
    return y.astype(np.int64)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def train_probe(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_test: np.ndarray,
    y_test: np.ndarray,
    config: ProbeConfig = ProbeConfig(),
    layer_name: str = "",
    position: LayerPosition = LayerPosition.OTHER,
) -> ProbeResult:
    """Fit a multinomial logistic probe and report train/test accuracy.

    Class count is taken from the union of train and test labels; labels
    must be integers in [0, C) with C >= 2 and at least two classes
    present in the training split.
    """
    x_train = as_matrix(x_train, "x_train")
    x_test = as_matrix(x_test, "x_test")
    y_train = _check_labels(y_train, "y_train")
    y_test = _check_labels(y_test, "y_test")
    if x_train.shape[0] != y_train.shape[0] or x_test.shape[0] != y_test.shape[0]:
        raise DimensionMismatchError("activations and labels disagree on example count")
    if x_train.shape[1] != x_test.shape[1]:
        raise DimensionMismatchError("train and test feature counts differ")
    if y_train.min() < 0 or y_test.min() < 0:
        raise DimensionMismatchError("labels must be nonnegative")
    n_classes = int(max(y_train.max(), y_test.max())) + 1
    if n_classes < 2 or np.unique(y_train).size < 2:
        raise DegenerateInputError("training labels contain fewer than two classes")

    if config.standardize:
        mean = x_train.mean(axis=0)
        std = x_train.std(axis=0)
        std[std == 0.0] = 1.0
        x_train = (x_train - mean) / std
        x_test = (x_test - mean) / std

    m, p = x_train.shape
    rng = np.random.default_rng(config.init_seed)
    weights = rng.normal(0.0, config.init_scale, size=(p, n_classes))
    bias = np.zeros(n_classes)
    onehot = np.zeros((m, n_classes))
    onehot[np.arange(m), y_train] = 1.0

    losses = np.empty(config.iterations)
    for it in range(config.iterations):
        probs = _softmax(x_train @ weights + bias)
        # cross-entropy plus L2 on the weights (bias unpenalized)
        losses[it] = float(
            -np.mean(np.log(np.maximum(probs[np.arange(m), y_train], 1e-300)))
            + 0.5 * config.l2_penalty * np.sum(weights**2)
        )
        grad_z = (probs - onehot) / m
        weights -= config.step_size * (x_train.T @ grad_z + config.l2_penalty * weights)
        bias -= config.step_size * grad_z.sum(axis=0)

    if not np.isfinite(weights).all() or not np.isfinite(bias).all():
        raise NonFiniteValueError("probe training diverged to non-finite weights")

    train_pred = (x_train @ weights + bias).argmax(axis=1)
    test_pred = (x_test @ weights + bias).argmax(axis=1)
    return ProbeResult(
        layer_name=layer_name,
        position=position,
        train_accuracy=float(np.mean(train_pred == y_train)),
        test_accuracy=float(np.mean(test_pred == y_test)),
        weights=weights,
        bias=bias,
        losses=losses,
    )


def probe_curve(
    layers: LayerSet,
    labels: np.ndarray,
    config: ProbeConfig = ProbeConfig(),
) -> list[ProbeResult]:
    """Train one probe per layer, input to output, on a shared split.

    The dumped examples are split 80/20 (by ``config.split_fraction``)
    with a seeded shuffle; every layer sees the same split, so the
    resulting accuracy curve is comparable across depth.
    """
    labels = _check_labels(labels, "labels")
    if labels.shape[0] != layers.example_count:
        raise DimensionMismatchError(
            f"labels cover {labels.shape[0]} examples, layers have {layers.example_count}"
        )
    m = layers.example_count
    n_train = int(round(m * config.split_fraction))
    if n_train < 1 or n_train >= m:
        raise DimensionMismatchError(
            f"split_fraction {config.split_fraction} leaves an empty train or test split"
        )
    order = np.random.default_rng(config.split_seed).permutation(m)
    train_idx, test_idx = order[:n_train], order[n_train:]

    results = []
    for layer in layers:
        x = layer.activations
        results.append(
            train_probe(
                x[train_idx], labels[train_idx], x[test_idx], labels[test_idx],
                config=config, layer_name=layer.name, position=layer.position,
            )
        )
    return results
