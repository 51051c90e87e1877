"""Linear centered kernel alignment, full-batch and minibatch.

CKA normalizes HSIC into a similarity index,

    CKA(K, L) = HSIC(K, L) / sqrt(HSIC(K, K) HSIC(L, L)),

which is invariant to orthogonal transformation and isotropic scaling
of either representation. The minibatch estimator averages the three
unbiased-HSIC terms over k minibatches before taking the ratio,

    cka_mb = mean_i hsic1(Ki, Li)
             / sqrt(mean_i hsic1(Ki, Ki) * mean_i hsic1(Li, Li)),

sampling without replacement within each pass over the data. Because
the same average appears in numerator and denominator the 1/k factors
cancel, so the accumulator only keeps running sums.

Randomness is driven by numpy's PCG64 generator; each epoch draws its
shuffle from an independent child stream spawned from the user seed via
``numpy.random.SeedSequence``, so results are reproducible across
platforms and safe to parallelize per epoch.
"""

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .exceptions import DegenerateInputError, DimensionMismatchError
from .gram import gram, hsic0, hsic1, require_usable_self_hsic
from .layers import LayerSet
from .linalg import as_matrix

__all__ = ["cka_full", "MinibatchAccumulator", "cka_minibatch", "cka_heatmap", "CkaHeatmap"]

Estimator = Literal["biased", "unbiased"]


def cka_full(x: np.ndarray, y: np.ndarray, estimator: Estimator = "biased") -> float:
    """Full-batch linear CKA between two activation matrices.

    ``x`` is (m x p1) and ``y`` is (m x p2) over the same m examples in
    the same order. The biased estimator uses hsic0 (m >= 2, output in
    [0, 1] up to rounding); the unbiased estimator uses hsic1 (m >= 4,
    may round slightly below 0 for unrelated representations).

    Raises :class:`DegenerateInputError` when either input has
    (numerically) constant activations, since its self-similarity is
    then zero and the ratio is undefined.
    """
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatchError(
            f"x and y must have the same example count: {x.shape[0]} vs {y.shape[0]}"
        )
    if estimator == "biased":
        estimate = hsic0
    elif estimator == "unbiased":
        estimate = hsic1
    else:
        raise ValueError(f"estimator must be 'biased' or 'unbiased', got {estimator!r}")

    k = gram(x)
    l = gram(y)
    self_k = require_usable_self_hsic(estimate(k, k), k, "x")
    self_l = require_usable_self_hsic(estimate(l, l), l, "y")
    return estimate(k, l) / math.sqrt(self_k * self_l)


@dataclass
class MinibatchAccumulator:
    """Running sums of the three per-batch hsic1 terms of minibatch CKA.

    Per-batch terms are kept individually and added with exactly-rounded
    summation (``math.fsum``) at read time, so splitting a batch
    sequence across several accumulators and merging gives results
    bit-identical to sequential accumulation, in any grouping.
    """

    _cross: list = field(default_factory=list)
    _self_x: list = field(default_factory=list)
    _self_y: list = field(default_factory=list)

    @property
    def batch_count(self) -> int:
        return len(self._cross)

    @property
    def sum_cross(self) -> float:
        return math.fsum(self._cross)

    @property
    def sum_self_x(self) -> float:
        return math.fsum(self._self_x)

    @property
    def sum_self_y(self) -> float:
        return math.fsum(self._self_y)

    def update(self, x_batch: np.ndarray, y_batch: np.ndarray) -> None:
        """Accumulate one minibatch (same n >= 4 examples in both).

        Raises :class:`DegenerateInputError` for a batch whose
        self-similarity is numerically zero (constant activations);
        validation happens before anything is recorded, so a failed
        update leaves the accumulator unchanged.
        """
        k = gram(x_batch)
        l = gram(y_batch)
        self_x = require_usable_self_hsic(hsic1(k, k), k, "x batch")
        self_y = require_usable_self_hsic(hsic1(l, l), l, "y batch")
        self._cross.append(hsic1(k, l))
        self._self_x.append(self_x)
        self._self_y.append(self_y)

    def merge(self, other: "MinibatchAccumulator") -> "MinibatchAccumulator":
        """Combine two accumulators; sums of all fields."""
        merged = MinibatchAccumulator()
        merged._cross = self._cross + other._cross
        merged._self_x = self._self_x + other._self_x
        merged._self_y = self._self_y + other._self_y
        return merged

    def finalize(self) -> float:
        """CKA value from the accumulated sums."""
        if self.batch_count < 1:
            raise DegenerateInputError("no batches accumulated")
        sx = self.sum_self_x
        sy = self.sum_self_y
        if sx <= 0.0 or sy <= 0.0:
            raise DegenerateInputError("accumulated self-similarity is not positive")
        return self.sum_cross / math.sqrt(sx * sy)


def cka_minibatch(
    x: np.ndarray,
    y: np.ndarray,
    batch_size: int = 256,
    epochs: int = 10,
    seed: int = 0,
) -> float:
    """Minibatch linear CKA with the unbiased HSIC estimator.

    Each epoch shuffles the m examples with its own child stream of the
    seeded generator and splits them into floor(m / batch_size) batches
    of exactly batch_size (leftover examples are dropped for that epoch;
    later epochs reshuffle, so coverage differs across epochs). Indices
    are sorted within each batch, which changes nothing statistically
    but makes the single-batch case bit-identical to
    ``cka_full(x, y, "unbiased")``.

    Deterministic given (seed, batch_size, epochs). Defaults mirror the
    reference analysis setup: batches of 256, 10 passes over the data.
    """
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    m = x.shape[0]
    if y.shape[0] != m:
        raise DimensionMismatchError(
            f"x and y must have the same example count: {m} vs {y.shape[0]}"
        )
    if batch_size < 4:
        raise DimensionMismatchError(f"batch_size must be >= 4, got {batch_size}")
    if m < batch_size:
        raise DimensionMismatchError(f"batch_size {batch_size} exceeds example count {m}")
    if epochs < 1:
        raise DimensionMismatchError(f"epochs must be >= 1, got {epochs}")

    acc = MinibatchAccumulator()
    batches_per_epoch = m // batch_size
    for child in np.random.SeedSequence(seed).spawn(epochs):
        order = np.random.default_rng(child).permutation(m)
        for b in range(batches_per_epoch):
            idx = np.sort(order[b * batch_size : (b + 1) * batch_size])
            acc.update(x[idx], y[idx])
    return acc.finalize()


@dataclass(frozen=True)
class CkaHeatmap:
    """CKA values between all layer pairs of one or two models.

    ``values[i, j]`` is the similarity between layer i of model A and
    layer j of model B. Entries live in [0, 1] up to estimator noise
    (unbiased estimates may dip slightly below zero); entries whose
    computation failed on degenerate activations are NaN and the
    offending layer names are listed in ``degenerate_layers``.
    """

    layer_names_a: tuple
    layer_names_b: tuple
    values: np.ndarray
    degenerate_layers: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (len(self.layer_names_a), len(self.layer_names_b)):
            raise DimensionMismatchError(
                f"heatmap shape {v.shape} does not match layer name counts "
                f"({len(self.layer_names_a)}, {len(self.layer_names_b)})"
            )
        object.__setattr__(self, "values", v)

    @property
    def is_square(self) -> bool:
        return self.values.shape[0] == self.values.shape[1]


def _entry(x, y, mode, estimator, batch_size, epochs, seed):
    if mode == "full":
        return cka_full(x, y, estimator)
    return cka_minibatch(x, y, batch_size=batch_size, epochs=epochs, seed=seed)


def cka_heatmap(
    model_a: LayerSet,
    model_b: LayerSet | None = None,
    mode: Literal["full", "minibatch"] = "minibatch",
    estimator: Estimator = "unbiased",
    batch_size: int = 256,
    epochs: int = 10,
    seed: int = 0,
) -> CkaHeatmap:
    """CKA between all pairs of layers within or across models.

    With ``model_b`` omitted (or the same object), only the upper
    triangle is computed and mirrored. ``estimator`` applies to full
    mode only; the minibatch path is always unbiased. A layer with
    degenerate activations poisons only its own row and column, which
    are reported as NaN rather than fabricated.
    """
    same = model_b is None or model_b is model_a
    model_b = model_a if same else model_b
    if model_a.example_count != model_b.example_count:
        raise DimensionMismatchError(
            "models must share the example set: "
            f"{model_a.example_count} vs {model_b.example_count} examples"
        )
    la, lb = len(model_a), len(model_b)
    values = np.full((la, lb), np.nan)
    degenerate: set[str] = set()

    for i, layer_i in enumerate(model_a):
        for j, layer_j in enumerate(model_b):
            if same and j < i:
                continue
            if layer_i.name in degenerate or layer_j.name in degenerate:
                continue
            try:
                value = _entry(
                    layer_i.activations, layer_j.activations,
                    mode, estimator, batch_size, epochs, seed,
                )
            except DegenerateInputError:
                # Identify which operand is degenerate so only its
                # row/column is marked missing.
                for layer in (layer_i, layer_j):
                    try:
                        _entry(layer.activations, layer.activations,
                               mode, estimator, batch_size, epochs, seed)
                    except DegenerateInputError:
                        degenerate.add(layer.name)
                continue
            values[i, j] = value
            if same:
                values[j, i] = value

    for name in degenerate:
        if name in model_a.names:
            values[model_a.names.index(name), :] = np.nan
        if name in model_b.names:
            values[:, model_b.names.index(name)] = np.nan

    return CkaHeatmap(
        layer_names_a=tuple(model_a.names),
        layer_names_b=tuple(model_b.names),
        values=values,
        degenerate_layers=tuple(sorted(degenerate)),
    )
