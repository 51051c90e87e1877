"""Principal-component views of layer representations.

For column-centered activations, linear CKA decomposes into a weighted
alignment of principal components:

    CKA = sum_ij  lam_x_i lam_y_j <u_x_i, u_y_j>^2
          / ( sqrt(sum_i lam_x_i^2) sqrt(sum_j lam_y_j^2) )

where u are the normalized principal components in *example space*
(left singular vectors, length m, comparable across layers of different
widths) and lam are the corresponding squared singular values. As the
first component's variance share approaches 1 in both layers, CKA
collapses to the squared alignment of the two first components; this
module provides that decomposition plus the tools to inspect it:
variance-explained fractions, first-component cosine maps, and
first-component removal.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInputError, DimensionMismatchError
from .layers import LayerSet
from .linalg import as_matrix, center_columns, svd

__all__ = [
    "SpectralSummary",
    "spectral_summary",
    "cka_spectral",
    "variance_explained",
    "first_pc_cosine_map",
    "remove_first_pc",
    "relu_sparsity",
    "SparsityStats",
]


@dataclass(frozen=True)
class SpectralSummary:
    """Spectrum of one layer's column-centered activation matrix.

    ``components`` holds the left singular vectors as columns (m x r,
    unit norm, mutually orthogonal); ``squared_singular_values`` are the
    corresponding lam_i, and ``variance_fractions`` are lam_i / sum(lam),
    nonincreasing and summing to 1. ``r`` spans the full spectrum, which
    :func:`cka_spectral` requires.
    """

    layer_name: str
    components: np.ndarray
    squared_singular_values: np.ndarray
    variance_fractions: np.ndarray

    @property
    def example_count(self) -> int:
        return self.components.shape[0]

    @property
    def first_component(self) -> np.ndarray:
        return self.components[:, 0]


def spectral_summary(x: np.ndarray, layer_name: str = "") -> SpectralSummary:
    """Decompose one activation matrix (centering its columns first)."""
    centered = center_columns(as_matrix(x, layer_name or "x"))
    result = svd(centered)
    lam = result.singular_values**2
    total = float(lam.sum())
    if total <= 0.0:
        raise DegenerateInputError(
            f"layer {layer_name!r} has zero variance; no spectrum to summarize"
        )
    return SpectralSummary(
        layer_name=layer_name,
        components=result.left,
        squared_singular_values=lam,
        variance_fractions=lam / total,
    )


def cka_spectral(sx: SpectralSummary, sy: SpectralSummary) -> float:
    """Linear CKA computed from two spectra via the weighted-alignment form.

    Equals the biased full-batch CKA of the centered activation matrices
    exactly (to rounding). Both summaries must cover the same examples
    and retain their full spectra.
    """
    if sx.example_count != sy.example_count:
        raise DimensionMismatchError(
            f"spectra cover different example counts: {sx.example_count} vs {sy.example_count}"
        )
    alignments = sx.components.T @ sy.components  # r_x x r_y
    lam_x = sx.squared_singular_values
    lam_y = sy.squared_singular_values
    numerator = float(lam_x @ (alignments**2) @ lam_y)
    return numerator / float(np.linalg.norm(lam_x) * np.linalg.norm(lam_y))


def variance_explained(x: np.ndarray, top_k: int = 1) -> np.ndarray:
    """Fractions of variance explained by the top_k principal components."""
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    summary = spectral_summary(x)
    return summary.variance_fractions[:top_k].copy()


def first_pc_cosine_map(layers: LayerSet) -> np.ndarray:
    """Squared cosine similarity of the first principal component across
    all pairs of layers; symmetric with a unit diagonal.

    Squaring makes the map independent of singular-vector sign
    conventions.
    """
    firsts = np.stack([spectral_summary(l.activations, l.name).first_component for l in layers])
    cos = firsts @ firsts.T
    return cos**2


def remove_first_pc(x: np.ndarray) -> np.ndarray:
    """Project out the first principal component in example space.

    Centers the columns, then subtracts u1 (u1' Xc). Column means are
    not added back: CKA's centering makes them irrelevant, and leaving
    them off keeps the operation idempotent. The output is orthogonal
    to u1.
    """
    centered = center_columns(as_matrix(x, "x"))
    result = svd(centered)
    if float(result.singular_values[0]) == 0.0:
        raise DegenerateInputError("input has zero variance; no component to remove")
    u1 = result.left[:, :1]
    return centered - u1 @ (u1.T @ centered)


@dataclass(frozen=True)
class SparsityStats:
    """Nonzero-activation summary of one post-ReLU layer."""

    fraction_nonzero: float        # over all (example, unit) entries
    fraction_always_zero: float    # units zero for every example
    fraction_always_nonzero: float  # units nonzero for every example


def relu_sparsity(x: np.ndarray) -> SparsityStats:
    """Sparsity statistics of post-ReLU activations.

    Negative entries only trigger a warning (the matrix is then plainly
    not post-ReLU output) and are counted as nonzero.
    """
    x = as_matrix(x, "x")
    if float(x.min()) < 0.0:
        warnings.warn(
            "activation matrix has negative entries; expected post-ReLU values",
            stacklevel=2,
        )
    nonzero = x != 0.0
    per_unit = nonzero.mean(axis=0)
    return SparsityStats(
        fraction_nonzero=float(nonzero.mean()),
        fraction_always_zero=float(np.mean(per_unit == 0.0)),
        fraction_always_nonzero=float(np.mean(per_unit == 1.0)),
    )
