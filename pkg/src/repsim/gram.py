"""Gram matrices and the two HSIC estimators.

The Hilbert-Schmidt independence criterion compares two n x n Gram
matrices built from paired example representations. ``hsic0`` is the
classic biased estimator (dot product of doubly-centered Gram matrices);
``hsic1`` is the unbiased U-statistic estimator evaluated in its
closed form

    hsic1(K, L) = ( tr(Kz Lz)
                    + (1'Kz1)(1'Lz1) / ((n-1)(n-2))
                    - 2/(n-2) * 1'Kz Lz 1 ) / (n(n-3))

where Kz and Lz are the Gram matrices with their diagonals zeroed.
The trace and 1'Kz Lz 1 terms are computed from elementwise products
and row sums, so no n x n product matrix is ever materialized.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .exceptions import DimensionMismatchError, DegenerateInputError
from .linalg import as_matrix

__all__ = ["GramMatrix", "gram", "center_gram", "hsic0", "hsic1"]

Variant = Literal["raw", "centered", "diagzero"]


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric n x n matrix of example-pair inner products.

    ``variant`` records which normalization has been applied:
    ``"raw"`` for K = X X', ``"centered"`` for H K H, ``"diagzero"``
    for K with its diagonal set to zero. Raw Gram matrices produced by
    :func:`gram` are positive semidefinite by construction.
    """

    values: np.ndarray
    variant: Variant = "raw"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise DimensionMismatchError(f"Gram matrix must be square, got {v.shape}")
        scale = float(np.abs(v).max())
        if not np.allclose(v, v.T, atol=1e-10 * max(scale, 1.0), rtol=0.0):
            raise DimensionMismatchError("Gram matrix must be symmetric")
        if self.variant == "diagzero" and np.any(np.diag(v) != 0.0):
            raise DimensionMismatchError("diagzero Gram matrix must have a zero diagonal")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def gram(x: np.ndarray) -> GramMatrix:
    """Raw linear Gram matrix K = X X' of one activation matrix."""
    x = as_matrix(x, "x")
    k = x @ x.T
    # BLAS matmul is not guaranteed to be bit-symmetric; enforce it.
    k = (k + k.T) / 2.0
    return GramMatrix(k, "raw")


def center_gram(g: GramMatrix) -> GramMatrix:
    """Doubly-centered Gram matrix H K H without materializing H.

    Every row mean and column mean of the result is zero.
    """
    if g.variant != "raw":
        raise DimensionMismatchError(f"can only center a raw Gram matrix, got {g.variant!r}")
    k = g.values
    means = k.mean(axis=1)
    grand = means.mean()
    centered = k - means[:, None] - means[None, :] + grand
    return GramMatrix(centered, "centered")


def _check_pair(k: GramMatrix, l: GramMatrix, min_n: int):
    if k.variant != "raw" or l.variant != "raw":
        raise DimensionMismatchError("HSIC estimators expect raw Gram matrices")
    if k.n != l.n:
        raise DimensionMismatchError(f"Gram sizes differ: {k.n} vs {l.n}")
    if k.n < min_n:
        raise DimensionMismatchError(f"need at least {min_n} examples, got {k.n}")


def hsic0(k: GramMatrix, l: GramMatrix) -> float:
    """Biased HSIC estimator vec(HKH) . vec(HLH) / (n-1)^2.

    Nonnegative up to rounding (it is a Frobenius inner product of two
    positive-semidefinite matrices) and symmetric in its arguments.
    """
    _check_pair(k, l, 2)
    n = k.n
    kc = center_gram(k).values
    lc = center_gram(l).values
    return float(np.sum(kc * lc) / (n - 1) ** 2)


def hsic1(k: GramMatrix, l: GramMatrix) -> float:
    """Unbiased HSIC U-statistic estimator (closed form, needs n >= 4).

    Exactly zero, up to cancellation rounding, whenever either input
    comes from constant features. O(n^2) time and memory.
    """
    _check_pair(k, l, 4)
    n = k.n
    kz = k.values.copy()
    lz = l.values.copy()
    np.fill_diagonal(kz, 0.0)
    np.fill_diagonal(lz, 0.0)

    trace_term = float(np.sum(kz * lz))  # tr(Kz Lz) for symmetric Kz, Lz
    k_row = kz.sum(axis=1)
    l_row = lz.sum(axis=1)
    sum_k = float(k_row.sum())
    sum_l = float(l_row.sum())
    cross = float(k_row @ l_row)  # 1' Kz Lz 1

    value = (
        trace_term
        + sum_k * sum_l / ((n - 1) * (n - 2))
        - 2.0 * cross / (n - 2)
    ) / (n * (n - 3))
    return value


def self_hsic_scale(g: GramMatrix) -> float:
    """Magnitude scale of HSIC(K, K), used for degeneracy thresholds.

    ``(||K||_F / (n-1))^2`` has the same units as an HSIC value of K
    with itself; a self-HSIC many orders of magnitude below it means
    the underlying features were (numerically) constant.
    """
    n = g.n
    return float(np.linalg.norm(g.values) / max(n - 1, 1)) ** 2


def require_usable_self_hsic(value: float, g: GramMatrix, what: str) -> float:
    """Raise :class:`DegenerateInputError` when a self-HSIC term is
    nonpositive or vanishes relative to the Gram matrix scale."""
    scale = self_hsic_scale(g)
    if value <= 0.0 or value <= 1e-12 * scale:
        raise DegenerateInputError(
            f"self-similarity of {what} is degenerate (constant or zero-variance activations)"
        )
    return value
