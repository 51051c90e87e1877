"""Dense matrix primitives used by every analysis module.

All public entry points validate their inputs and promote to float64;
HSIC-style statistics involve heavy cancellation between large sums, so
accumulating in 32-bit precision is never acceptable even when the
activations were stored as float32.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateInputError,
    DimensionMismatchError,
    NonFiniteValueError,
    NumericalError,
)

__all__ = ["SvdResult", "as_matrix", "matmul", "svd", "center_columns"]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a 2-D float64 array.

    Requires at least one row and one column and all-finite entries.
    Always returns float64; float32 input is promoted, float64 input is
    passed through without copying.
    """
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {out.shape}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise DimensionMismatchError(f"{name} must be non-empty, got shape {out.shape}")
    if not np.isfinite(out).all():
        raise NonFiniteValueError(f"{name} contains non-finite entries")
    return out


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with explicit dimension checking."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatchError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``a = left @ diag(singular_values) @ right.T``.

    ``left`` is m x r and ``right`` is p x r with orthonormal columns and
    r = min(m, p). Singular values are nonnegative and nonincreasing.
    The sign of each component pair is fixed so that the
    largest-magnitude entry of every left singular vector is positive,
    which makes downstream cosine-similarity maps reproducible run to run.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T


def svd(a: np.ndarray) -> SvdResult:
    """Thin singular value decomposition with a deterministic sign convention.

    Callers who want PCA semantics must center the columns first (see
    :func:`center_columns`); this routine decomposes the matrix exactly
    as given.
    """
    a = as_matrix(a, "a")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"svd did not converge: {exc}") from exc
    v = vt.T
    # Flip signs so each left vector's largest-|entry| is positive.
    flip = np.sign(u[np.abs(u).argmax(axis=0), np.arange(u.shape[1])])
    flip[flip == 0] = 1.0
    return SvdResult(left=u * flip, singular_values=s, right=v * flip)


def center_columns(a: np.ndarray) -> np.ndarray:
    """Subtract the per-column mean; every output column has zero mean."""
    a = as_matrix(a, "a")
    return a - a.mean(axis=0, keepdims=True)


def require_positive_variance(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate that ``a`` has signal after column centering.

    Returns the centered matrix. Raises :class:`DegenerateInputError`
    when every column is constant (the centered matrix is numerically
    zero relative to the input scale).
    """
    a = as_matrix(a, name)
    centered = a - a.mean(axis=0, keepdims=True)
    scale = float(np.abs(a).max())
    if scale == 0.0 or float(np.abs(centered).max()) <= 1e-13 * scale:
        raise DegenerateInputError(f"{name} has no variance across examples")
    return centered
