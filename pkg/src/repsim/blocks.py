"""Heuristic detection of block structure in a CKA heatmap.

A "block" is a contiguous range of layers whose pairwise similarities
are uniformly high -- the bright square on a layer-by-layer heatmap.
No quantitative definition exists in the literature, so the detector
here is an explicit heuristic with user-visible parameters: an interval
[a, b] qualifies when the mean CKA over its square is at least
``threshold`` and no entry of the square falls below ``threshold - 0.1``.
"""

from dataclasses import dataclass

import numpy as np

from .cka import CkaHeatmap
from .exceptions import DimensionMismatchError

__all__ = ["Block", "BlockReport", "detect_blocks", "block_seed_variability", "SeedVariability"]

DEFAULT_THRESHOLD = 0.9
DEFAULT_MIN_SIZE = 5


@dataclass(frozen=True)
class Block:
    """One detected interval of layers, inclusive on both ends."""

    start_layer: int
    end_layer: int
    mean_inside_cka: float
    mean_boundary_contrast: float  # mean inside minus mean to outside layers; NaN if no outside

    @property
    def size(self) -> int:
        return self.end_layer - self.start_layer + 1


@dataclass(frozen=True)
class BlockReport:
    """All blocks found in one heatmap, sorted by start layer."""

    blocks: tuple
    threshold: float
    min_size: int
    layer_count: int

    @property
    def has_blocks(self) -> bool:
        return len(self.blocks) > 0

    @property
    def primary(self) -> Block | None:
        """Largest block (the first one extracted), if any."""
        if not self.blocks:
            return None
        return max(self.blocks, key=lambda b: (b.size, b.mean_inside_cka, -b.start_layer))


def detect_blocks(
    h: CkaHeatmap,
    threshold: float = DEFAULT_THRESHOLD,
    min_size: int = DEFAULT_MIN_SIZE,
) -> BlockReport:
    """Find maximal high-similarity diagonal intervals in a square heatmap.

    Candidate intervals of length >= min_size must have mean CKA >=
    threshold over their square and every entry >= threshold - 0.1.
    Extraction is greedy: longest candidate first, ties broken by higher
    inside mean and then lower start index, skipping candidates that
    overlap anything already chosen. Deterministic; NaN entries never
    join a block. Raising the threshold can only shrink or remove the
    longest block, never grow it.
    """
    values = h.values
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DimensionMismatchError(f"block detection needs a square heatmap, got {values.shape}")
    n = values.shape[0]
    if min_size < 1:
        raise ValueError(f"min_size must be >= 1, got {min_size}")

    # Summed-area tables: entry values (NaN as 0, only read for squares
    # with no violations) and counts of entries above the floor.
    ok = np.where(np.isnan(values), False, values >= threshold - 0.1)
    value_sums = np.zeros((n + 1, n + 1))
    value_sums[1:, 1:] = np.nan_to_num(values, nan=0.0).cumsum(axis=0).cumsum(axis=1)
    ok_sums = np.zeros((n + 1, n + 1))
    ok_sums[1:, 1:] = ok.astype(np.int64).cumsum(axis=0).cumsum(axis=1)

    def square_sum(table: np.ndarray, a: int, b: int) -> float:
        return table[b + 1, b + 1] - table[a, b + 1] - table[b + 1, a] + table[a, a]

    candidates = []
    for a in range(n):
        for b in range(a, n):
            size = b - a + 1
            if square_sum(ok_sums, a, b) < size * size:
                # A violating entry stays inside every larger square.
                break
            if size < min_size:
                continue
            mean = square_sum(value_sums, a, b) / (size * size)
            if mean >= threshold:
                candidates.append((size, mean, a, b))
    candidates.sort(key=lambda c: (-c[0], -c[1], c[2]))

    chosen: list[tuple[int, int, float]] = []
    for size, mean, a, b in candidates:
        if any(not (b < ca or a > cb) for ca, cb, _ in chosen):
            continue
        chosen.append((a, b, mean))

    blocks = []
    for a, b, _ in sorted(chosen):
        inside_mean = float(np.mean(values[a : b + 1, a : b + 1]))
        outside_cols = [j for j in range(n) if j < a or j > b]
        if outside_cols and not np.all(np.isnan(values[a : b + 1, outside_cols])):
            contrast = inside_mean - float(np.nanmean(values[a : b + 1, outside_cols]))
        else:
            contrast = float("nan")
        blocks.append(
            Block(
                start_layer=a,
                end_layer=b,
                mean_inside_cka=inside_mean,
                mean_boundary_contrast=contrast,
            )
        )
    return BlockReport(
        blocks=tuple(blocks), threshold=threshold, min_size=min_size, layer_count=n
    )


@dataclass(frozen=True)
class SeedVariability:
    """Block presence and position dispersion across training seeds."""

    presence: tuple          # per-seed bool
    primary_bounds: tuple    # per-seed (start, end) or None
    presence_rate: float
    start_mean: float
    start_std: float
    end_mean: float
    end_std: float
    size_mean: float
    size_std: float


def block_seed_variability(reports: list[BlockReport]) -> SeedVariability:
    """Summarize how block presence and position vary across seeds.

    Statistics cover the primary (largest) block of each report and are
    computed over the seeds where a block exists; they are NaN when no
    seed has one.
    """
    if not reports:
        raise DimensionMismatchError("need at least one report")
    presence = tuple(r.has_blocks for r in reports)
    bounds = tuple(
        (r.primary.start_layer, r.primary.end_layer) if r.has_blocks else None for r in reports
    )
    starts = np.array([b[0] for b in bounds if b is not None], dtype=np.float64)
    ends = np.array([b[1] for b in bounds if b is not None], dtype=np.float64)
    sizes = ends - starts + 1 if starts.size else np.array([])

    def stat(fn, arr):
        return float(fn(arr)) if arr.size else float("nan")

    return SeedVariability(
        presence=presence,
        primary_bounds=bounds,
        presence_rate=float(np.mean(presence)),
        start_mean=stat(np.mean, starts),
        start_std=stat(np.std, starts),
        end_mean=stat(np.mean, ends),
        end_std=stat(np.std, ends),
        size_mean=stat(np.mean, sizes),
        size_std=stat(np.std, sizes),
    )
