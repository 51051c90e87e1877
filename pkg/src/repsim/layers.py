"""Named, ordered collections of per-layer activation matrices."""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Sequence

import numpy as np

from .exceptions import DimensionMismatchError
from .linalg import as_matrix

__all__ = ["LayerPosition", "Layer", "LayerSet"]


class LayerPosition(IntEnum):
    """Where a capture point sits relative to a residual connection.

    The integer values double as the on-disk position tag.
    """

    PRE_RESIDUAL = 0
    POST_RESIDUAL = 1
    OTHER = 2


@dataclass(frozen=True)
class Layer:
    """One layer's responses: an (examples x features) float64 matrix
    plus metadata carried through from the activation dump."""

    name: str
    activations: np.ndarray
    stage: int = 0
    position: LayerPosition = LayerPosition.OTHER
    stored_dtype: str = "f32"  # dtype used on disk: "f32" or "f64"

    def __post_init__(self):
        object.__setattr__(self, "activations", as_matrix(self.activations, f"layer {self.name!r}"))
        if self.stored_dtype not in ("f32", "f64"):
            raise ValueError(f"stored_dtype must be 'f32' or 'f64', got {self.stored_dtype!r}")

    @property
    def example_count(self) -> int:
        return self.activations.shape[0]

    @property
    def feature_count(self) -> int:
        return self.activations.shape[1]


class LayerSet:
    """Ordered layers of one model over a shared, aligned example set.

    All layers must agree on the example count (and, by contract,
    on example ordering). Layers are addressable by position or name.
    """

    def __init__(self, layers: Sequence[Layer]):
        layers = list(layers)
        if not layers:
            raise DimensionMismatchError("LayerSet needs at least one layer")
        m = layers[0].example_count
        names = set()
        for layer in layers:
            if layer.example_count != m:
                raise DimensionMismatchError(
                    f"layer {layer.name!r} has {layer.example_count} examples, expected {m}"
                )
            if layer.name in names:
                raise DimensionMismatchError(f"duplicate layer name {layer.name!r}")
            names.add(layer.name)
        self._layers = layers

    def __len__(self) -> int:
        return len(self._layers)

    def __iter__(self) -> Iterator[Layer]:
        return iter(self._layers)

    def __getitem__(self, key) -> Layer:
        if isinstance(key, str):
            for layer in self._layers:
                if layer.name == key:
                    return layer
            raise KeyError(key)
        return self._layers[key]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(layer.name for layer in self._layers)

    @property
    def example_count(self) -> int:
        return self._layers[0].example_count

    def pool_stages(self, stages: Sequence[int]) -> np.ndarray:
        """Concatenate, along the feature axis, the activations of every
        layer whose stage tag is in ``stages``.

        Useful for summarizing a whole region of the network (for
        instance the variance explained by the top principal component
        of the last two stages) with a single matrix.
        """
        wanted = [l.activations for l in self._layers if l.stage in stages]
        if not wanted:
            raise DimensionMismatchError(f"no layers belong to stages {list(stages)}")
        return np.concatenate(wanted, axis=1)
