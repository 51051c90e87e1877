"""Binary dump formats and report emission.

Two little-endian interchange formats connect this library to whatever
produced the data:

NAF1 activation dumps::

    magic "NAF1" | version u16 (=1) | exampleCount u32 | layerCount u32
    per layer: nameLen u16, UTF-8 name, stageTag u8, positionTag u8
               (0 pre-residual, 1 post-residual, 2 other), dtypeTag u8
               (0 f32, 1 f64), featureCount u32,
               exampleCount*featureCount values row-major

NPF1 prediction dumps::

    magic "NPF1" | modelCount u32 | exampleCount u32 | classCount u32
    trueLabels u16 * exampleCount
    per model: nameLen u16, UTF-8 name, u16 * exampleCount predictions

Readers reject, with a :class:`~repsim.exceptions.DumpFormatError`
subclass and never a crash or a partial result, any file whose declared
sizes disagree with the actual payload (no over-read, no silent
truncation, no trailing bytes). Heatmaps are emitted as full-precision
CSV with layer-name header row/column and optionally as binary P5
graymaps with value v mapped to round(255*clamp(v, 0, 1)), y-flipped so
layer 0 sits at the bottom-left.
"""

import csv
import struct
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from .cka import CkaHeatmap
from .exceptions import (
    BadMagicError,
    DuplicateNameError,
    InvalidFieldError,
    TrailingDataError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .layers import Layer, LayerPosition, LayerSet
from .predictions import PredictionEnsemble

__all__ = [
    "read_activation_dump",
    "write_activation_dump",
    "read_prediction_dump",
    "write_prediction_dump",
    "emit_heatmap",
    "write_heatmap_image",
    "read_heatmap_csv",
    "write_matrix_csv",
]

NAF_MAGIC = b"NAF1"
NPF_MAGIC = b"NPF1"
NAF_VERSION = 1

_DTYPE_TAGS = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_NAMES = {0: "f32", 1: "f64"}
_DTYPE_CODES = {"f32": 0, "f64": 1}


class _Cursor:
    """Bounds-checked reader over an in-memory file image."""

    def __init__(self, data: bytes, label: str):
        self.data = data
        self.label = label
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self.data) - self.offset

    def take(self, count: int, what: str) -> bytes:
        if count > self.remaining:
            raise TruncatedFileError(
                f"{self.label}: truncated reading {what} "
                f"(need {count} bytes at offset {self.offset}, have {self.remaining})"
            )
        chunk = self.data[self.offset : self.offset + count]
        self.offset += count
        return chunk

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def name(self, what: str) -> str:
        length = self.u16(f"{what} length")
        raw = self.take(length, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidFieldError(f"{self.label}: {what} is not valid UTF-8") from exc

    def finish(self) -> None:
        if self.remaining:
            raise TrailingDataError(
                f"{self.label}: {self.remaining} trailing bytes after declared payload"
            )


def _require(condition: bool, label: str, message: str) -> None:
    if not condition:
        raise InvalidFieldError(f"{label}: {message}")


def read_activation_dump(path) -> LayerSet:
    """Parse an NAF1 file into a LayerSet (values widened to float64).

    Raises a DumpFormatError subclass on any malformed input: bad magic,
    unsupported version, truncation, trailing bytes, duplicate layer
    names, invalid tags or counts, or non-finite payload values.
    """
    path = Path(path)
    cur = _Cursor(path.read_bytes(), str(path))
    if cur.take(4, "magic") != NAF_MAGIC:
        raise BadMagicError(f"{cur.label}: not an NAF1 activation dump")
    version = cur.u16("format version")
    if version != NAF_VERSION:
        raise UnsupportedVersionError(f"{cur.label}: unsupported NAF1 version {version}")
    example_count = cur.u32("example count")
    layer_count = cur.u32("layer count")
    _require(example_count >= 1, cur.label, "example count must be at least 1")
    _require(layer_count >= 1, cur.label, "layer count must be at least 1")

    layers = []
    seen = set()
    for index in range(layer_count):
        what = f"layer {index}"
        name = cur.name(f"{what} name")
        if name in seen:
            raise DuplicateNameError(f"{cur.label}: duplicate layer name {name!r}")
        seen.add(name)
        stage = cur.u8(f"{what} stage tag")
        position = cur.u8(f"{what} position tag")
        _require(position in (0, 1, 2), cur.label, f"{what} position tag {position} invalid")
        dtype_tag = cur.u8(f"{what} dtype tag")
        _require(dtype_tag in _DTYPE_TAGS, cur.label, f"{what} dtype tag {dtype_tag} invalid")
        feature_count = cur.u32(f"{what} feature count")
        _require(feature_count >= 1, cur.label, f"{what} feature count must be at least 1")
        dtype = _DTYPE_TAGS[dtype_tag]
        payload = cur.take(example_count * feature_count * dtype.itemsize, f"{what} payload")
        values = (
            np.frombuffer(payload, dtype=dtype)
            .reshape(example_count, feature_count)
            .astype(np.float64)
        )
        _require(bool(np.isfinite(values).all()), cur.label, f"{what} payload has non-finite values")
        layers.append(
            Layer(
                name=name,
                activations=values,
                stage=stage,
                position=LayerPosition(position),
                stored_dtype=_DTYPE_NAMES[dtype_tag],
            )
        )
    cur.finish()
    return LayerSet(layers)


def _encode_name(name: str, label: str, what: str) -> bytes:
    raw = name.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise InvalidFieldError(f"{label}: {what} name longer than 65535 bytes")
    return struct.pack("<H", len(raw)) + raw


def write_activation_dump(layers: LayerSet, path) -> None:
    """Write a LayerSet as NAF1, honoring each layer's stored dtype."""
    path = Path(path)
    label = str(path)
    if layers.example_count > 0xFFFFFFFF or len(layers) > 0xFFFFFFFF:
        raise InvalidFieldError(f"{label}: counts exceed u32 range")
    parts = [
        NAF_MAGIC,
        struct.pack("<HII", NAF_VERSION, layers.example_count, len(layers)),
    ]
    for layer in layers:
        if layer.feature_count > 0xFFFFFFFF:
            raise InvalidFieldError(f"{label}: feature count exceeds u32 range")
        if not 0 <= layer.stage <= 0xFF:
            raise InvalidFieldError(f"{label}: stage tag {layer.stage} outside u8 range")
        dtype_tag = _DTYPE_CODES[layer.stored_dtype]
        parts.append(_encode_name(layer.name, label, "layer"))
        parts.append(
            struct.pack("<BBBI", layer.stage, int(layer.position), dtype_tag,
                        layer.feature_count)
        )
        parts.append(np.ascontiguousarray(layer.activations, dtype=_DTYPE_TAGS[dtype_tag]).tobytes())
    path.write_bytes(b"".join(parts))


def read_prediction_dump(path, group_name: str | None = None) -> PredictionEnsemble:
    """Parse an NPF1 file into a PredictionEnsemble.

    ``group_name`` defaults to the file stem. Raises a DumpFormatError
    subclass on malformed input, including any label at or above the
    declared class count and duplicate model names.
    """
    path = Path(path)
    cur = _Cursor(path.read_bytes(), str(path))
    if cur.take(4, "magic") != NPF_MAGIC:
        raise BadMagicError(f"{cur.label}: not an NPF1 prediction dump")
    model_count = cur.u32("model count")
    example_count = cur.u32("example count")
    class_count = cur.u32("class count")
    _require(model_count >= 1, cur.label, "model count must be at least 1")
    _require(example_count >= 1, cur.label, "example count must be at least 1")
    _require(class_count >= 1, cur.label, "class count must be at least 1")

    def labels(what: str) -> np.ndarray:
        raw = cur.take(2 * example_count, what)
        values = np.frombuffer(raw, dtype="<u2").astype(np.int64)
        _require(bool((values < class_count).all()), cur.label,
                 f"{what} contains labels >= class count {class_count}")
        return values

    true_labels = labels("true labels")
    # each model needs at least a name length plus its predictions, so a
    # corrupt model count fails here instead of sizing an allocation
    _require(
        cur.remaining >= model_count * (2 + 2 * example_count),
        cur.label,
        f"declared model count {model_count} exceeds the available payload",
    )
    names: list[str] = []
    rows: list[np.ndarray] = []
    for index in range(model_count):
        name = cur.name(f"model {index} name")
        if name in names:
            raise DuplicateNameError(f"{cur.label}: duplicate model name {name!r}")
        names.append(name)
        rows.append(labels(f"model {index} predictions"))
    cur.finish()
    return PredictionEnsemble(
        group_name=group_name if group_name is not None else path.stem,
        predicted=np.vstack(rows),
        true_labels=true_labels,
        class_count=class_count,
        model_names=tuple(names),
    )


def write_prediction_dump(ensemble: PredictionEnsemble, path) -> None:
    """Write a PredictionEnsemble as NPF1 (labels must fit in u16)."""
    path = Path(path)
    label = str(path)
    if ensemble.predicted.max() > 0xFFFF or ensemble.true_labels.max() > 0xFFFF:
        raise InvalidFieldError(f"{label}: labels exceed u16 range")
    if ensemble.model_count > 0xFFFFFFFF or ensemble.example_count > 0xFFFFFFFF:
        raise InvalidFieldError(f"{label}: counts exceed u32 range")
    names = ensemble.model_names
    if names is None:
        names = tuple(f"model-{i:04d}" for i in range(ensemble.model_count))
    parts = [
        NPF_MAGIC,
        struct.pack("<III", ensemble.model_count, ensemble.example_count, ensemble.class_count),
        ensemble.true_labels.astype("<u2").tobytes(),
    ]
    for name, row in zip(names, ensemble.predicted):
        parts.append(_encode_name(name, label, "model"))
        parts.append(row.astype("<u2").tobytes())
    path.write_bytes(b"".join(parts))


def write_matrix_csv(
    row_names: Sequence[str],
    col_names: Sequence[str],
    values: np.ndarray,
    out: TextIO,
) -> None:
    """Matrix with name header row/column, full float precision."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([""] + list(col_names))
    for name, row in zip(row_names, np.asarray(values)):
        writer.writerow([name] + [repr(float(v)) for v in row])


def emit_heatmap(heatmap: CkaHeatmap, csv_path, image_path=None) -> None:
    """Write a heatmap as CSV and, optionally, as a binary P5 graymap."""
    csv_path = Path(csv_path)
    with csv_path.open("w", encoding="utf-8", newline="") as out:
        write_matrix_csv(heatmap.layer_names_a, heatmap.layer_names_b, heatmap.values, out)
    if image_path is not None:
        write_heatmap_image(heatmap, image_path)


def write_heatmap_image(heatmap: CkaHeatmap, image_path) -> None:
    """Binary P5 graymap of a heatmap.

    Pixels map value v to round(255*clamp(v, 0, 1)) with ties to even
    (0.5 becomes 128); NaN entries map to 0. Rows are flipped so layer 0
    is the bottom-left pixel.
    """
    clamped = np.clip(np.nan_to_num(heatmap.values, nan=0.0), 0.0, 1.0)
    pixels = np.rint(255.0 * clamped).astype(np.uint8)[::-1, :]
    height, width = pixels.shape
    Path(image_path).write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes())


def read_heatmap_csv(path) -> CkaHeatmap:
    """Parse a heatmap CSV written by :func:`emit_heatmap`."""
    path = Path(path)
    label = str(path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or len(rows[0]) < 2:
        raise InvalidFieldError(f"{label}: missing heatmap header row")
    col_names = tuple(rows[0][1:])
    row_names = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(col_names) + 1:
            raise InvalidFieldError(f"{label}: line {lineno} has {len(row)} fields, "
                                    f"expected {len(col_names) + 1}")
        row_names.append(row[0])
        try:
            values.append([float(cell) for cell in row[1:]])
        except ValueError as exc:
            raise InvalidFieldError(f"{label}: line {lineno} has a non-numeric cell") from exc
    if not row_names:
        raise InvalidFieldError(f"{label}: heatmap has no data rows")
    return CkaHeatmap(
        layer_names_a=tuple(row_names),
        layer_names_b=col_names,
        values=np.array(values, dtype=np.float64),
    )
