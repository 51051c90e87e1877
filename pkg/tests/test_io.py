import struct

import numpy as np
import pytest

from repsim import (
    BadMagicError,
    CkaHeatmap,
    DumpFormatError,
    DuplicateNameError,
    InvalidFieldError,
    Layer,
    LayerPosition,
    LayerSet,
    PredictionEnsemble,
    TrailingDataError,
    TruncatedFileError,
    UnsupportedVersionError,
    emit_heatmap,
    read_activation_dump,
    read_heatmap_csv,
    read_prediction_dump,
    write_activation_dump,
    write_heatmap_image,
    write_matrix_csv,
    write_prediction_dump,
)


def naf_bytes(layers, example_count=None, version=1, magic=b"NAF1"):
    """Build NAF1 bytes from (name, stage, position, dtype_tag, array) tuples."""
    if example_count is None:
        example_count = layers[0][4].shape[0]
    out = bytearray(magic)
    out += struct.pack("<H", version)
    out += struct.pack("<II", example_count, len(layers))
    for name, stage, position, dtype_tag, arr in layers:
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += struct.pack("<BBB", stage, position, dtype_tag)
        out += struct.pack("<I", arr.shape[1])
        dtype = "<f4" if dtype_tag == 0 else "<f8"
        out += np.ascontiguousarray(arr, dtype=dtype).tobytes()
    return bytes(out)


def npf_bytes(models, labels, class_count, magic=b"NPF1", example_count=None):
    if example_count is None:
        example_count = len(labels)
    out = bytearray(magic)
    out += struct.pack("<III", len(models), example_count, class_count)
    out += np.asarray(labels, dtype="<u2").tobytes()
    for name, preds in models:
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += np.asarray(preds, dtype="<u2").tobytes()
    return bytes(out)


# ---- NAF1 golden files --------------------------------------------------------

def test_naf_golden_parse(tmp_path):
    a = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], dtype=np.float64)
    b = np.array([[1.5], [2.5], [-3.5]], dtype=np.float32)
    data = naf_bytes([
        ("enc.0", 0, 1, 1, a),
        ("enc.1", 3, 0, 0, b),
    ])
    path = tmp_path / "net.naf"
    path.write_bytes(data)
    layers = read_activation_dump(path)
    assert layers.names == ("enc.0", "enc.1")
    assert layers.example_count == 3
    assert np.array_equal(layers["enc.0"].activations, a)
    assert layers["enc.0"].position == LayerPosition.POST_RESIDUAL
    assert layers["enc.0"].stage == 0
    assert layers["enc.0"].stored_dtype == "f64"
    assert np.array_equal(layers["enc.1"].activations, b.astype(np.float64))
    assert layers["enc.1"].stage == 3
    assert layers["enc.1"].position == LayerPosition.PRE_RESIDUAL
    assert layers["enc.1"].stored_dtype == "f32"


def test_naf_roundtrip_f64_exact(tmp_path, rng):
    layers = LayerSet([
        Layer("alpha", rng.normal(size=(7, 3)), stage=1,
              position=LayerPosition.OTHER, stored_dtype="f64"),
        Layer("beta", rng.normal(size=(7, 5)), stage=200,
              position=LayerPosition.POST_RESIDUAL, stored_dtype="f64"),
    ])
    path = tmp_path / "rt.naf"
    write_activation_dump(layers, path)
    back = read_activation_dump(path)
    for name in layers.names:
        assert np.array_equal(back[name].activations, layers[name].activations)
        assert back[name].stage == layers[name].stage
        assert back[name].position == layers[name].position


def test_naf_roundtrip_f32_stable(tmp_path, rng):
    x = rng.normal(size=(5, 4))
    layers = LayerSet([Layer("only", x, stored_dtype="f32")])
    p1 = tmp_path / "a.naf"
    p2 = tmp_path / "b.naf"
    write_activation_dump(layers, p1)
    once = read_activation_dump(p1)
    write_activation_dump(once, p2)
    twice = read_activation_dump(p2)
    # one f32 quantization, then bit-stable
    assert np.array_equal(once["only"].activations, twice["only"].activations)
    assert np.array_equal(once["only"].activations, x.astype(np.float32).astype(np.float64))


def test_naf_error_classes(tmp_path, rng):
    a = rng.normal(size=(4, 2))
    good = naf_bytes([("l0", 0, 0, 1, a)])

    def parse(data):
        p = tmp_path / "case.naf"
        p.write_bytes(data)
        return read_activation_dump(p)

    with pytest.raises(BadMagicError):
        parse(b"XXXX" + good[4:])
    with pytest.raises(UnsupportedVersionError):
        parse(naf_bytes([("l0", 0, 0, 1, a)], version=2))
    with pytest.raises(TruncatedFileError):
        parse(good[:-1])
    with pytest.raises(TruncatedFileError):
        parse(good[:10])
    with pytest.raises(TrailingDataError):
        parse(good + b"\x00")
    with pytest.raises(DuplicateNameError):
        parse(naf_bytes([("l0", 0, 0, 1, a), ("l0", 0, 0, 1, a)]))
    with pytest.raises(InvalidFieldError):
        parse(naf_bytes([("l0", 0, 3, 1, a)]))  # position tag 3
    with pytest.raises(InvalidFieldError):
        parse(naf_bytes([("l0", 0, 0, 2, a)]))  # dtype tag 2
    with pytest.raises(InvalidFieldError):
        parse(naf_bytes([], example_count=4))  # zero layers
    bad = a.copy()
    bad[1, 1] = np.nan
    with pytest.raises(InvalidFieldError):
        parse(naf_bytes([("l0", 0, 0, 1, bad)]))
    # non-UTF8 name bytes (length field sits at 14:16, the name follows)
    raw = bytearray(naf_bytes([("ab", 0, 0, 1, a)]))
    raw[16:18] = b"\xff\xfe"
    with pytest.raises(InvalidFieldError):
        parse(bytes(raw))


def test_naf_zero_examples(tmp_path):
    data = bytearray(b"NAF1")
    data += struct.pack("<H", 1)
    data += struct.pack("<II", 0, 1)
    p = tmp_path / "zero.naf"
    p.write_bytes(bytes(data))
    with pytest.raises(InvalidFieldError):
        read_activation_dump(p)


def test_naf_write_rejects_wide_stage(tmp_path, rng):
    layers = LayerSet([Layer("l", rng.normal(size=(4, 2)), stage=256)])
    with pytest.raises(InvalidFieldError):
        write_activation_dump(layers, tmp_path / "x.naf")


# ---- NPF1 ---------------------------------------------------------------------

def test_npf_golden_parse(tmp_path):
    labels = [0, 2, 1, 1]
    data = npf_bytes(
        [("m0", [0, 2, 1, 0]), ("m1", [1, 2, 1, 1])],
        labels,
        class_count=3,
    )
    path = tmp_path / "runs.npf"
    path.write_bytes(data)
    ens = read_prediction_dump(path)
    assert ens.group_name == "runs"
    assert ens.class_count == 3
    assert ens.model_names == ("m0", "m1")
    assert np.array_equal(ens.true_labels, np.array(labels))
    assert np.array_equal(ens.predicted, np.array([[0, 2, 1, 0], [1, 2, 1, 1]]))


def test_npf_group_name_override(tmp_path):
    data = npf_bytes([("m0", [0, 1])], [0, 1], 2)
    path = tmp_path / "x.npf"
    path.write_bytes(data)
    assert read_prediction_dump(path, group_name="custom").group_name == "custom"


def test_npf_roundtrip(tmp_path, rng):
    labels = rng.integers(0, 5, size=20)
    preds = rng.integers(0, 5, size=(3, 20))
    ens = PredictionEnsemble("g", preds, labels, 5, model_names=("a", "b", "c"))
    path = tmp_path / "rt.npf"
    write_prediction_dump(ens, path)
    back = read_prediction_dump(path, group_name="g")
    assert np.array_equal(back.predicted, preds)
    assert np.array_equal(back.true_labels, labels)
    assert back.model_names == ("a", "b", "c")
    assert back.class_count == 5


def test_npf_synthesizes_model_names(tmp_path, rng):
    ens = PredictionEnsemble("g", rng.integers(0, 3, size=(2, 6)), rng.integers(0, 3, size=6), 3)
    path = tmp_path / "anon.npf"
    write_prediction_dump(ens, path)
    back = read_prediction_dump(path)
    assert back.model_names == ("model-0000", "model-0001")


def test_npf_error_classes(tmp_path):
    labels = [0, 1, 1]
    good = npf_bytes([("m0", [0, 1, 0])], labels, 2)

    def parse(data):
        p = tmp_path / "case.npf"
        p.write_bytes(data)
        return read_prediction_dump(p)

    with pytest.raises(BadMagicError):
        parse(b"NAF1" + good[4:])
    with pytest.raises(TruncatedFileError):
        parse(good[:-2])
    with pytest.raises(TrailingDataError):
        parse(good + b"ZZ")
    with pytest.raises(InvalidFieldError):
        parse(npf_bytes([("m0", [0, 1, 2])], labels, 2))  # prediction >= classCount
    with pytest.raises(InvalidFieldError):
        parse(npf_bytes([("m0", [0, 1, 0])], [0, 1, 2], 2))  # label >= classCount
    with pytest.raises(DuplicateNameError):
        parse(npf_bytes([("m0", [0, 1, 0]), ("m0", [0, 1, 1])], labels, 2))
    with pytest.raises(InvalidFieldError):
        parse(npf_bytes([], labels, 2))  # zero models


# ---- fuzzing helper sanity ------------------------------------------------------

def test_fuzz_random_mutations_never_crash(tmp_path, rng):
    a = rng.normal(size=(5, 3))
    base_naf = naf_bytes([("layer", 1, 2, 1, a)])
    base_npf = npf_bytes([("m", [0, 1, 2, 1, 0])], [0, 1, 2, 1, 0], 3)
    for base, reader, suffix in (
        (base_naf, read_activation_dump, "naf"),
        (base_npf, read_prediction_dump, "npf"),
    ):
        for i in range(100):
            data = bytearray(base)
            for _ in range(int(rng.integers(1, 6))):
                data[int(rng.integers(0, len(data)))] = int(rng.integers(0, 256))
            p = tmp_path / f"fuzz{i}.{suffix}"
            p.write_bytes(bytes(data))
            try:
                reader(p)
            except DumpFormatError:
                pass  # typed rejection is the contract


# ---- CSV / PGM -------------------------------------------------------------------

def test_matrix_csv_roundtrip_exact(tmp_path, rng):
    values = rng.normal(size=(3, 4))
    h = CkaHeatmap(("r0", "r1", "r2"), ("c0", "c1", "c2", "c3"), values)
    path = tmp_path / "h.csv"
    emit_heatmap(h, path)
    back = read_heatmap_csv(path)
    assert back.layer_names_a == h.layer_names_a
    assert back.layer_names_b == h.layer_names_b
    assert np.array_equal(back.values, values)  # repr round-trips floats


def test_matrix_csv_quotes_commas(tmp_path):
    h = CkaHeatmap(("a,b",), ("c",), np.array([[0.5]]))
    path = tmp_path / "q.csv"
    emit_heatmap(h, path)
    back = read_heatmap_csv(path)
    assert back.layer_names_a == ("a,b",)


def test_matrix_csv_nan_roundtrip(tmp_path):
    h = CkaHeatmap(("a", "b"), ("a", "b"), np.array([[1.0, np.nan], [np.nan, 1.0]]),
                   degenerate_layers=("b",))
    path = tmp_path / "n.csv"
    emit_heatmap(h, path)
    back = read_heatmap_csv(path)
    assert np.isnan(back.values[0, 1]) and np.isnan(back.values[1, 0])
    assert back.values[0, 0] == 1.0


def test_read_heatmap_csv_malformed(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("layer,a,b\nx,0.5\n")
    with pytest.raises(InvalidFieldError):
        read_heatmap_csv(p)
    p.write_text("layer,a\nx,notanumber\n")
    with pytest.raises(InvalidFieldError):
        read_heatmap_csv(p)
    p.write_text("")
    with pytest.raises(InvalidFieldError):
        read_heatmap_csv(p)


def test_pgm_golden(tmp_path):
    values = np.array([
        [0.0, 1.0],
        [0.5, 2.0],   # 0.5 -> 127.5 -> 128 (ties to even); 2.0 clamps to 255
    ])
    h = CkaHeatmap(("r0", "r1"), ("c0", "c1"), values)
    path = tmp_path / "img.pgm"
    write_heatmap_image(h, path)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n2 2\n255\n")
    pixels = raw[len(b"P5\n2 2\n255\n"):]
    # bottom row of the matrix is written first (y axis points up)
    assert list(pixels) == [128, 255, 0, 255]


def test_pgm_nan_maps_to_zero(tmp_path):
    h = CkaHeatmap(("r",), ("c", "d"), np.array([[np.nan, 1.0]]))
    path = tmp_path / "nan.pgm"
    write_heatmap_image(h, path)
    assert list(path.read_bytes()[-2:]) == [0, 255]


def test_emit_heatmap_writes_both(tmp_path, rng):
    h = CkaHeatmap(("a",), ("b",), rng.uniform(size=(1, 1)))
    csv_path = tmp_path / "h.csv"
    img_path = tmp_path / "h.pgm"
    emit_heatmap(h, csv_path, img_path)
    assert csv_path.exists() and img_path.exists()


def test_write_matrix_csv_stream(tmp_path):
    import io as _io

    buf = _io.StringIO()
    write_matrix_csv(("r",), ("c1", "c2"), np.array([[0.25, 0.75]]), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",c1,c2"
    assert lines[1] == "r,0.25,0.75"
