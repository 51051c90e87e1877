"""Command-line surface.

Subcommands map one-to-one onto the library's analyses:

- ``heatmap``: pairwise layer CKA from one or two NAF1 dumps, to CSV
  and optionally a P5 graymap image.
- ``spectral``: per-layer variance-explained table; optional first-PC
  cosine map CSV and a PC1-removed copy of the dump.
- ``blocks``: block detection on a previously emitted heatmap CSV.
- ``probe``: linear probe accuracy per layer.
- ``preds compare`` / ``preds factor-models``: ensemble comparisons
  from NPF1 dumps.
- ``sparsity``: ReLU sparsity statistics per layer.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
malformed inputs, degenerate data). All randomness is controlled by
explicit seed flags; identical invocations give identical bytes.
"""

import argparse
import contextlib
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .blocks import detect_blocks
from .cka import cka_heatmap
from .exceptions import RepsimError
from .io import (
    read_activation_dump,
    read_heatmap_csv,
    read_prediction_dump,
    write_activation_dump,
    write_heatmap_image,
    write_matrix_csv,
    NPF_MAGIC,
)
from .layers import Layer, LayerSet
from .predictions import (
    class_level_comparison,
    fit_factor_model,
    pseudo_r_squared,
)
from .probes import ProbeConfig, probe_curve
from .spectral import relu_sparsity, remove_first_pc, first_pc_cosine_map, variance_explained

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


@contextlib.contextmanager
def _out_stream(path):
    """Text stream for --out, falling back to stdout."""
    if path is None:
        yield sys.stdout
    else:
        with Path(path).open("w", encoding="utf-8", newline="") as handle:
            yield handle


def _cmd_heatmap(args) -> int:
    layers_a = read_activation_dump(args.input)
    layers_b = read_activation_dump(args.input_b) if args.input_b else None
    heatmap = cka_heatmap(
        layers_a,
        layers_b,
        mode=args.mode,
        estimator=args.estimator,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
    )
    with _out_stream(args.out) as out:
        write_matrix_csv(heatmap.layer_names_a, heatmap.layer_names_b, heatmap.values, out)
    if args.image:
        write_heatmap_image(heatmap, args.image)
    for name in heatmap.degenerate_layers:
        print(f"warning: layer {name!r} has degenerate activations; "
              "its row and column are nan", file=sys.stderr)
    return 0


def _cmd_spectral(args) -> int:
    layers = read_activation_dump(args.input)
    with _out_stream(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["layer", "stage", "position"]
                        + [f"variance_fraction_{i + 1}" for i in range(args.top_k)])
        for layer in layers:
            fractions = list(variance_explained(layer.activations, top_k=args.top_k))
            fractions += [0.0] * (args.top_k - len(fractions))  # rank < top_k
            writer.writerow(
                [layer.name, layer.stage, layer.position.name.lower()]
                + [repr(float(f)) for f in fractions]
            )
    if args.cosine_map_out:
        cosine = first_pc_cosine_map(layers)
        with Path(args.cosine_map_out).open("w", encoding="utf-8", newline="") as handle:
            write_matrix_csv(layers.names, layers.names, cosine, handle)
    if args.remove_pc1_out:
        stripped = LayerSet([
            Layer(
                name=layer.name,
                activations=remove_first_pc(layer.activations),
                stage=layer.stage,
                position=layer.position,
                stored_dtype="f64",  # derived values, keep full precision
            )
            for layer in layers
        ])
        write_activation_dump(stripped, args.remove_pc1_out)
    return 0


def _cmd_blocks(args) -> int:
    heatmap = read_heatmap_csv(args.heatmap)
    report = detect_blocks(heatmap, threshold=args.threshold, min_size=args.min_size)
    with _out_stream(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["start_layer", "end_layer", "size",
                         "mean_inside_cka", "mean_boundary_contrast"])
        for block in report.blocks:
            writer.writerow([
                block.start_layer, block.end_layer, block.size,
                repr(block.mean_inside_cka), repr(block.mean_boundary_contrast),
            ])
    return 0


def _read_labels(path) -> np.ndarray:
    """Labels from an NPF1 dump's true-label record or a text file of
    whitespace-separated integers."""
    path = Path(path)
    with path.open("rb") as handle:
        magic = handle.read(4)
    if magic == NPF_MAGIC:
        return read_prediction_dump(path).true_labels
    return np.array([int(token) for token in path.read_text().split()], dtype=np.int64)


def _cmd_probe(args) -> int:
    layers = read_activation_dump(args.input)
    labels = _read_labels(args.labels)
    config = ProbeConfig(split_seed=args.split_seed)
    results = probe_curve(layers, labels, config)
    with _out_stream(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["layer", "position", "train_accuracy", "test_accuracy"])
        for result in results:
            writer.writerow([
                result.layer_name, result.position.name.lower(),
                repr(result.train_accuracy), repr(result.test_accuracy),
            ])
    return 0


def _read_class_sets(path):
    if path is None:
        return None
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return {str(name): tuple(int(c) for c in ids) for name, ids in raw.items()}
    except (json.JSONDecodeError, TypeError, ValueError, AttributeError) as exc:
        raise RepsimError(f"{path}: class sets must be a JSON object "
                          "mapping names to class id lists") from exc


def _cmd_preds_compare(args) -> int:
    a = read_prediction_dump(args.a, group_name="a")
    b = read_prediction_dump(args.b, group_name="b")
    comparison = class_level_comparison(a, b, class_sets=_read_class_sets(args.class_sets))
    with _out_stream(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["family", "name", "example_count", "mean_accuracy_a",
                         "mean_accuracy_b", "difference", "t", "df",
                         "p_raw", "p_adjusted", "significant"])
        for family, rows in (("class", comparison.classes), ("set", comparison.class_sets)):
            for row in rows:
                writer.writerow([
                    family, row.name, row.example_count,
                    repr(row.mean_accuracy_a), repr(row.mean_accuracy_b),
                    repr(row.difference), repr(row.t), repr(row.df),
                    repr(row.p_raw), repr(row.p_adjusted), int(row.significant),
                ])
        writer.writerow(["overall", "", a.example_count,
                         repr(comparison.mean_accuracy_a), repr(comparison.mean_accuracy_b),
                         repr(comparison.mean_accuracy_a - comparison.mean_accuracy_b),
                         "", "", "", "", ""])
    return 0


def _cmd_preds_factor_models(args) -> int:
    a = read_prediction_dump(args.a, group_name="a")
    b = read_prediction_dump(args.b, group_name="b")
    fits = {mid: fit_factor_model(a, b, mid) for mid in ("A", "B", "C")}
    v2 = pseudo_r_squared(fits["A"], fits["B"], fits["C"])
    with _out_stream(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["model", "residual_variance", "aic",
                         "coefficient_count", "log_likelihood", "iterations"])
        for mid in ("A", "B", "C"):
            fit = fits[mid]
            writer.writerow([mid, repr(fit.residual_variance), repr(fit.aic),
                             fit.coefficient_count, repr(fit.log_likelihood), fit.iterations])
        writer.writerow(["v2", repr(v2), "", "", "", ""])
    return 0


def _cmd_sparsity(args) -> int:
    layers = read_activation_dump(args.input)
    with _out_stream(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["layer", "fraction_nonzero", "fraction_always_zero",
                         "fraction_always_nonzero"])
        for layer in layers:
            stats = relu_sparsity(layer.activations)
            writer.writerow([layer.name, repr(stats.fraction_nonzero),
                             repr(stats.fraction_always_zero),
                             repr(stats.fraction_always_nonzero)])
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="repsim", description="Representational similarity analyses")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    heatmap = sub.add_parser("heatmap", help="pairwise layer CKA from NAF1 dumps")
    heatmap.add_argument("--input", required=True, help="NAF1 activation dump")
    heatmap.add_argument("--input-b", help="second NAF1 dump for cross-model comparison")
    heatmap.add_argument("--mode", choices=("full", "minibatch"), default="minibatch")
    heatmap.add_argument("--estimator", choices=("biased", "unbiased"), default="unbiased",
                         help="full mode only; minibatch is always unbiased")
    heatmap.add_argument("--batch-size", type=int, default=256)
    heatmap.add_argument("--epochs", type=int, default=10)
    heatmap.add_argument("--seed", type=int, default=0)
    heatmap.add_argument("--out", help="CSV path (default: stdout)")
    heatmap.add_argument("--image", help="P5 graymap path")
    heatmap.set_defaults(func=_cmd_heatmap)

    spectral = sub.add_parser("spectral", help="variance-explained spectrum per layer")
    spectral.add_argument("--input", required=True, help="NAF1 activation dump")
    spectral.add_argument("--top-k", type=int, default=1)
    spectral.add_argument("--out", help="CSV path (default: stdout)")
    spectral.add_argument("--remove-pc1-out", help="write PC1-removed copy of the dump (NAF1)")
    spectral.add_argument("--cosine-map-out", help="write first-PC cosine map CSV")
    spectral.set_defaults(func=_cmd_spectral)

    blocks = sub.add_parser("blocks", help="detect block structure in a heatmap CSV")
    blocks.add_argument("--heatmap", required=True, help="CSV from the heatmap subcommand")
    blocks.add_argument("--threshold", type=float, default=0.9)
    blocks.add_argument("--min-size", type=int, default=5)
    blocks.add_argument("--out", help="CSV path (default: stdout)")
    blocks.set_defaults(func=_cmd_blocks)

    probe = sub.add_parser("probe", help="linear probe accuracy per layer")
    probe.add_argument("--input", required=True, help="NAF1 activation dump")
    probe.add_argument("--labels", required=True,
                       help="NPF1 dump (true labels) or text file of integers")
    probe.add_argument("--split-seed", type=int, default=0)
    probe.add_argument("--out", help="CSV path (default: stdout)")
    probe.set_defaults(func=_cmd_probe)

    preds = sub.add_parser("preds", help="ensemble prediction analyses")
    preds_sub = preds.add_subparsers(dest="preds_command", required=True, metavar="analysis")

    compare = preds_sub.add_parser("compare", help="per-class Welch comparison of two groups")
    compare.add_argument("--a", required=True, help="NPF1 dump for group a")
    compare.add_argument("--b", required=True, help="NPF1 dump for group b")
    compare.add_argument("--class-sets", help="JSON file naming class groupings")
    compare.add_argument("--out", help="CSV path (default: stdout)")
    compare.set_defaults(func=_cmd_preds_compare)

    factor = preds_sub.add_parser("factor-models",
                                  help="nested factor logistic models and pseudo R^2")
    factor.add_argument("--a", required=True, help="NPF1 dump for group a")
    factor.add_argument("--b", required=True, help="NPF1 dump for group b")
    factor.add_argument("--out", help="CSV path (default: stdout)")
    factor.set_defaults(func=_cmd_preds_factor_models)

    sparsity = sub.add_parser("sparsity", help="ReLU sparsity statistics per layer")
    sparsity.add_argument("--input", required=True, help="NAF1 activation dump")
    sparsity.add_argument("--out", help="CSV path (default: stdout)")
    sparsity.set_defaults(func=_cmd_sparsity)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse --help exits 0, usage errors 1
        code = exc.code
        return code if isinstance(code, int) else 1
    try:
        return args.func(args)
    except (RepsimError, OSError) as exc:
        print(f"repsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
