"""repsim: representational similarity analysis for neural network layers.

Core capabilities: full-batch and minibatch linear CKA built on the
unbiased HSIC estimator, spectral decomposition of representations and
the principal-component view of CKA, block-structure detection in
layer-by-layer heatmaps, linear probes, ensemble prediction statistics,
and a binary dump format pair (NAF1 activations, NPF1 predictions) with
a command-line interface over all of it.

Everything is plain numpy/scipy on dumped activations; no deep-learning
runtime is required or imported.
"""

from .blocks import (
    Block,
    BlockReport,
    SeedVariability,
    block_seed_variability,
    detect_blocks,
)
from .cka import CkaHeatmap, MinibatchAccumulator, cka_full, cka_heatmap, cka_minibatch
from .exceptions import (
    BadMagicError,
    DegenerateInputError,
    DimensionMismatchError,
    DumpFormatError,
    DuplicateNameError,
    InvalidFieldError,
    NonFiniteValueError,
    NumericalError,
    RepsimError,
    TrailingDataError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .gram import GramMatrix, center_gram, gram, hsic0, hsic1
from .layers import Layer, LayerPosition, LayerSet
from .linalg import SvdResult, center_columns, svd
from .predictions import (
    ClassComparison,
    FactorModelFit,
    GroupComparison,
    PredictionEnsemble,
    WelchResult,
    class_level_comparison,
    concat_ensembles,
    fit_factor_model,
    holm_sidak,
    model_accuracies,
    per_example_accuracy,
    pseudo_r_squared,
    welch_t_test,
)
from .probes import ProbeConfig, ProbeResult, probe_curve, train_probe
from .io import (
    emit_heatmap,
    read_activation_dump,
    read_heatmap_csv,
    read_prediction_dump,
    write_activation_dump,
    write_heatmap_image,
    write_matrix_csv,
    write_prediction_dump,
)
from .spectral import (
    SparsityStats,
    SpectralSummary,
    cka_spectral,
    first_pc_cosine_map,
    relu_sparsity,
    remove_first_pc,
    spectral_summary,
    variance_explained,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # exceptions
    "RepsimError",
    "DimensionMismatchError",
    "DegenerateInputError",
    "NonFiniteValueError",
    "NumericalError",
    "DumpFormatError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedFileError",
    "TrailingDataError",
    "DuplicateNameError",
    "InvalidFieldError",
    # linear algebra and grams
    "SvdResult",
    "svd",
    "center_columns",
    "GramMatrix",
    "gram",
    "center_gram",
    "hsic0",
    "hsic1",
    # layers
    "Layer",
    "LayerPosition",
    "LayerSet",
    # cka
    "cka_full",
    "cka_minibatch",
    "MinibatchAccumulator",
    "cka_heatmap",
    "CkaHeatmap",
    # spectral
    "SpectralSummary",
    "spectral_summary",
    "cka_spectral",
    "variance_explained",
    "first_pc_cosine_map",
    "remove_first_pc",
    "relu_sparsity",
    "SparsityStats",
    # blocks
    "Block",
    "BlockReport",
    "detect_blocks",
    "block_seed_variability",
    "SeedVariability",
    # probes
    "ProbeConfig",
    "ProbeResult",
    "train_probe",
    "probe_curve",
    # predictions
    "PredictionEnsemble",
    "WelchResult",
    "ClassComparison",
    "GroupComparison",
    "FactorModelFit",
    "per_example_accuracy",
    "model_accuracies",
    "concat_ensembles",
    "welch_t_test",
    "holm_sidak",
    "class_level_comparison",
    "fit_factor_model",
    "pseudo_r_squared",
    # io
    "read_activation_dump",
    "write_activation_dump",
    "read_prediction_dump",
    "write_prediction_dump",
    "emit_heatmap",
    "write_heatmap_image",
    "write_matrix_csv",
    "read_heatmap_csv",
]
