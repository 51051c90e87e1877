"""Ensemble prediction statistics.

Given two groups of trained models evaluated on the same examples, this
module compares them at the example level (fraction of models correct
per example), at the class level (Welch's t-test per class with
Holm-Sidak correction across the family), and through nested factor
logistic regressions whose residual variances feed the pseudo-R-squared
ratio v2 = (Var_A - Var_B)/(Var_A - Var_C).

Observation layout for the factor models: group a's models first, then
group b's, each model contributing its examples in dump order. All fits
are deterministic and single threaded.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from scipy.special import expit, stdtr

from .exceptions import (
    DegenerateInputError,
    DimensionMismatchError,
    NonFiniteValueError,
    NumericalError,
)

__all__ = [
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
]


@dataclass(frozen=True)
class PredictionEnsemble:
    """Predicted labels for a group of models on a shared example set.

    ``predicted`` is models x examples; ``true_labels`` has one entry
    per example. All labels must lie in [0, class_count).
    """

    group_name: str
    predicted: np.ndarray
    true_labels: np.ndarray
    class_count: int
    model_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        predicted = np.asarray(self.predicted)
        true_labels = np.asarray(self.true_labels)
        if predicted.ndim != 2:
            raise DimensionMismatchError("predicted must be models x examples")
        if true_labels.ndim != 1 or true_labels.shape[0] != predicted.shape[1]:
            raise DimensionMismatchError("true_labels must align with predicted columns")
        if predicted.shape[0] < 1 or predicted.shape[1] < 1:
            raise DimensionMismatchError("ensemble needs at least one model and one example")
        for arr, what in ((predicted, "predicted"), (true_labels, "true_labels")):
            if not np.issubdtype(arr.dtype, np.integer):
                if not np.all(arr == arr.astype(np.int64)):
                    raise DimensionMismatchError(f"{what} must hold integer class labels")
        predicted = predicted.astype(np.int64)
        true_labels = true_labels.astype(np.int64)
        if self.class_count < 1:
            raise DimensionMismatchError("class_count must be positive")
        for arr, what in ((predicted, "predicted"), (true_labels, "true_labels")):
            if arr.min() < 0 or arr.max() >= self.class_count:
                raise DimensionMismatchError(f"{what} outside [0, class_count)")
        if self.model_names is not None and len(self.model_names) != predicted.shape[0]:
            raise DimensionMismatchError("model_names length must equal model count")
        object.__setattr__(self, "predicted", predicted)
        object.__setattr__(self, "true_labels", true_labels)

    @property
    def model_count(self) -> int:
        return self.predicted.shape[0]

    @property
    def example_count(self) -> int:
        return self.predicted.shape[1]

    @property
    def correct(self) -> np.ndarray:
        """Boolean models x examples correctness indicators."""
        return self.predicted == self.true_labels[np.newaxis, :]


def per_example_accuracy(ensemble: PredictionEnsemble) -> np.ndarray:
    """Fraction of models that predict each example correctly."""
    return ensemble.correct.mean(axis=0)


def model_accuracies(ensemble: PredictionEnsemble) -> np.ndarray:
    """Overall accuracy of each model in the ensemble."""
    return ensemble.correct.mean(axis=1)


def concat_ensembles(
    a: PredictionEnsemble, b: PredictionEnsemble, group_name: str | None = None
) -> PredictionEnsemble:
    """Pool two ensembles over the same examples into one group."""
    _check_shared_examples(a, b)
    names = None
    if a.model_names is not None and b.model_names is not None:
        names = a.model_names + b.model_names
    return PredictionEnsemble(
        group_name=group_name if group_name is not None else f"{a.group_name}+{b.group_name}",
        predicted=np.vstack([a.predicted, b.predicted]),
        true_labels=a.true_labels,
        class_count=a.class_count,
        model_names=names,
    )


@dataclass(frozen=True)
class WelchResult:
    """Welch's two-sample t-test. ``degenerate`` flags the zero-variance
    fallback (t pinned to 0 or signed infinity, p to 1 or 0)."""

    t: float
    df: float
    p: float
    degenerate: bool = False


def welch_t_test(a: np.ndarray, b: np.ndarray) -> WelchResult:
    """Two-sided Welch's t-test with Welch-Satterthwaite degrees of freedom."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size < 2 or b.size < 2:
        raise DegenerateInputError("welch_t_test needs at least two values per sample")
    if not np.isfinite(a).all() or not np.isfinite(b).all():
        raise NonFiniteValueError("welch_t_test samples must be finite")
    na, nb = a.size, b.size
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    diff = a.mean() - b.mean()
    se2 = va / na + vb / nb
    if se2 == 0.0:
        # both samples constant: the statistic has no spread to scale by
        if diff == 0.0:
            return WelchResult(t=0.0, df=math.nan, p=1.0, degenerate=True)
        return WelchResult(t=math.copysign(math.inf, diff), df=math.nan, p=0.0, degenerate=True)
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    t = diff / math.sqrt(se2)
    p = 2.0 * float(stdtr(df, -abs(t)))
    return WelchResult(t=float(t), df=float(df), p=min(p, 1.0))


def holm_sidak(p_values: np.ndarray) -> np.ndarray:
    """Step-down Holm-Sidak adjustment, returned in the input order.

    Sorted ascending, p_(i) becomes 1 - (1 - p_(i))^(m - i + 1); a
    running maximum enforces monotonicity and the result is clipped
    to 1.
    """
    p = np.asarray(p_values, dtype=np.float64).ravel()
    if p.size == 0:
        return p.copy()
    if not np.isfinite(p).all():
        raise NonFiniteValueError("p-values must be finite")
    if p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("p-values must lie in [0, 1]")
    order = np.argsort(p, kind="stable")
    exponents = np.arange(p.size, 0, -1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        adjusted_sorted = -np.expm1(exponents * np.log1p(-p[order]))
    adjusted_sorted[p[order] == 1.0] = 1.0  # log1p(-1) path
    adjusted_sorted = np.minimum(np.maximum.accumulate(adjusted_sorted), 1.0)
    out = np.empty_like(adjusted_sorted)
    out[order] = adjusted_sorted
    return out


@dataclass(frozen=True)
class ClassComparison:
    """One class (or named class grouping) in a two-group comparison."""

    name: str
    class_ids: tuple[int, ...]
    example_count: int
    mean_accuracy_a: float
    mean_accuracy_b: float
    difference: float
    sem_a: float
    sem_b: float
    t: float
    df: float
    p_raw: float
    p_adjusted: float
    significant: bool


@dataclass(frozen=True)
class GroupComparison:
    """Example- and class-level comparison of two prediction ensembles."""

    group_a: str
    group_b: str
    per_example_acc_a: np.ndarray
    per_example_acc_b: np.ndarray
    mean_accuracy_a: float
    mean_accuracy_b: float
    classes: tuple[ClassComparison, ...]
    class_sets: tuple[ClassComparison, ...]
    alpha: float

    @property
    def example_level_scatter(self) -> np.ndarray:
        """Paired per-example accuracies, examples x 2 (group a, group b)."""
        return np.stack([self.per_example_acc_a, self.per_example_acc_b], axis=1)


def _check_shared_examples(a: PredictionEnsemble, b: PredictionEnsemble) -> None:
    if a.example_count != b.example_count or not np.array_equal(a.true_labels, b.true_labels):
        raise DimensionMismatchError("ensembles must share the example set and labels")
    if a.class_count != b.class_count:
        raise DimensionMismatchError("ensembles must share the class count")


def _per_model_subset_accuracy(ensemble: PredictionEnsemble, mask: np.ndarray) -> np.ndarray:
    return ensemble.correct[:, mask].mean(axis=1)


def _sem(values: np.ndarray) -> float:
    if values.size < 2:
        return math.nan
    return float(values.std(ddof=1) / math.sqrt(values.size))


def class_level_comparison(
    a: PredictionEnsemble,
    b: PredictionEnsemble,
    class_sets: dict[str, tuple[int, ...]] | None = None,
    alpha: float = 0.05,
) -> GroupComparison:
    """Compare two model groups per class and per named class grouping.

    Per-class accuracy is computed per model and then averaged, so the
    spread feeding Welch's test is across models. Adjusted p-values are
    Holm-Sidak, applied separately within the per-class family and
    within the named-grouping family. Needs at least two models per
    group and at least one example per tested class.
    """
    _check_shared_examples(a, b)

    def compare_family(named_ids: list[tuple[str, tuple[int, ...]]]) -> tuple[ClassComparison, ...]:
        rows = []
        for name, ids in named_ids:
            mask = np.isin(a.true_labels, ids)
            count = int(mask.sum())
            if count == 0:
                raise DegenerateInputError(f"class grouping {name!r} has no examples")
            acc_a = _per_model_subset_accuracy(a, mask)
            acc_b = _per_model_subset_accuracy(b, mask)
            welch = welch_t_test(acc_a, acc_b)
            rows.append((name, ids, count, acc_a, acc_b, welch))
        adjusted = holm_sidak(np.array([row[5].p for row in rows]))
        return tuple(
            ClassComparison(
                name=name,
                class_ids=tuple(int(c) for c in ids),
                example_count=count,
                mean_accuracy_a=float(acc_a.mean()),
                mean_accuracy_b=float(acc_b.mean()),
                difference=float(acc_a.mean() - acc_b.mean()),
                sem_a=_sem(acc_a),
                sem_b=_sem(acc_b),
                t=welch.t,
                df=welch.df,
                p_raw=welch.p,
                p_adjusted=float(adj),
                significant=bool(adj < alpha),
            )
            for (name, ids, count, acc_a, acc_b, welch), adj in zip(rows, adjusted)
        )

    per_class = compare_family([(str(c), (c,)) for c in range(a.class_count)])
    named = ()
    if class_sets:
        for name, ids in class_sets.items():
            ids_arr = np.asarray(ids, dtype=np.int64)
            if ids_arr.size == 0 or ids_arr.min() < 0 or ids_arr.max() >= a.class_count:
                raise DimensionMismatchError(f"class set {name!r} has out-of-range class ids")
        named = compare_family([(name, tuple(ids)) for name, ids in class_sets.items()])

    return GroupComparison(
        group_a=a.group_name,
        group_b=b.group_name,
        per_example_acc_a=per_example_accuracy(a),
        per_example_acc_b=per_example_accuracy(b),
        mean_accuracy_a=float(model_accuracies(a).mean()),
        mean_accuracy_b=float(model_accuracies(b).mean()),
        classes=per_class,
        class_sets=named,
        alpha=alpha,
    )


@dataclass(frozen=True)
class FactorModelFit:
    """Fitted factor logistic regression on prediction correctness.

    ``residual_variance`` is Var_Q = sum((y - pi)^2)/n; ``aic`` is
    2k - 2 logLik with k counting identifiable parameters after one
    reference level is dropped per factor (intercept included).
    ``fitted_probabilities`` follows the module-level observation
    layout.
    """

    model_id: str
    residual_variance: float
    aic: float
    coefficient_count: int
    log_likelihood: float
    n_observations: int
    iterations: int
    gradient_norm: float
    ridge: float
    fitted_probabilities: np.ndarray = field(repr=False)


def _factor_design(
    a: PredictionEnsemble, b: PredictionEnsemble, model_id: str
) -> tuple[scipy.sparse.csr_matrix, np.ndarray, int]:
    """One-hot design matrix, outcome vector, and parameter count."""
    m = a.example_count
    n_classes = a.class_count
    y = np.concatenate([a.correct.ravel(), b.correct.ravel()]).astype(np.float64)
    n = y.size

    example = np.tile(np.arange(m, dtype=np.int64), a.model_count + b.model_count)
    group = np.concatenate(
        [np.zeros(a.model_count * m, dtype=np.int64), np.ones(b.model_count * m, dtype=np.int64)]
    )
    if model_id == "A":
        factors = [(example, m), (group, 2)]
    elif model_id == "B":
        cls = a.true_labels[example]
        factors = [(example, m), (group * n_classes + cls, 2 * n_classes)]
    elif model_id == "C":
        factors = [(group * m + example, 2 * m)]
    else:
        raise ValueError(f"unknown factor model id {model_id!r}")

    # intercept plus, per factor, indicators for levels 1..L-1 (level 0
    # is the reference)
    cols = [np.zeros(n, dtype=np.int64)]
    rows = [np.arange(n, dtype=np.int64)]
    offset = 1
    for levels, level_count in factors:
        keep = levels > 0
        rows.append(np.arange(n, dtype=np.int64)[keep])
        cols.append(offset + levels[keep] - 1)
        offset += level_count - 1
    design = scipy.sparse.csr_matrix(
        (
            np.ones(sum(r.size for r in rows)),
            (np.concatenate(rows), np.concatenate(cols)),
        ),
        shape=(n, offset),
    )
    return design, y, offset


def _penalized_loglik(eta: np.ndarray, y: np.ndarray, beta: np.ndarray, ridge: float) -> float:
    # y*eta - softplus(eta), softplus via logaddexp for stability
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)) - 0.5 * ridge * np.dot(beta, beta))


def fit_factor_model(
    a: PredictionEnsemble,
    b: PredictionEnsemble,
    model_id: str,
    ridge: float = 1e-6,
    gradient_tolerance: float = 1e-6,
    max_iterations: int = 500,
) -> FactorModelFit:
    """Fit one of the nested factor logistic models by damped Newton.

    Model A regresses correctness on example + group main effects,
    model B on example + group-by-class cells, and model C on the full
    example-by-group interaction. The uniform ridge keeps the Newton
    system nonsingular under separation (cells that are all correct or
    all wrong) and under the collinearity the factor encodings carry;
    its value is recorded on the fit. Iterates until the penalized
    log-likelihood gradient sup-norm falls below ``gradient_tolerance``.
    """
    _check_shared_examples(a, b)
    design, y, k = _factor_design(a, b, model_id)
    n = y.size

    beta = np.zeros(k)
    eta = np.zeros(n)
    objective = _penalized_loglik(eta, y, beta, ridge)
    iterations = 0
    grad_norm = math.inf
    for iterations in range(1, max_iterations + 1):
        pi = expit(eta)
        grad = design.T @ (y - pi) - ridge * beta
        grad_norm = float(np.abs(grad).max())
        if grad_norm <= gradient_tolerance:
            break
        w = pi * (1.0 - pi)
        hessian = (design.T.multiply(w) @ design).tocsc()
        hessian += ridge * scipy.sparse.identity(k, format="csc")
        step = scipy.sparse.linalg.spsolve(hessian, grad)
        if not np.isfinite(step).all():
            raise NumericalError(f"factor model {model_id}: Newton step is non-finite")
        scale = 1.0
        for _ in range(40):
            candidate = beta + scale * step
            cand_eta = design @ candidate
            cand_obj = _penalized_loglik(cand_eta, y, candidate, ridge)
            if cand_obj >= objective:
                beta, eta, objective = candidate, cand_eta, cand_obj
                break
            scale *= 0.5
        else:
            raise NumericalError(f"factor model {model_id}: line search stalled")
    else:
        raise NumericalError(
            f"factor model {model_id}: gradient norm {grad_norm:.3e} after "
            f"{max_iterations} iterations (tolerance {gradient_tolerance:.1e})"
        )

    pi = expit(eta)
    log_likelihood = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    return FactorModelFit(
        model_id=model_id,
        residual_variance=float(np.sum((y - pi) ** 2) / n),
        aic=2.0 * k - 2.0 * log_likelihood,
        coefficient_count=k,
        log_likelihood=log_likelihood,
        n_observations=n,
        iterations=iterations,
        gradient_norm=grad_norm,
        ridge=ridge,
        fitted_probabilities=pi,
    )


def pseudo_r_squared(
    fit_a: FactorModelFit, fit_b: FactorModelFit, fit_c: FactorModelFit
) -> float:
    """v2 = (Var_A - Var_B)/(Var_A - Var_C).

    The ratio of residual-variance reductions: how much of the
    example-by-group signal the group-by-class structure explains.
    Requires Var_A > Var_C; equality means there is no example-by-group
    signal to apportion.
    """
    for fit, expected in ((fit_a, "A"), (fit_b, "B"), (fit_c, "C")):
        if fit.model_id != expected:
            raise ValueError(f"expected factor model {expected}, got {fit.model_id!r}")
    if not (fit_a.n_observations == fit_b.n_observations == fit_c.n_observations):
        raise DimensionMismatchError("factor model fits cover different observation sets")
    if not fit_a.residual_variance > fit_c.residual_variance:
        raise DegenerateInputError(
            "pseudo_r_squared undefined: Var_A does not exceed Var_C "
            f"({fit_a.residual_variance!r} vs {fit_c.residual_variance!r})"
        )
    return (fit_a.residual_variance - fit_b.residual_variance) / (
        fit_a.residual_variance - fit_c.residual_variance
    )
