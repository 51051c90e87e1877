"""
Comparing two model populations by their predictions
====================================================

Two groups of models disagree in accuracy on one class only. The demo
runs the per-class Welch comparison with Holm-Sidak adjustment, then
fits the three factor logistic models and reports the pseudo R-squared
apportioning the group difference to class structure.
"""

import numpy as np

from repsim import (
    PredictionEnsemble,
    class_level_comparison,
    fit_factor_model,
    pseudo_r_squared,
)

rng = np.random.default_rng(47)

m, classes, models = 400, 4, 24
labels = rng.integers(0, classes, size=m)

def ensemble(group, accuracy, weak_class=None, weak_rate=0.7):
    predicted = np.empty((models, m), dtype=np.int64)
    for i in range(models):
        correct = rng.random(m) < accuracy
        if weak_class is not None:
            correct &= ~((labels == weak_class) & (rng.random(m) < weak_rate))
        predicted[i] = np.where(correct, labels, (labels + 1) % classes)
    return PredictionEnsemble(group, predicted, labels, classes)

a = ensemble("wide", 0.78)
b = ensemble("narrow", 0.78, weak_class=0)  # identical except on class 0

comparison = class_level_comparison(
    a, b, class_sets={"front": (0, 1), "back": (2, 3)}
)

print(f"overall accuracy: {comparison.mean_accuracy_a:.3f} vs {comparison.mean_accuracy_b:.3f}")
print()
print("class   n     acc a   acc b    diff     p(adj)   significant")
for row in comparison.classes:
    print(
        f"{row.name:>5s} {row.example_count:4d}   {row.mean_accuracy_a:.3f}"
        f"   {row.mean_accuracy_b:.3f}  {row.difference:+.3f}   {row.p_adjusted:8.2e}"
        f"   {'yes' if row.significant else 'no'}"
    )
print()
print("named class sets (separate adjustment family):")
for row in comparison.class_sets:
    print(
        f"{row.name:>6s} classes {row.class_ids}: diff {row.difference:+.3f},"
        f" p(adj) {row.p_adjusted:.2e}, {'significant' if row.significant else 'not significant'}"
    )

# factor models: does class identity explain the group difference?
fits = {mid: fit_factor_model(a, b, mid) for mid in ("A", "B", "C")}
print()
print("model   residual variance        AIC   coefficients")
for mid in ("A", "B", "C"):
    fit = fits[mid]
    print(
        f"{mid:>5s}   {fit.residual_variance:.6f}   {fit.aic:12.1f}"
        f"   {fit.coefficient_count:12d}"
    )

v2 = pseudo_r_squared(fits["A"], fits["B"], fits["C"])
print()
print(f"pseudo R-squared v2 = {v2:.3f}")
print("(the share of the example-by-group signal explained by group-by-class structure;")
print(" the planted effect is purely class-level, so class identity explains most of it.")
print(" the rest is per-cell sampling noise only the saturated model C can absorb,")
print(" so v2 climbs toward 1 as the ensembles grow)")
