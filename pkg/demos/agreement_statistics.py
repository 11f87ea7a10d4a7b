"""Walkthrough: multi-rater agreement statistics on small rating matrices.

Shows the two chance-corrected coefficients side by side. Both score the
same observed pairwise agreement, but their chance models react very
differently when one category dominates; AC1 stays stable where kappa
collapses, which is exactly why it is the right tool for category-level
reporting.
"""

import numpy as np

from scisent import RatingMatrix, fleiss_kappa, gwet_ac1_overall, gwet_ac1_per_category

# Three raters, two items, two categories: one unanimous item, one 2-1 split.
worked = RatingMatrix(
    items=("item-1", "item-2"),
    categories=("claim", "no-claim"),
    counts=np.array([[3, 0], [1, 2]]),
    raters=3,
)
print("worked example:")
print(f"  fleiss kappa = {fleiss_kappa(worked):.4f}   (observed 2/3, chance 5/9)")
print(f"  gwet AC1     = {gwet_ac1_overall(worked):.4f}   (observed 2/3, chance 4/9)")

# Perfect agreement is exactly 1.0 for both statistics.
perfect = RatingMatrix(
    items=("a", "b", "c"),
    categories=("x", "y"),
    counts=np.array([[3, 0], [0, 3], [3, 0]]),
    raters=3,
)
print("\nperfect agreement:")
print(f"  fleiss kappa = {fleiss_kappa(perfect):.1f}, gwet AC1 = {gwet_ac1_overall(perfect):.1f}")

# Skewed prevalence: 19 unanimous "x" items and a single disagreement.
rows = [[3, 0]] * 19 + [[2, 1]]
skewed = RatingMatrix(
    items=tuple(f"i{n}" for n in range(20)),
    categories=("x", "y"),
    counts=np.array(rows),
    raters=3,
)
print("\nskewed marginals (19 unanimous items, 1 near-miss):")
print(f"  fleiss kappa = {fleiss_kappa(skewed):.4f}   <- punished by the skew")
print(f"  gwet AC1     = {gwet_ac1_overall(skewed):.4f}   <- stays close to the observed agreement")

# Category-level agreement dichotomizes into {category, everything else}.
print("\nper-category AC1 on the skewed matrix:")
for label in skewed.categories:
    print(f"  {label}: {gwet_ac1_per_category(skewed, label):.4f}")
