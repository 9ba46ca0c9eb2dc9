"""
Choosing lambda by cross-validation
===================================

Ten-fold cross-validation over a log-spaced lambda grid, and the three
rules for turning the validation curve into a single lambda.
"""

import numpy as np

from gammanet import Dataset, PathConfig, cross_validate

rng = np.random.default_rng(1)
A = rng.standard_normal((100, 15))
x_true = np.zeros(15)
x_true[[0, 3, 7]] = [1.0, -0.8, 0.5]
b = rng.gamma(1.0, np.exp(A @ x_true))
data = Dataset(A, b)

# 50 lambdas from 0.001 * lambda_max up to lambda_max; folds come from one
# seeded permutation of the rows.
report = cross_validate(data, shape=1.0, alpha=1.0,
                        path=PathConfig(n_lambda=50, n_folds=10, rng_seed=3))

# mean_nll is the average held-out NLL per observation.
j = int(np.argmin(report.mean_nll))
print("grid:", report.grid[0], "...", report.grid[-1])
print("best mean NLL %.4f at lambda %.4g (sd %.4f)"
      % (report.mean_nll[j], report.grid[j], report.sd_nll[j]))

# A crude text plot of the validation curve, large lambda at the top.
lo, hi = report.mean_nll.min(), report.mean_nll.max()
for lam, m in list(zip(report.grid, report.mean_nll))[::-5]:
    bar = int(40 * (m - lo) / (hi - lo + 1e-300))
    print(f"{lam:10.4g} |{'#' * bar}")

# Each rule's lambda has already been refitted on the full data.
for rule, (lam, fit) in report.selected.items():
    support = np.flatnonzero(fit.coefficients)
    print(f"{rule:>10}: lambda {lam:.4g}, support {support.tolist()}")

# The 1sd and percentile rules trade a little fit for a sparser model.
print("true support", np.flatnonzero(x_true).tolist())
