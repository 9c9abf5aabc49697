"""
Lasso path and Mallows Cp
=========================

LARS traces the whole Lasso path as a piecewise-linear curve; Cp picks a
point on it.  With a noisy design the Cp pick tends to keep many spurious
columns, which is what the MU-selector is meant to fix.
"""

import numpy as np

from muselect import lasso_cp, lasso_path, normalize_design
from muselect.sim import DEFAULT_SIGMA, censor, gen_design, gen_noise, gen_theta

n, p = 100, 200
X = gen_design(n, p, seed=3).matrix
theta = gen_theta(p, 1, 0.5, seed=3)
y = X @ theta + gen_noise(n, DEFAULT_SIGMA, seed=3)

path = lasso_path(X, y)
print(f"{len(path)} knots, lam_max={path.lambdas[0]:.3f}")
for k in path.knots[:5]:
    print(f"  lam={k.lam:.4f} df={k.df} rss={k.rss:.4f}")

clean = lasso_cp(path, sigma=DEFAULT_SIGMA)
print("Cp on the clean design keeps", clean.support.size, "columns")

# same response, design observed through censoring
Z = normalize_design(censor(X, 0.9)).matrix
noisy = lasso_cp(lasso_path(Z, y), sigma=DEFAULT_SIGMA)
print("Cp on the censored design keeps", noisy.support.size, "columns")
