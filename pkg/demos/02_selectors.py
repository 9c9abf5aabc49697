"""
MU-selectors on a censored design
=================================

The design is seen only through a clamped copy ``Z``.  The Dantzig selector
trusts ``Z`` and spreads weight over many columns; widening the constraint
by ``delta |theta|_1`` absorbs the design error and a threshold cleans up
the remaining small coefficients.
"""

import numpy as np

from muselect import FeasibleSet, SelectorConfig, dantzig, epsilon_rule, mu_selector_2, threshold
from muselect.sim import DEFAULT_SIGMA, censor, gen_design, gen_noise, gen_theta

n, p, s = 100, 300, 2
X = gen_design(n, p, seed=1).matrix
theta = gen_theta(p, s, 0.5, seed=1)
y = X @ theta + gen_noise(n, DEFAULT_SIGMA, seed=1)
Z = censor(X, 0.9)
print("largest design error |Z - X|_inf =", np.abs(Z - X).max().round(3))
print("true support:", np.flatnonzero(theta))

eps0 = epsilon_rule(0.0, DEFAULT_SIGMA, n, p)
dz = dantzig(Z, y, eps0)
print(f"\nDantzig (eps={eps0:.4f}): {dz.support.size} nonzeros")

for delta in (0.05, 0.1):
    cfg = SelectorConfig("MU2", delta=delta, epsilon=epsilon_rule(delta, DEFAULT_SIGMA, n, p),
                         theta_set=FeasibleSet("nonneg"))
    est = mu_selector_2(Z, y, cfg)
    kept = threshold(est, 0.1)
    print(f"MU2 delta={delta}: {est.support.size} nonzeros, after threshold 0.1 -> {kept.support}")
