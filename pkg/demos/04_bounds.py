"""
Checking the error bounds on one instance
=========================================

For an orthogonal design the coherence is zero, so the restricted
eigenvalue constant is known exactly and each error bound can be evaluated
numerically next to the observed error.
"""

import numpy as np

from muselect import assumption_report, check_theorem1, coherence, kappa_from_coherence, mu_selector_1
from muselect.sim import Instance, Truth, orthogonal_design

n, p, s, delta = 40, 30, 2, 0.02
X = orthogonal_design(n, p, seed=8)
g = np.random.default_rng(8)
Xi = g.uniform(-delta, delta, (n, p))
theta = np.zeros(p)
theta[[4, 17]] = [1.0, -0.7]
y = X.matrix @ theta
Z = X.matrix + Xi

print(assumption_report(X, s))
rho, _ = coherence(X)
alpha, kappa = kappa_from_coherence(rho, s, "three")
_, kappa2s = kappa_from_coherence(rho, 2 * s, "three")

est = mu_selector_1(Z, y, delta)
inst = Instance(y, Z, Truth(X, theta, np.zeros(n), Xi))
report = check_theorem1(inst, est, kappa, kappa2s, s, alpha, rho=rho)
for r in report.records:
    flag = "holds" if r.holds else ("n/a" if not r.applicable else "VIOLATED")
    print(f"{r.bound_id:>10}: {r.lhs:.3e} <= {r.rhs:.3e}  {flag}")
