"""
Linear programs with the bundled simplex
========================================

A two-phase tableau simplex handles mixed constraint senses, free variables
and upper bounds, and reports infeasible or unbounded problems by status.
"""

import numpy as np

from muselect import LpProblem, build_l1_lp, dump_lp, solve_lp
from muselect import SelectorConfig

# min -x - 2y  s.t.  x + y <= 4,  x + 3y <= 6,  0 <= x <= 3
prob = LpProblem([-1.0, -2.0], [[1.0, 1.0], [1.0, 3.0]], ("<=", "<="), [4.0, 6.0],
                 upper=[3.0, np.inf])
sol = solve_lp(prob)
print("status:", sol.status, " objective:", sol.objective_value, " x:", sol.x)

# an empty feasible region is a status, not an exception
print("infeasible ->", solve_lp(LpProblem([1.0], [[1.0], [1.0]], ("<=", ">="), [1.0, 2.0])).status)
print("unbounded  ->", solve_lp(LpProblem([-1.0], [[1.0]], (">=",), [0.0])).status)

# the selectors are LPs too: here is the one behind a tiny basis pursuit
Z = np.array([[1.0, 0.5, -0.2], [0.0, 1.0, 0.3]])
y = np.array([1.0, 0.5])
lp = build_l1_lp(Z, y, SelectorConfig("Dantzig", epsilon=0.0))
print()
print(dump_lp(lp))
