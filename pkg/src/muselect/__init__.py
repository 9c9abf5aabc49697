"""Sparse recovery with an errors-in-variables design: MU-selectors, baselines,
bound checks, and the simulation and replication harness."""

from .analysis import (
    BoundRecord,
    BoundReport,
    assumption_report,
    check_theorem1,
    check_theorem3,
    check_theorem5,
    coherence,
    kappa_from_coherence,
    missing_data_diagnostics,
)
from .lasso import LassoPath, lasso_cp, lasso_path
from .linalg import DesignMatrix, gram, norm, normalize_design, read_csv_matrix, write_csv_matrix
from .lp import LpProblem, LpSolution, build_l1_lp, dump_lp, solve_lp
from .selectors import (
    Estimate,
    FeasibleSet,
    SelectorConfig,
    SelectorInfeasibleError,
    c_star,
    dantzig,
    epsilon_rule,
    estimate,
    mu_selector_1,
    mu_selector_2,
    support,
    tau1,
    tau_star,
    threshold,
)
from .sim import ExperimentSpec, TableReport, elbow_scan, load_experiment, run_monte_carlo

__version__ = "0.1.0"
