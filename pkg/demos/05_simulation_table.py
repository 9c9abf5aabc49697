"""
A small simulation table
========================

Experiments are described by an INI config.  This one is a cut-down version
of the bundled censored-design table: fewer columns and replicates so it
runs in a few seconds.
"""

from muselect import load_experiment, run_monte_carlo

config = """
[experiment]
model = censored:0.9
n = 60
p = 150
s = 1
estimators = dantzig, mu2:0.05, mu2:0.1
threshold = fixed:0.1
reps = 5
seed = 11
"""

spec, _ = load_experiment(config)
report = run_monte_carlo(spec)
print(report.to_markdown())
