"""
Choosing delta with the elbow rule
==================================

The mean number of selected coefficients falls quickly as delta grows and
then flattens out; delta is read off where the curve turns flat.
"""

from muselect import elbow_scan, load_experiment

spec, _ = load_experiment("[experiment]\nn = 60\np = 150\ns = 1\nreps = 3\nseed = 12\n")
curve = elbow_scan(spec, [0.005, 0.01, 0.02, 0.05, 0.1, 0.15])
for delta, nb in curve:
    print(f"delta={delta:<6g} {'#' * int(round(nb)):<40} {nb:.1f}")
