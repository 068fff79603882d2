"""
Reachable states of a three-level system.

Builds the thermal-operation polytope and the elementary-thermal-operation
polytope for the state (0.35, 0.55, 0.1) at beta*E = (0, 0.2, 0.5), shows
which swap series generates each vertex, and writes barycentric CSV files
that any plotting tool can draw as a triangle diagram.
"""

import numpy as np

from thermo_reach import GibbsContext, beta_order, eto_extremal_hull, eto_qutrit, to_extremal_points
from thermo_reach.export import barycentric_csv

ctx = GibbsContext.from_energies([0.0, 0.2, 0.5])
p = np.array([0.35, 0.55, 0.1])
print("beta-order of p:", beta_order(p, ctx))

# Thermal operations: one tightly majorized state per level ordering.
to_set = to_extremal_points(p, ctx)
print(f"\n{len(to_set)} vertices reachable with unrestricted thermal operations")

# Elementary operations: sequences of two-level swaps.
eto_set = eto_extremal_hull(p, ctx)
print(f"{len(eto_set)} vertices reachable with two-level swaps:")
for q, series in zip(eto_set.points, eto_set.series):
    steps = " -> ".join(f"({s.j},{s.k})" for s in series) or "identity"
    print(f"  {np.round(q, 4)}  via {steps}")

# The closed-form qutrit construction gives the same polygon.
same = all(np.min(np.abs(eto_set.points - v).max(axis=1)) < 1e-9 for v in eto_qutrit(p, ctx).points)
print("closed form agrees with the search:", same)

with open("qutrit_sets.csv", "w") as fh:
    fh.write(barycentric_csv(to_set.points, "to"))
    fh.write(barycentric_csv(eto_set.points, "eto").split("\n", 1)[1])
print("\nwrote qutrit_sets.csv (columns: set, p_1..p_3, x, y)")
