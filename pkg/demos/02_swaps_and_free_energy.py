"""
Single swaps, their continuous realisation, and free-energy bookkeeping.

A full swap between two levels is the endpoint of a resonant exchange with
a bath mode.  Along the way the nonequilibrium free energy dips to a
minimum at lambda* = 1 / (1 + exp(-beta (E_k - E_j))) before rising again,
which is why stopping the interaction early can be useful.
"""

import numpy as np

from thermo_reach import GibbsContext, SwapStep, apply_step, nonequilibrium_free_energy
from thermo_reach.channels import jc_trajectory
from thermo_reach.monotones import MonotoneReport

ctx = GibbsContext.from_energies([0.0, 0.2, 0.5])
p = np.array([0.75, 0.2, 0.05])

q = apply_step(SwapStep(1, 2), p, ctx)
print("full swap of levels 1 and 2:", np.round(q, 4))

traj = jc_trajectory(p, 1, 2, ctx, samples=1000)
f = np.array([nonequilibrium_free_energy(x, ctx) for _, x in traj])
t = np.array([s for s, _ in traj])
lam_star = 1 / (1 + ctx.delta[0, 1])
print(f"free energy minimum at lambda = {np.sin(t[f.argmin()]) ** 2:.4f}, predicted {lam_star:.4f}")

for label, state in (("before", p), ("after", q)):
    r = MonotoneReport.of(state, ctx)
    vals = ", ".join(f"F_{a:g}={v:.4f}" for a, v in zip(r.alpha_grid, r.values))
    print(f"{label}: {vals}")
