"""
How long do generating swap series get?

The worst-case bound on the series length grows factorially with the
dimension, while random instances need far fewer swaps.  This script
samples a few random instances for d = 4 and 5 and compares.
"""

import numpy as np

from thermo_reach import eto_extremal_hull, eto_extremal_prune, lmax_bound
from thermo_reach.reach import sample_instance

rng = np.random.default_rng(0)
for d, n in ((4, 50), (5, 10)):
    longest, counts = 0, []
    for _ in range(n):
        p, ctx = sample_instance(rng, d)
        rs = eto_extremal_hull(p, ctx) if d == 4 else eto_extremal_prune(p, ctx, post_filter=True)
        longest = max(longest, max(len(s) for s in rs.series))
        counts.append(len(rs))
    print(f"d={d}: bound {lmax_bound(d)}, longest observed {longest}, mean vertex count {np.mean(counts):.1f}")
