"""
Overcrowding of a disk
======================

For Ginibre eigenvalues and the zeros of the L=1 hyperbolic GAF the point
count in a centred disk is a sum of independent Bernoulli variables, so
its law is exact.  For the planar GAF no formula exists; P[n(1) >= m]
decays like exp(-c m^2) and the largest m needs importance sampling.
"""

import numpy as np

from gafzeros import RngStream
from gafzeros import experiments as ex

res = ex.overcrowding_run(ex.GeneratorSpec("gaf", "disk", L=1, window=0.7), RngStream(8),
                          100000, 0.7, 6)
print("hyperbolic GAF, r=0.7: TV to exact law", round(res["tv"], 4))
for m, est, ex_ in zip(res["m"], res["estimate"], res["exact"]):
    print(f"   P[n >= {m}]  MC {est:.5f}  exact {ex_:.5f}")

res = ex.overcrowding_run(ex.GeneratorSpec("gaf", "plane", L=1, window=1.0), RngStream(9),
                          200000, 1.0, 5, tilt_sigma=0.25, tilt_M=400000)
for m, est, meth in zip(res["m"], res["estimate"], res["method"]):
    print(f"   planar P[n(1) >= {m}] = {est:.3e}  ({meth})")
print("   -log P differences:", np.round(res["first_differences"], 2))
