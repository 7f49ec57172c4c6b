"""
Wick expansion of log|Q| and smooth linear statistics
=====================================================

log|Q(a)| for a homogeneous polynomial Q of complex Gaussians has an
orthogonal expansion in Wick powers.  Only balanced terms survive, and
their weights give the variance constant of smooth statistics of zeros.
"""

import numpy as np

from gafzeros import RngStream, WickCoeffs, kappa_identity
from gafzeros import experiments as ex

res = ex.wick_experiment("prod2", 2, RngStream(6), 200000)
print("Q = a1 a2: max |C|/SE over unbalanced terms", round(res["max_offdiagonal_z"], 2))
print("           kappa estimate", round(res["kappa"], 5))

exact = WickCoeffs.exact_identity(200)
print("Q = a: C00 =", round(exact.C00.real, 6), " kappa =", round(kappa_identity(), 6))

# Var Z_L(phi) is asymptotically kappa / L times the squared norm of the
# Laplacian of phi.  At small L the variance is still far from that limit,
# but Var * L settles: successive ratios shrink towards 1 as L grows.
rep = ex.clt_run([10, 20, 40], "smoothstep:1.0", RngStream(7), 2000)
limit = rep["kappa"] * rep["lap_norm2"]
for L, vl, sk in zip(rep["L"], rep["var_times_L"], rep["skew"]):
    print(f"L={L:3d}: Var*L = {vl:.3f} (limit {limit:.3f}), skew = {sk:+.3f}")
print("successive Var*L ratios:", [round(x, 3) for x in rep["ratios"]])
