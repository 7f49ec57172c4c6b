"""
Determinants of matrix-valued GAFs on the disk
==============================================

Taking det of an n x n matrix of independent hyperbolic GAFs multiplies
the zero intensity by n.  The pair correlation of these zeros is compared
with that of the determinantal process with kernel (1 - z conj(w))^-(n+1).
"""

from gafzeros import RngStream
from gafzeros import experiments as ex

for n in (1, 2):
    spec = ex.GeneratorSpec("det-series", "disk", L=1, n=n, window=0.6)
    res = ex.intensity_experiment(spec, RngStream(4).child(n), 3000, [0, 0.2, 0.4, 0.6])
    print(f"n={n} intensity verdict {res['verdict']}, z-scores",
          [round(z, 2) for z in res["zscores"]])
    res = ex.paircorr_experiment(spec, RngStream(5).child(n), 5000,
                                 [0.1, 0.2, 0.35, 0.6, 1.2], window=0.6)
    for g, ref, se in zip(res["estimate"], res["reference"], res["se"]):
        print(f"   g {g:6.3f} +- {se:5.3f}   determinantal {ref:6.3f}")
