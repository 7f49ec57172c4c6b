"""
Eigenvalues of a random pencil on the sphere
============================================

The zeros of det(zA - B) for independent complex Gaussian matrices A, B
form a determinantal process that is invariant under rotations of the
sphere.  The expected number of zeros in |z| < r is n r^2 / (1 + r^2).
"""

import numpy as np

from gafzeros import RngStream
from gafzeros import experiments as ex

n, M = 4, 20000
samples = ex.sample_points(ex.GeneratorSpec("det-pencil", "sphere", n=n), RngStream(2), M)

for r in (0.5, 1.0, 2.0):
    c = np.array([np.sum(np.abs(ps.points[~ps.at_infinity]) < r) for ps in samples])
    print(f"r={r}: mean {c.mean():.4f} +- {c.std() / np.sqrt(M):.4f}, "
          f"exact {n * r * r / (1 + r * r):.4f}")

# With n = 1 the single zero is uniform on the sphere: its height on the
# unit sphere, (|z|^2 - 1) / (|z|^2 + 1), is uniform on [-1, 1].
one = ex.sample_points(ex.GeneratorSpec("det-pencil", "sphere", n=1), RngStream(3), M)
z = np.array([ps.points[0] for ps in one])
h = (np.abs(z) ** 2 - 1) / (np.abs(z) ** 2 + 1)
print("height deciles:", np.round(np.quantile(h, np.linspace(0.1, 0.9, 9)), 3))
