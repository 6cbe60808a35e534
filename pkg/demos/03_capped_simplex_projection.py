"""The projection that enforces feasibility, one row at a time.

Each recovered row must live in {b : 0 <= b <= y, sum(b) = 1}: a simplex
whose coordinates are capped by the logical labels.  The solver's
feasibility step is the Euclidean projection onto that set; negative
labels come back exactly zero, never approximately.
"""

import numpy as np

from labeldist import capped_simplex_project

print("already feasible -> unchanged:")
print("  ", capped_simplex_project([0.5, 0.5], [1, 1]))

print("mass pulled back inside the box:")
print("  ", capped_simplex_project([2.0, 0.0], [1, 1]))

print("capped coordinate pinned at exactly zero:")
b = capped_simplex_project([0.6, 0.6, 0.6], [1, 1, 0])
print("  ", b, "   third coordinate:", b[2])

print("negative surplus spread over the free coordinates:")
print("  ", capped_simplex_project([0.9, 0.4, -0.2, 0.1], [1, 1, 1, 1]))

rng = np.random.default_rng(3)
v = rng.normal(0, 2, 6)
y = np.array([1, 1, 0, 1, 0, 1])
b = capped_simplex_project(v, y)
print("\nrandom target", np.round(v, 3))
print("caps         ", y)
print("projection   ", np.round(b, 6))
print("row sum      ", b.sum())

b2 = capped_simplex_project(b, y)
print("projecting the projection changes nothing:",
      np.max(np.abs(b2 - b)) <= 1e-12)
