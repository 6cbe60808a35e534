"""The neighborhood graph that regularizes recovery.

Samples that sit close in feature space should receive similar label
distributions.  The graph machinery turns that prior into a quadratic
penalty: build an RBF-weighted k-nearest-neighbor similarity, form its
Laplacian, and the penalty tr(D^T G D) equals half the similarity-
weighted sum of squared row differences.
"""

import numpy as np

from labeldist import knn_similarity, laplacian, smoothness, synth_dataset

dataset = synth_dataset(n=40, m=2, c=3, n_clusters=2, seed=7)
X = dataset.X

A = knn_similarity(X, k=5, sigma="auto")
print("similarity matrix:")
print("  shape:", A.shape)
print("  symmetric:", np.allclose(A, A.T))
print("  zero self-similarity:", np.all(np.diag(A) == 0))
print("  entries in [0, 1]:", A.min() >= 0 and A.max() <= 1)

G = laplacian(A)
print("\nlaplacian:")
print("  rows sum to zero:", np.allclose(G.sum(axis=1), 0, atol=1e-12))
v = np.random.default_rng(0).normal(size=40)
print("  quadratic form nonnegative on a random vector:", v @ G @ v >= -1e-10)

# identity check: tr(D^T G D) == half the weighted pairwise spread
D = dataset.D_true
direct = 0.5 * sum(A[i, j] * np.sum((D[i] - D[j]) ** 2)
                   for i in range(40) for j in range(40))
print("\nsmoothness identity:")
print(f"  tr(D^T G D)        = {smoothness(D, G):.10f}")
print(f"  half pairwise form = {direct:.10f}")

# equal rows are free; dissimilar neighbors are charged
D_flat = np.tile(D.mean(axis=0), (40, 1))
print(f"\n  smoothness of identical rows: {smoothness(D_flat, G):.2e}")
print(f"  smoothness of the true (cluster-structured) rows: "
      f"{smoothness(D, G):.4f}")
