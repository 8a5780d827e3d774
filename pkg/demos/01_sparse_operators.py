"""Sparse graph operators on a five-node graph.

Builds the two normalised propagation operators, multiplies two weighted
adjacency mixes through a reusable product plan, and checks every result
against plain dense numpy.
"""

import numpy as np

from aegcn.sparse import (
    SparseMatrix,
    add_self_loops,
    row_normalize,
    sp_sp_matmul,
    spgemm_plan,
    spmm,
    sym_normalize,
    weighted_sum,
)

np.set_printoptions(precision=3, suppress=True)

# An undirected path 0-1-2-3 with a pendant edge 1-4.
edges = np.array([[0, 1], [1, 2], [2, 3], [1, 4]])
rows = np.r_[edges[:, 0], edges[:, 1]]
cols = np.r_[edges[:, 1], edges[:, 0]]
A = SparseMatrix.from_coo(5, 5, rows, cols)
print("adjacency:", A)
print(A.to_dense())

# Self-loops first, then the symmetric normalisation used by the
# homogeneous model.
At = add_self_loops(A)
S = sym_normalize(At)
print("\nD^-1/2 (A + I) D^-1/2:")
print(S.to_dense())

dense_At = A.to_dense() + np.eye(5)
d = dense_At.sum(axis=1)
assert np.allclose(S.to_dense(), dense_At / np.sqrt(np.outer(d, d)), atol=1e-12)

# Row normalisation is the directed-graph counterpart; every row sums to one.
R = row_normalize(At)
print("\nrow sums after row normalisation:", R.row_sums())

# Propagating features is a sparse-dense product.
H = np.arange(10.0).reshape(5, 2)
print("\nS @ H:")
print(spmm(S, H))
assert np.allclose(spmm(S, H), S.to_dense() @ H)

# Two directed edge types mixed with softmax-like weights. Every mix lives on
# the union pattern, so one symbolic plan serves every product.
forward = SparseMatrix.from_coo(5, 5, edges[:, 0], edges[:, 1])
backward = forward.transpose()
Q1 = weighted_sum([forward, backward], [0.9, 0.1])
Q2 = weighted_sum([forward, backward], [0.2, 0.8])
plan = spgemm_plan(Q1, Q2)
P = sp_sp_matmul(Q1, Q2, plan)
print("\nQ1 @ Q2 (length-2 meta-paths):", P)
print(P.to_dense())
assert np.allclose(P.to_dense(), Q1.to_dense() @ Q2.to_dense())

# Reuse the plan with new weights, as training does every epoch.
Q1b = weighted_sum([forward, backward], [0.5, 0.5])
assert np.allclose(sp_sp_matmul(Q1b, Q2, plan).to_dense(), Q1b.to_dense() @ Q2.to_dense())
print("\nall sparse results agree with dense numpy")
