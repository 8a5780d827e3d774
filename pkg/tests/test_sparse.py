import numpy as np
import pytest

from aegcn.errors import ArgumentError, DegenerateDegreeError, DimensionError
from aegcn.sparse import (
    SparseMatrix,
    add_self_loops,
    hstack,
    row_normalize,
    row_normalize_backward,
    sddmm,
    sp_sp_matmul,
    sp_sp_matmul_backward,
    spgemm_plan,
    spmm,
    sym_normalize,
    weighted_sum,
)

from conftest import random_sparse, random_symmetric


def dense_sym_norm(At):
    d = At.sum(axis=1)
    return At / np.sqrt(np.outer(d, d))


class TestSparseMatrix:
    def test_from_coo_merges_duplicates(self):
        A = SparseMatrix.from_coo(3, 3, [0, 0, 2, 1], [1, 1, 0, 2], [1.0, 2.0, 5.0, 4.0])
        assert A.nnz == 3
        np.testing.assert_array_equal(A.to_dense(), [[0, 3, 0], [0, 0, 4], [5, 0, 0]])

    def test_rows_are_sorted(self, rng):
        rows = rng.integers(0, 7, 40)
        cols = rng.integers(0, 5, 40)
        A = SparseMatrix.from_coo(7, 5, rows, cols)
        for i in range(7):
            seg = A.col_idx[A.row_ptr[i] : A.row_ptr[i + 1]]
            assert np.all(np.diff(seg) > 0)

    def test_arrays_are_read_only(self):
        A = SparseMatrix.identity(3)
        with pytest.raises(ValueError):
            A.values[0] = 2.0

    def test_caller_array_not_frozen(self):
        vals = np.array([1.0, 2.0])
        SparseMatrix(2, 2, [0, 1, 2], [0, 1], vals)
        vals[0] = 9.0  # still writeable

    @pytest.mark.parametrize(
        "row_ptr,col_idx",
        [([0, 2, 1], [0, 1]), ([0, 1, 2], [0, 5]), ([0, 2, 2], [1, 0]), ([1, 1, 2], [0, 1])],
    )
    def test_validator_rejects_bad_csr(self, row_ptr, col_idx):
        with pytest.raises((DimensionError, ValueError)):
            SparseMatrix(2, 2, row_ptr, col_idx, np.ones(len(col_idx)))

    def test_transpose(self, rng):
        A, dense = random_sparse(rng, 6, 9, 0.3)
        np.testing.assert_array_equal(A.transpose().to_dense(), dense.T)

    def test_locate(self):
        A = SparseMatrix.from_dense(np.array([[0, 1.0], [2.0, 0]]))
        np.testing.assert_array_equal(A.locate([0, 1, 0], [1, 0, 0]), [0, 1, -1])

    def test_symmetry_check(self, rng):
        S, _ = random_symmetric(rng, 8, 0.4)
        assert S.is_symmetric()
        assert not SparseMatrix.from_coo(2, 2, [0], [1]).is_symmetric()


class TestSelfLoops:
    def test_zero_matrix(self):
        np.testing.assert_array_equal(add_self_loops(SparseMatrix.zeros(2, 2)).to_dense(), np.eye(2))

    def test_two_node(self):
        A = SparseMatrix.from_dense(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_array_equal(add_self_loops(A).to_dense(), np.ones((2, 2)))

    def test_path_graph(self):
        A = SparseMatrix.from_coo(3, 3, [0, 1, 1, 2], [1, 0, 2, 1])
        dense = np.zeros((3, 3))
        dense[[0, 1, 1, 2], [1, 0, 2, 1]] = 1.0
        np.testing.assert_array_equal(add_self_loops(A).to_dense(), dense + np.eye(3))

    def test_non_square(self):
        with pytest.raises(DimensionError):
            add_self_loops(SparseMatrix.zeros(2, 3))


class TestNormalization:
    def test_sym_identity(self):
        np.testing.assert_array_equal(sym_normalize(SparseMatrix.identity(3)).to_dense(), np.eye(3))

    def test_sym_two_by_two(self):
        out = sym_normalize(SparseMatrix.from_dense(np.ones((2, 2))))
        np.testing.assert_allclose(out.to_dense(), np.full((2, 2), 0.5), atol=1e-15)

    def test_sym_random(self, rng):
        A, dense = random_symmetric(rng, 8, 0.4)
        out = sym_normalize(add_self_loops(A))
        np.testing.assert_allclose(out.to_dense(), dense_sym_norm(dense + np.eye(8)), rtol=0, atol=1e-12)
        assert out.is_symmetric(1e-15)

    def test_row_examples(self):
        np.testing.assert_array_equal(row_normalize(SparseMatrix.identity(4)).to_dense(), np.eye(4))
        out = row_normalize(SparseMatrix.from_dense(np.array([[1.0, 1.0], [0.0, 1.0]])))
        np.testing.assert_allclose(out.to_dense(), [[0.5, 0.5], [0.0, 1.0]])

    def test_row_random_weighted(self, rng):
        A, dense = random_sparse(rng, 8, 8, 0.3, positive=True)
        out = row_normalize(add_self_loops(A))
        At = dense + np.eye(8)
        np.testing.assert_allclose(out.to_dense(), At / At.sum(axis=1, keepdims=True), atol=1e-12)
        np.testing.assert_allclose(out.row_sums(), 1.0, atol=1e-12)

    @pytest.mark.parametrize("fn", [sym_normalize, row_normalize])
    def test_zero_row(self, fn):
        with pytest.raises(DegenerateDegreeError):
            fn(SparseMatrix.from_dense(np.array([[1.0, 0.0], [0.0, 0.0]])))

    def test_row_normalize_backward_fd(self, rng):
        A, _ = random_sparse(rng, 6, 6, 0.5, positive=True)
        At = add_self_loops(A)
        G = rng.standard_normal(At.nnz)

        def f(vals):
            return float(np.dot(G, row_normalize(At.with_values(vals)).values))

        analytic = row_normalize_backward(At, row_normalize(At), G)
        numeric = np.array(
            [(f(At.values + h) - f(At.values - h)) / 2e-6 for h in np.eye(At.nnz) * 1e-6]
        )
        np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-9)


class TestProducts:
    def test_spmm_identity_and_zero(self, rng):
        H = rng.standard_normal((5, 3))
        np.testing.assert_array_equal(spmm(SparseMatrix.identity(5), H), H)
        np.testing.assert_array_equal(spmm(SparseMatrix.zeros(5, 5), H), np.zeros((5, 3)))

    def test_spmm_random(self, rng):
        S, dense = random_sparse(rng, 10, 10, 0.3)
        H = rng.standard_normal((10, 4))
        np.testing.assert_allclose(spmm(S, H), dense @ H, rtol=0, atol=1e-12)

    def test_spmm_mismatch(self):
        with pytest.raises(DimensionError):
            spmm(SparseMatrix.identity(3), np.ones((4, 2)))

    def test_spgemm_identity(self, rng):
        Q2, dense = random_sparse(rng, 6, 6, 0.3)
        np.testing.assert_array_equal(sp_sp_matmul(SparseMatrix.identity(6), Q2).to_dense(), dense)

    def test_spgemm_path(self):
        Q1 = SparseMatrix.from_coo(3, 3, [0], [1], [2.0])
        Q2 = SparseMatrix.from_coo(3, 3, [1], [2], [3.0])
        out = sp_sp_matmul(Q1, Q2)
        assert out.nnz == 1
        assert out.to_dense()[0, 2] == 6.0

    def test_spgemm_random(self, rng):
        A, da = random_sparse(rng, 12, 12, 0.2)
        B, db = random_sparse(rng, 12, 12, 0.2)
        np.testing.assert_allclose(sp_sp_matmul(A, B).to_dense(), da @ db, rtol=0, atol=1e-12)

    def test_spgemm_mismatch(self):
        with pytest.raises(DimensionError):
            sp_sp_matmul(SparseMatrix.identity(3), SparseMatrix.identity(4))

    def test_plan_reuse_with_new_values(self, rng):
        A, _ = random_sparse(rng, 9, 9, 0.3)
        B, _ = random_sparse(rng, 9, 9, 0.3)
        plan = spgemm_plan(A, B)
        A2 = A.with_values(rng.standard_normal(A.nnz))
        np.testing.assert_allclose(
            sp_sp_matmul(A2, B, plan).to_dense(), A2.to_dense() @ B.to_dense(), atol=1e-12
        )

    def test_spgemm_backward_fd(self, rng):
        A, _ = random_sparse(rng, 5, 5, 0.5)
        B, _ = random_sparse(rng, 5, 5, 0.5)
        plan = spgemm_plan(A, B)
        G = rng.standard_normal(plan.pattern.nnz)
        gA, gB = sp_sp_matmul_backward(A, B, plan, G)
        # loss = sum(G * C.values) is bilinear, so the exact gradient is G-weighted
        dG = SparseMatrix(*plan.pattern.shape, plan.pattern.row_ptr, plan.pattern.col_idx, G).to_dense()
        np.testing.assert_allclose(gA, (dG @ B.to_dense().T)[A.row_idx, A.col_idx], atol=1e-12)
        np.testing.assert_allclose(gB, (A.to_dense().T @ dG)[B.row_idx, B.col_idx], atol=1e-12)

    def test_sddmm(self, rng):
        P, _ = random_sparse(rng, 7, 6, 0.4)
        U = rng.standard_normal((7, 3))
        V = rng.standard_normal((6, 3))
        np.testing.assert_allclose(sddmm(P, U, V), (U @ V.T)[P.row_idx, P.col_idx], atol=1e-12)


class TestWeightedSum:
    def test_single(self, rng):
        A, dense = random_sparse(rng, 5, 5, 0.4)
        np.testing.assert_array_equal(weighted_sum([A], [1.0]).to_dense(), dense)

    def test_halves(self, rng):
        A, dense = random_sparse(rng, 5, 5, 0.4)
        np.testing.assert_allclose(weighted_sum([A, A], [0.5, 0.5]).to_dense(), dense, atol=1e-15)

    def test_three_random(self, rng):
        mats = [random_sparse(rng, 9, 9, 0.3) for _ in range(3)]
        w = (0.2, 0.3, 0.5)
        expected = sum(wi * d for wi, (_, d) in zip(w, mats))
        out = weighted_sum([m for m, _ in mats], w)
        np.testing.assert_allclose(out.to_dense(), expected, rtol=0, atol=1e-12)

    def test_zero_weight_keeps_pattern(self):
        A = SparseMatrix.from_coo(2, 2, [0], [1])
        B = SparseMatrix.from_coo(2, 2, [1], [0])
        assert weighted_sum([A, B], [1.0, 0.0]).nnz == 2

    @pytest.mark.parametrize(
        "mats,weights",
        [([], []), ([SparseMatrix.identity(2)], [0.5, 0.5]), ([SparseMatrix.identity(2), SparseMatrix.identity(3)], [1, 1])],
    )
    def test_errors(self, mats, weights):
        with pytest.raises(ArgumentError):
            weighted_sum(mats, weights)


def test_hstack(rng):
    A, da = random_sparse(rng, 4, 3, 0.5)
    B, db = random_sparse(rng, 4, 2, 0.5)
    np.testing.assert_array_equal(hstack([A, B]).to_dense(), np.hstack([da, db]))


class TestRandomizedOracles:
    """200 random instances, each at most 16 x 16, against dense brute force."""

    N = 200

    def shapes(self, rng):
        for _ in range(self.N):
            n, m, k = rng.integers(1, 17, 3)
            yield int(n), int(m), int(k), float(rng.uniform(0.05, 0.6))

    def test_spmm(self, rng):
        for n, m, k, p in self.shapes(rng):
            S, dense = random_sparse(rng, n, m, p)
            H = rng.standard_normal((m, k))
            np.testing.assert_allclose(spmm(S, H), dense @ H, rtol=0, atol=1e-12)

    def test_sp_sp_matmul(self, rng):
        for n, m, k, p in self.shapes(rng):
            A, da = random_sparse(rng, n, m, p)
            B, db = random_sparse(rng, m, k, p)
            np.testing.assert_allclose(sp_sp_matmul(A, B).to_dense(), da @ db, rtol=0, atol=1e-12)

    def test_weighted_sum(self, rng):
        for n, m, k, p in self.shapes(rng):
            count = 1 + k % 4
            mats = [random_sparse(rng, n, m, p) for _ in range(count)]
            w = rng.standard_normal(count)
            expected = sum(wi * d for wi, (_, d) in zip(w, mats))
            out = weighted_sum([s for s, _ in mats], w)
            np.testing.assert_allclose(out.to_dense(), expected, rtol=0, atol=1e-12)

    def test_normalizations(self, rng):
        for n, _, _, p in self.shapes(rng):
            A, dense = random_symmetric(rng, n, p)
            At = dense + np.eye(n)
            np.testing.assert_allclose(
                sym_normalize(add_self_loops(A)).to_dense(), dense_sym_norm(At), rtol=0, atol=1e-12
            )
            W, dw = random_sparse(rng, n, n, p, positive=True)
            Wt = dw + np.eye(n)
            np.testing.assert_allclose(
                row_normalize(add_self_loops(W)).to_dense(),
                Wt / Wt.sum(axis=1, keepdims=True),
                rtol=0,
                atol=1e-12,
            )
