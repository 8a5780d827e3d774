import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aegcn.errors import ArgumentError, DimensionError
from aegcn.nn import (
    Activation,
    dense_layer_backward,
    dense_layer_forward,
    dropout,
    finite_diff_check,
    gcn_layer_backward,
    gcn_layer_forward,
    masked_class_loss,
    recon_loss_adjacency,
    recon_loss_feature,
    relu,
    sigmoid,
    softmax_rows,
)
from aegcn.sparse import SparseMatrix

from conftest import random_sparse

finite = st.floats(-60, 60, allow_nan=False)


class TestActivations:
    def test_softmax_extreme_logits(self):
        out = softmax_rows(np.array([[50.0, -50.0, 0.0], [-50.0, -50.0, -50.0], [1000.0, 0.0, -1000.0]]))
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-15)

    def test_sigmoid_extremes(self):
        out = sigmoid(np.array([-800.0, 0.0, 800.0]))
        np.testing.assert_array_equal(out, [0.0, 0.5, 1.0])

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
    def test_softmax_rows_sum_to_one(self, x):
        out = softmax_rows(x)
        assert np.all(out >= 0)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
    def test_relu_non_negative(self, x):
        assert np.all(relu(x) >= 0)


class TestGCNLayer:
    def test_identity(self, rng):
        H = rng.standard_normal((4, 4))
        out, _ = gcn_layer_forward(SparseMatrix.identity(4), H, np.eye(4), Activation.NONE)
        np.testing.assert_allclose(out, H, atol=1e-15)

    def test_relu_range(self, rng):
        S, _ = random_sparse(rng, 6, 6, 0.5)
        out, _ = gcn_layer_forward(S, rng.standard_normal((6, 3)), rng.standard_normal((3, 2)), Activation.RELU)
        assert np.all(out >= 0)

    @pytest.mark.parametrize("act", list(Activation))
    def test_dense_oracle(self, rng, act):
        S, dense = random_sparse(rng, 6, 6, 0.5)
        H = rng.standard_normal((6, 4))
        W = rng.standard_normal((4, 3))
        out, _ = gcn_layer_forward(S, H, W, act)
        pre = dense @ H @ W
        expected = {
            Activation.RELU: np.maximum(pre, 0),
            Activation.SOFTMAX: np.exp(pre) / np.exp(pre).sum(axis=1, keepdims=True),
            Activation.SIGMOID: 1 / (1 + np.exp(-pre)),
            Activation.NONE: pre,
        }[act]
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            gcn_layer_forward(SparseMatrix.identity(3), np.ones((3, 2)), np.ones((3, 2)))

    def test_zero_upstream(self, rng):
        S, _ = random_sparse(rng, 5, 5, 0.5)
        H, W = rng.standard_normal((5, 3)), rng.standard_normal((3, 2))
        out, cache = gcn_layer_forward(S, H, W, Activation.RELU)
        gH, gW = gcn_layer_backward(cache, W, np.zeros_like(out), S.transpose())
        assert not gH.any() and not gW.any()

    def test_identity_operator_is_plain_matmul(self, rng):
        H, W = rng.standard_normal((5, 3)), rng.standard_normal((3, 2))
        G = rng.standard_normal((5, 2))
        _, cache = gcn_layer_forward(SparseMatrix.identity(5), H, W, Activation.NONE)
        gH, gW = gcn_layer_backward(cache, W, G, SparseMatrix.identity(5))
        np.testing.assert_allclose(gW, H.T @ G, atol=1e-14)
        np.testing.assert_allclose(gH, G @ W.T, atol=1e-14)

    @pytest.mark.parametrize("act", [Activation.RELU, Activation.SIGMOID, Activation.SOFTMAX, Activation.NONE])
    def test_finite_differences(self, rng, act):
        S, _ = random_sparse(rng, 5, 5, 0.6)
        H, W = rng.standard_normal((5, 4)), rng.standard_normal((4, 3))
        C = rng.standard_normal((5, 3))  # scalar functional sum(C * out)
        out, cache = gcn_layer_forward(S, H, W, act)
        gH, gW = gcn_layer_backward(cache, W, C, S.transpose())
        assert finite_diff_check(lambda P: np.sum(C * gcn_layer_forward(S, H, P, act)[0]), W, gW) <= 1e-4
        assert finite_diff_check(lambda P: np.sum(C * gcn_layer_forward(S, P, W, act)[0]), H, gH) <= 1e-4


class TestDenseLayer:
    def test_identity(self, rng):
        H = rng.standard_normal((3, 3))
        out, _ = dense_layer_forward(H, np.eye(3), None, Activation.NONE)
        np.testing.assert_array_equal(out, H)

    def test_constant_logits_softmax(self):
        out, _ = dense_layer_forward(np.zeros((4, 2)), np.ones((2, 5)), np.ones(5), Activation.SOFTMAX)
        np.testing.assert_allclose(out, 0.2, atol=1e-15)

    def test_zero_upstream_and_bias(self, rng):
        H, W, b = rng.standard_normal((4, 3)), rng.standard_normal((3, 2)), rng.standard_normal(2)
        out, cache = dense_layer_forward(H, W, b, Activation.NONE)
        for gh in dense_layer_backward(cache, W, np.zeros_like(out)):
            assert not np.any(gh)
        G = rng.standard_normal(out.shape)
        np.testing.assert_allclose(dense_layer_backward(cache, W, G)[2], G.sum(axis=0))

    def test_finite_differences(self, rng):
        H, W, b = rng.standard_normal((4, 3)), rng.standard_normal((3, 2)), rng.standard_normal(2)
        C = rng.standard_normal((4, 2))
        act = Activation.SOFTMAX

        def f(H=H, W=W, b=b):
            return np.sum(C * dense_layer_forward(H, W, b, act)[0])

        _, cache = dense_layer_forward(H, W, b, act)
        gH, gW, gb = dense_layer_backward(cache, W, C)
        assert finite_diff_check(lambda P: f(H=P), H, gH) <= 1e-4
        assert finite_diff_check(lambda P: f(W=P), W, gW) <= 1e-4
        assert finite_diff_check(lambda P: f(b=P), b, gb) <= 1e-4

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            dense_layer_forward(np.ones((2, 3)), np.ones((2, 2)))


class TestDropout:
    def test_rate_zero_is_identity(self, rng):
        H = rng.standard_normal((3, 3))
        out, mask = dropout(H, 0.0, rng)
        assert out is H and mask is None

    def test_inverted_scaling(self, rng):
        out, mask = dropout(np.ones((200, 200)), 0.5, rng)
        assert set(np.unique(mask)) <= {0.0, 2.0}
        assert abs(out.mean() - 1.0) < 0.02


class TestClassLoss:
    def test_perfect(self):
        probs = np.eye(3)
        loss, _ = masked_class_loss(probs, np.array([0, 1, 2]), np.array([0, 1, 2]))
        assert loss == 0.0

    def test_uniform(self):
        loss, _ = masked_class_loss(np.full((4, 5), 0.2), np.array([0, 1, 2, 3]), np.array([1, 3]))
        assert loss == pytest.approx(np.log(5), abs=1e-15)

    def test_direct_sum(self, rng):
        probs = softmax_rows(rng.standard_normal((4, 3)))
        labels = np.array([2, 0, 1, 1])
        loss, _ = masked_class_loss(probs, labels, np.array([0, 2]))
        expected = -(np.log(probs[0, 2]) + np.log(probs[2, 1])) / 2
        assert loss == pytest.approx(expected, abs=1e-12)

    def test_gradient_wrt_logits(self, rng):
        Z = rng.standard_normal((4, 3))
        labels, mask = np.array([2, 0, 1, 1]), np.array([0, 2, 3])
        _, g = masked_class_loss(softmax_rows(Z), labels, mask)
        assert finite_diff_check(lambda P: masked_class_loss(softmax_rows(P), labels, mask)[0], Z, g) <= 1e-4

    def test_zero_probability_is_clamped(self):
        loss, _ = masked_class_loss(np.array([[1.0, 0.0]]), np.array([1]), np.array([0]))
        assert np.isfinite(loss) and loss > 0

    def test_errors(self):
        with pytest.raises(ArgumentError):
            masked_class_loss(np.eye(2), np.array([0, 1]), np.array([], dtype=int))
        with pytest.raises(ArgumentError):
            masked_class_loss(np.eye(2), np.array([0, -1]), np.array([1]))


class TestReconLoss:
    def test_zero_target(self, rng):
        loss, grad = recon_loss_adjacency(SparseMatrix.zeros(3, 3), rng.random((3, 3)))
        assert loss == 0.0 and not grad.any()

    def test_identity_target(self):
        pred = np.full((2, 2), 0.3)
        np.fill_diagonal(pred, np.exp(-1))
        loss, _ = recon_loss_adjacency(SparseMatrix.identity(2), pred)
        assert loss == pytest.approx(0.5, abs=1e-15)

    def test_adjacency_direct_sum_and_fd(self, rng):
        T, dense = random_sparse(rng, 6, 6, 0.4, positive=True)
        P = rng.uniform(0.05, 0.95, (6, 6))
        loss, grad = recon_loss_adjacency(T, P)
        assert loss == pytest.approx(-np.sum(dense * np.log(P)) / 36, abs=1e-12)
        assert finite_diff_check(lambda Q: recon_loss_adjacency(T, Q)[0], P, grad) <= 1e-4

    def test_full_bce_fd(self, rng):
        T, dense = random_sparse(rng, 6, 6, 0.4)
        T = T.with_values(np.ones(T.nnz))
        P = rng.uniform(0.05, 0.95, (6, 6))
        loss, grad = recon_loss_adjacency(T, P, full_bce=True)
        D = T.to_dense()
        expected = -np.sum(D * np.log(P) + (1 - D) * np.log(1 - P)) / 36
        assert loss == pytest.approx(expected, abs=1e-12)
        assert finite_diff_check(lambda Q: recon_loss_adjacency(T, Q, True)[0], P, grad) <= 1e-4

    def test_feature_cases(self, rng):
        assert recon_loss_feature(np.zeros((3, 4)), rng.random((3, 4)))[0] == 0.0
        loss, _ = recon_loss_feature(np.ones((2, 2)), np.full((2, 2), np.exp(-1)))
        assert loss == pytest.approx(1.0, abs=1e-15)
        X, Xhat = rng.random((5, 7)), rng.uniform(0.05, 0.95, (5, 7))
        assert recon_loss_feature(X, Xhat)[0] == pytest.approx(-np.sum(X * np.log(Xhat)) / 35, abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            recon_loss_feature(np.ones((2, 2)), np.ones((2, 3)))
        with pytest.raises(DimensionError):
            recon_loss_adjacency(SparseMatrix.identity(2), np.ones((3, 3)))

    @settings(max_examples=40, deadline=None)
    @given(
        arrays(np.float64, (4, 4), elements=st.floats(0, 1)),
        arrays(np.float64, (4, 4), elements=st.floats(0, 1)),
    )
    def test_non_negative(self, X, P):
        assert recon_loss_feature(X, P)[0] >= 0
        assert recon_loss_feature(X, P, full_bce=True)[0] >= 0


class TestFiniteDiffCheck:
    def test_linear(self, rng):
        C = rng.standard_normal((3, 4))
        assert finite_diff_check(lambda P: np.sum(C * P), rng.standard_normal((3, 4)), C) <= 1e-9

    def test_quadratic(self, rng):
        P = rng.standard_normal((3, 3))
        assert finite_diff_check(lambda Q: np.sum(Q**2), P, 2 * P) <= 1e-7

    def test_detects_wrong_gradient(self, rng):
        P = rng.standard_normal((3, 3))
        assert finite_diff_check(lambda Q: np.sum(Q**2), P, 2.02 * P) > 1e-4
