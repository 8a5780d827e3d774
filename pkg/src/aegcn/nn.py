"""Differentiable building blocks with hand-written backward passes.

Every forward function returns ``(output, cache)``; the matching backward
function consumes the cache. Dense matrices are float64 numpy arrays and graph
operators are :class:`~aegcn.sparse.SparseMatrix`.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from .errors import ArgumentError, DimensionError
from .sparse import SparseMatrix, sddmm, spmm

LOG_EPS = 1e-12


class Activation(str, Enum):
    RELU = "relu"
    SOFTMAX = "softmax"
    SIGMOID = "sigmoid"
    NONE = "none"


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid(x):
    # scipy's expit is overflow-safe and several times faster than a numpy where-expression
    return expit(x)


def softmax_rows(x):
    z = x - x.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    return z


def safe_log(p):
    return np.log(np.maximum(p, LOG_EPS))


def apply_activation(pre, act):
    act = Activation(act)
    if act is Activation.RELU:
        return relu(pre)
    if act is Activation.SOFTMAX:
        return softmax_rows(pre)
    if act is Activation.SIGMOID:
        return sigmoid(pre)
    return pre


def activation_backward(pre, out, grad_out, act):
    """Gradient w.r.t. the pre-activation."""
    act = Activation(act)
    if act is Activation.RELU:
        return np.where(pre > 0, grad_out, 0.0)
    if act is Activation.SOFTMAX:
        inner = np.sum(grad_out * out, axis=1, keepdims=True)
        return out * (grad_out - inner)
    if act is Activation.SIGMOID:
        return grad_out * out * (1.0 - out)
    return grad_out


@dataclass
class LayerCache:
    pre_activation: np.ndarray
    output: np.ndarray
    input: np.ndarray
    activation: Activation
    operator: SparseMatrix = None


def _check_matmul(a_shape, b_shape):
    if a_shape[1] != b_shape[0]:
        raise DimensionError(f"cannot multiply {a_shape} by {b_shape}")


def gcn_layer_forward(S, H, W, act=Activation.NONE):
    """``act(S @ H @ W)``; the cheaper association order is picked from the shapes."""
    if S.n_cols != H.shape[0]:
        raise DimensionError(f"operator {S.shape} does not match input {H.shape}")
    _check_matmul(H.shape, W.shape)
    if W.shape[1] <= H.shape[1]:
        pre = spmm(S, H @ W)
    else:
        pre = spmm(S, H) @ W
    out = apply_activation(pre, act)
    return out, LayerCache(pre, out, H, Activation(act), S)


def gcn_layer_backward(cache, W, grad_out, operator_t=None, need_input_grad=True):
    """Return ``(grad_H, grad_W)`` for :func:`gcn_layer_forward`.

    ``operator_t`` may carry a precomputed transpose of the operator.
    """
    if grad_out.shape != cache.output.shape:
        raise DimensionError(f"grad_out {grad_out.shape} does not match output {cache.output.shape}")
    g_pre = activation_backward(cache.pre_activation, cache.output, grad_out, cache.activation)
    St = operator_t if operator_t is not None else cache.operator.transpose()
    back = spmm(St, g_pre)
    grad_W = cache.input.T @ back
    grad_H = back @ W.T if need_input_grad else None
    return grad_H, grad_W


def dense_layer_forward(H, W, b=None, act=Activation.NONE):
    _check_matmul(H.shape, W.shape)
    pre = H @ W
    if b is not None:
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (W.shape[1],):
            raise DimensionError(f"bias length {b.shape} does not match {W.shape[1]} outputs")
        pre = pre + b
    out = apply_activation(pre, act)
    return out, LayerCache(pre, out, H, Activation(act))


def dense_layer_backward(cache, W, grad_out):
    """Return ``(grad_H, grad_W, grad_b)`` for :func:`dense_layer_forward`."""
    if grad_out.shape != cache.output.shape:
        raise DimensionError(f"grad_out {grad_out.shape} does not match output {cache.output.shape}")
    g_pre = activation_backward(cache.pre_activation, cache.output, grad_out, cache.activation)
    return g_pre @ W.T, cache.input.T @ g_pre, g_pre.sum(axis=0)


def dropout(H, rate, rng):
    """Inverted dropout. Returns ``(output, scale_mask)``; backward is ``grad * scale_mask``."""
    if rate <= 0.0:
        return H, None
    keep = 1.0 - rate
    mask = (rng.random(H.shape) < keep) / keep
    return H * mask, mask


def masked_class_loss(probs, labels, mask):
    """Mean cross-entropy over ``mask`` rows of row-stochastic ``probs``.

    Softmax is fused in: the returned gradient is w.r.t. the logits that
    produced ``probs``, i.e. ``(probs - Y) / |mask|`` on masked rows and zero
    elsewhere.
    """
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ArgumentError("classification mask is empty")
    labels = np.asarray(labels)
    y = labels[mask]
    if np.any(y < 0) or np.any(y >= probs.shape[1]):
        raise ArgumentError("masked node carries an invalid class label")
    m = mask.size
    loss = -float(np.sum(safe_log(probs[mask, y]))) / m
    grad = np.zeros_like(probs)
    grad[mask] = probs[mask]
    grad[mask, y] -= 1.0
    grad[mask] /= m
    return loss, grad


def _recon_terms(target, pred, full_bce):
    """Shared body of the two reconstruction losses, with dense target."""
    pos = target != 0
    log_p = safe_log(pred)
    total = -np.sum(target[pos] * log_p[pos])
    grad = np.zeros_like(pred)
    live = pos & (pred > LOG_EPS)
    grad[live] = -target[live] / pred[live]
    if full_bce:
        comp = 1.0 - pred
        neg = target != 1.0
        total -= np.sum((1.0 - target[neg]) * safe_log(comp[neg]))
        live = neg & (comp > LOG_EPS)
        grad[live] += (1.0 - target[live]) / comp[live]
    return float(total), grad


def recon_loss_adjacency(target, pred, full_bce=False):
    """``-(1/n^2) sum_ij T_ij log P_ij`` for an ``n x n`` sparse target.

    With ``full_bce`` the ``(1 - T) log(1 - P)`` term is added.
    Returns ``(loss, grad_pred)``.
    """
    if target.n_rows != target.n_cols or pred.shape != target.shape:
        raise DimensionError(f"target {target.shape} and prediction {pred.shape} must be equal and square")
    scale = float(target.n_rows) ** 2
    total, grad = _recon_terms(target.to_dense(), pred, full_bce)
    return total / scale, grad / scale


def recon_loss_feature(X, Xhat, full_bce=False):
    """``-(1/(n d)) sum_ij X_ij log Xhat_ij``. Returns ``(loss, grad_Xhat)``."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != Xhat.shape:
        raise DimensionError(f"features {X.shape} and reconstruction {Xhat.shape} differ")
    scale = float(X.size)
    total, grad = _recon_terms(X, Xhat, full_bce)
    return total / scale, grad / scale


def finite_diff_check(f, P, analytic_grad, step=1e-5):
    """Max relative error between ``analytic_grad`` and central differences of ``f`` at ``P``.

    ``f`` takes an array shaped like ``P``. The error per entry is
    ``|a - n| / max(1e-8, |a| + |n|)``.
    """
    P = np.array(P, dtype=np.float64)
    analytic_grad = np.asarray(analytic_grad, dtype=np.float64)
    if analytic_grad.shape != P.shape:
        raise DimensionError("analytic gradient shape differs from parameter shape")
    numeric = np.empty_like(P)
    flat = P.reshape(-1)
    out = numeric.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = f(P)
        flat[i] = orig - step
        down = f(P)
        flat[i] = orig
        out[i] = (up - down) / (2.0 * step)
    err = np.abs(analytic_grad - numeric) / np.maximum(1e-8, np.abs(analytic_grad) + np.abs(numeric))
    return float(err.max()) if err.size else 0.0


def gcn_layer_operator_grad(cache, W, grad_out):
    """Gradient w.r.t. the stored values of the layer's operator ``S``.

    Needed when the operator itself is built from trainable weights.
    """
    g_pre = activation_backward(cache.pre_activation, cache.output, grad_out, cache.activation)
    return sddmm(cache.operator, g_pre, cache.input @ W)
