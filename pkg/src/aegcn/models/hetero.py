"""Autoencoder-constrained GCN on a heterogeneous graph.

Preprocessing builds ``C`` channels from the ``K`` edge-type adjacencies::

    Q_j^i = sum_k softmax(w_j^i)_k A_k        j = 1, 2
    At^i  = Q_1^i Q_2^i + I                   length-2 meta-paths
    At_H  = sum_i At^i
    H0    = ||_i ReLU(rownorm(At^i) X Waggre)

followed by::

    H1    = ReLU(rownorm(At_H) H0 W0)
    H2    = softmax(H1 W1 + b)
    X_hat = sigmoid(rownorm(At_H) H0 Wa)

The reconstruction target depends on the :class:`~aegcn.models.common.Variant`.
Everything, including the channel weights, is trained end to end.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DimensionError
from ..nn import (
    Activation,
    dense_layer_backward,
    dense_layer_forward,
    gcn_layer_backward,
    gcn_layer_forward,
    gcn_layer_operator_grad,
    masked_class_loss,
    softmax_rows,
)
from ..optim import glorot_init
from ..sparse import (
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
    weighted_sum,
)
from .common import ForwardResult, Variant
from .decoder import reconstruction


def _softmax_vec(w):
    z = np.exp(w - w.max())
    return z / z.sum()


@dataclass
class TransformResult:
    alphas: np.ndarray  # (C, 2, K) convex-combination coefficients
    Q: list  # Q[i] = (Q_1^i, Q_2^i)
    A: list  # Q_1^i Q_2^i
    At: list  # A^i + I
    AtH: SparseMatrix


@dataclass
class HeteroProblem:
    """A heterogeneous graph plus everything that does not depend on the weights."""

    graph: object
    variant: Variant
    union: SparseMatrix  # shared pattern of every Q_j^i
    type_values: np.ndarray  # (K, nnz(union)) edge-type values on that pattern
    plan: object  # symbolic union @ union product
    fixed_target: SparseMatrix  # None for Variant.H (target moves with the weights)
    recon_scale: float
    normalized_target: bool

    @property
    def n(self):
        return self.graph.n


def metapath_plan(adjs):
    union = weighted_sum(adjs, np.ones(len(adjs)))
    return union, spgemm_plan(union, union)


def prepare_hetero(graph, variant=Variant.X, normalized_target=True):
    variant = Variant.parse(variant)
    adjs = list(graph.adjacencies)
    union, plan = metapath_plan(adjs)
    type_values = np.stack([A.gather(union) for A in adjs])
    n, d, k = graph.n, graph.d, graph.k

    def norm(M):
        return row_normalize(add_self_loops(M)) if normalized_target else M

    if variant is Variant.X:
        target, scale = SparseMatrix.from_dense(graph.features), float(n) * d
    elif variant is Variant.H:
        target, scale = None, float(n) * n
    elif variant is Variant.A:
        target, scale = norm(weighted_sum(adjs, np.ones(k))), float(n) * n
    else:
        target, scale = hstack([norm(A) for A in adjs]), float(n) * n * k
    return HeteroProblem(graph, variant, union, type_values, plan, target, scale, normalized_target)


def recon_width(graph, variant):
    variant = Variant.parse(variant)
    if variant is Variant.X:
        return graph.d
    if variant is Variant.S:
        return graph.n * graph.k
    return graph.n


def init_hetero_params(graph, variant, d0, d1, channels, rng, decoder_layers=1):
    if d0 % channels:
        raise ConfigError(f"d0 = {d0} is not divisible by the channel count {channels}")
    k = graph.k
    width = recon_width(graph, variant)
    params = {
        "channel_weights": np.stack(
            [np.stack([glorot_init(k, 1, rng)[:, 0] for _ in range(2)]) for _ in range(channels)]
        ),
        "Waggre": glorot_init(graph.d, d0 // channels, rng),
        "W0": glorot_init(d0, d1, rng),
        "W1": glorot_init(d1, graph.n_classes, rng),
        "b": np.zeros(graph.n_classes),
    }
    if decoder_layers == 1:
        params["Wa"] = glorot_init(d0, width, rng)
    elif decoder_layers == 2:
        params["Wa1"] = glorot_init(d0, d1, rng)
        params["Wa2"] = glorot_init(d1, width, rng)
    else:
        raise ConfigError(f"decoder_layers must be 1 or 2, got {decoder_layers}")
    return params


def hetero_transform(adjs, channel_weights, plan=None):
    """Build the per-channel ``A^i + I`` and their sum ``At_H``.

    ``plan`` is the symbolic product of the union pattern with itself (see
    :func:`metapath_plan`); it is computed on the fly when omitted.
    """
    adjs = list(adjs)
    if not adjs:
        raise DimensionError("need at least one adjacency matrix")
    n = adjs[0].n_rows
    if any(A.shape != (n, n) for A in adjs):
        raise DimensionError("all adjacency matrices must be n x n")
    cw = np.asarray(channel_weights, dtype=np.float64)
    if cw.ndim != 3 or cw.shape[1] != 2 or cw.shape[2] != len(adjs):
        raise DimensionError(f"channel weights must be (C, 2, {len(adjs)}), got {cw.shape}")
    alphas = np.empty_like(cw)
    Q, A, At = [], [], []
    for i in range(cw.shape[0]):
        pair = []
        for j in range(2):
            alphas[i, j] = _softmax_vec(cw[i, j])
            pair.append(weighted_sum(adjs, alphas[i, j]))
        if plan is None:
            plan = spgemm_plan(pair[0], pair[1])
        Ai = sp_sp_matmul(pair[0], pair[1], plan)
        Q.append(tuple(pair))
        A.append(Ai)
        At.append(add_self_loops(Ai))
    AtH = weighted_sum(At, np.ones(len(At)))
    return TransformResult(alphas, Q, A, At, AtH)


def hetero_aggregate(channel_adjs, X, Waggre):
    """``||_i ReLU(rownorm(At^i) X Waggre)``. Returns ``(H0, caches)``."""
    blocks, caches = [], []
    for At in channel_adjs:
        S = row_normalize(At)
        out, cache = gcn_layer_forward(S, X, Waggre, Activation.RELU)
        blocks.append(out)
        caches.append(cache)
    return np.hstack(blocks), caches


def _target(problem, S_H, AtH):
    if problem.variant is Variant.H:
        return S_H if problem.normalized_target else AtH
    return problem.fixed_target


def hetero_forward(problem, params, gamma, training=True, full_bce=False, block_rows=256, with_decoder=True, mask=None,
                   decoder_method=None):
    """Forward pass (the heterogeneous model uses no dropout, so ``training`` only
    matters for bookkeeping)."""
    graph = problem.graph
    tr = hetero_transform(graph.adjacencies, params["channel_weights"], problem.plan)
    H0, agg_caches = hetero_aggregate(tr.At, graph.features, params["Waggre"])
    S_H = row_normalize(tr.AtH)
    H1, c1 = gcn_layer_forward(S_H, H0, params["W0"], Activation.RELU)
    logits, c2 = dense_layer_forward(H1, params["W1"], params["b"], Activation.NONE)
    H2 = softmax_rows(logits)
    class_loss, g_logits = masked_class_loss(H2, graph.labels, graph.train if mask is None else mask)

    caches = {
        "transform": tr,
        "aggregate": agg_caches,
        "S_H": S_H,
        "H0": H0,
        "layer1": c1,
        "layer2": c2,
        "g_logits": g_logits,
        "training": training,
    }
    recon_loss = float("nan")
    if with_decoder:
        target = _target(problem, S_H, tr.AtH)
        if "Wa" in params:
            M = spmm(S_H, H0)
            rec = reconstruction(M, params["Wa"], target, problem.recon_scale, full_bce, block_rows, decoder_method)
        else:
            R, c3 = gcn_layer_forward(S_H, H0, params["Wa1"], Activation.RELU)
            caches["decoder_hidden"] = c3
            M = spmm(S_H, R)
            rec = reconstruction(M, params["Wa2"], target, problem.recon_scale, full_bce, block_rows, decoder_method)
        caches["decoder_input"] = M
        caches["recon"] = rec
        recon_loss = rec.loss
    total = class_loss + gamma * recon_loss if with_decoder else class_loss
    return ForwardResult(H1, H2, class_loss, recon_loss, total, gamma, caches)


def hetero_backward(problem, params, result, gamma=None):
    """Exact gradients of ``result.total_loss`` for every parameter, including
    the raw channel weights (through softmax, the meta-path products and both
    row normalisations)."""
    gamma = result.gamma if gamma is None else gamma
    c = result.caches
    tr, S_H, H0 = c["transform"], c["S_H"], c["H0"]
    S_Ht = S_H.transpose()
    grads = {}

    g_H1, grads["W1"], grads["b"] = dense_layer_backward(c["layer2"], params["W1"], c["g_logits"])
    g_H0, grads["W0"] = gcn_layer_backward(c["layer1"], params["W0"], g_H1, S_Ht)
    g_SH = gcn_layer_operator_grad(c["layer1"], params["W0"], g_H1)
    g_AtH = np.zeros(tr.AtH.nnz)

    if gamma != 0.0 and "recon" in c:
        rec = c["recon"]
        g_M = gamma * rec.grad_M
        if "Wa" in params:
            grads["Wa"] = gamma * rec.grad_Wa
            g_H0 = g_H0 + spmm(S_Ht, g_M)
            g_SH = g_SH + sddmm(S_H, g_M, H0)
        else:
            hidden = c["decoder_hidden"]
            grads["Wa2"] = gamma * rec.grad_Wa
            g_R = spmm(S_Ht, g_M)
            g_SH = g_SH + sddmm(S_H, g_M, hidden.output)
            g_dec, grads["Wa1"] = gcn_layer_backward(hidden, params["Wa1"], g_R, S_Ht)
            g_SH = g_SH + gcn_layer_operator_grad(hidden, params["Wa1"], g_R)
            g_H0 = g_H0 + g_dec
        if problem.variant is Variant.H:
            # the target is built from the learned adjacency as well
            if problem.normalized_target:
                g_SH = g_SH + gamma * rec.grad_target
            else:
                g_AtH = g_AtH + gamma * rec.grad_target
    for name in ("Wa", "Wa1", "Wa2"):
        if name in params and name not in grads:
            grads[name] = np.zeros_like(params[name])

    g_AtH = g_AtH + row_normalize_backward(tr.AtH, S_H, g_SH)

    n_channels = len(tr.At)
    width = g_H0.shape[1] // n_channels
    g_Waggre = np.zeros_like(params["Waggre"])
    g_cw = np.zeros_like(params["channel_weights"])
    for i in range(n_channels):
        cache = c["aggregate"][i]
        g_block = np.ascontiguousarray(g_H0[:, i * width : (i + 1) * width])
        S_i = cache.operator
        _, g_W = gcn_layer_backward(cache, params["Waggre"], g_block, need_input_grad=False)
        g_Waggre += g_W
        g_Si = gcn_layer_operator_grad(cache, params["Waggre"], g_block)
        At_i = tr.At[i]
        g_At = row_normalize_backward(At_i, S_i, g_Si)
        g_At = g_At + g_AtH[tr.AtH.locate(At_i.row_idx, At_i.col_idx)]
        A_i = tr.A[i]
        g_A = g_At[At_i.locate(A_i.row_idx, A_i.col_idx)]
        Q1, Q2 = tr.Q[i]
        g_Q1, g_Q2 = sp_sp_matmul_backward(Q1, Q2, problem.plan, g_A)
        for j, g_Q in enumerate((g_Q1, g_Q2)):
            g_alpha = problem.type_values @ g_Q
            a = tr.alphas[i, j]
            g_cw[i, j] = a * (g_alpha - np.dot(a, g_alpha))
    grads["Waggre"] = g_Waggre
    grads["channel_weights"] = g_cw
    return grads


def hetero_predict(problem, params):
    graph = problem.graph
    tr = hetero_transform(graph.adjacencies, params["channel_weights"], problem.plan)
    H0, _ = hetero_aggregate(tr.At, graph.features, params["Waggre"])
    H1, _ = gcn_layer_forward(row_normalize(tr.AtH), H0, params["W0"], Activation.RELU)
    logits, _ = dense_layer_forward(H1, params["W1"], params["b"])
    return softmax_rows(logits)


def recon_target(problem, params):
    """The reconstruction target for the current weights (a list of per-type
    blocks for ``Variant.S``)."""
    graph = problem.graph
    if problem.variant is Variant.X:
        return graph.features
    if problem.variant is Variant.H:
        tr = hetero_transform(graph.adjacencies, params["channel_weights"], problem.plan)
        return row_normalize(tr.AtH) if problem.normalized_target else tr.AtH
    if problem.variant is Variant.A:
        return problem.fixed_target
    n = graph.n
    T = problem.fixed_target
    return [
        SparseMatrix.from_coo(n, n, T.row_idx[sel], T.col_idx[sel] - k * n, T.values[sel])
        for k in range(graph.k)
        for sel in [(T.col_idx >= k * n) & (T.col_idx < (k + 1) * n)]
    ]
