"""Autoencoder-constrained two-layer GCN on a homogeneous graph.

Classification path::

    H1 = ReLU(S X W0)          S = D^{-1/2} (A + I) D^{-1/2}
    H2 = softmax(S H1 W1)

Decoder (one layer)::

    A_hat = sigmoid(S H1 Wa)

or, with ``decoder_layers=2``, ``sigmoid(S ReLU(S H1 Wa1) Wa2)``. The decoder
is trained against ``S`` itself and only enters through the loss
``class_loss + gamma * recon_loss``.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..nn import (
    Activation,
    dropout,
    gcn_layer_backward,
    gcn_layer_forward,
    masked_class_loss,
    softmax_rows,
)
from ..optim import glorot_init
from ..sparse import add_self_loops, spmm, sym_normalize
from .common import ForwardResult
from .decoder import reconstruction


@dataclass
class HomoProblem:
    """A homogeneous graph with its propagation operator precomputed."""

    graph: object
    S: object
    S_t: object

    @property
    def n(self):
        return self.graph.n


def prepare_homo(graph):
    S = sym_normalize(add_self_loops(graph.adjacency))
    return HomoProblem(graph, S, S.transpose())


def init_homo_params(n, d, f, d1, rng, decoder_layers=1):
    params = {"W0": glorot_init(d, d1, rng), "W1": glorot_init(d1, f, rng)}
    if decoder_layers == 1:
        params["Wa"] = glorot_init(d1, n, rng)
    elif decoder_layers == 2:
        params["Wa1"] = glorot_init(d1, d1, rng)
        params["Wa2"] = glorot_init(d1, n, rng)
    else:
        raise ConfigError(f"decoder_layers must be 1 or 2, got {decoder_layers}")
    return params


def decoder_depth(params):
    return 2 if "Wa2" in params else 1


def homo_forward(
    problem,
    params,
    gamma,
    training=True,
    rng=None,
    dropout_rate=0.0,
    full_bce=False,
    block_rows=256,
    with_decoder=True,
    mask=None,
    decoder_method=None,
):
    """Forward pass. Dropout (on X and on H1) is active only when ``training``.

    ``mask`` selects the nodes of the classification loss (train split by
    default). With ``with_decoder=False`` the reconstruction is skipped and
    reported as ``nan``; use that only for inference.
    """
    graph, S = problem.graph, problem.S
    rate = dropout_rate if training else 0.0
    if rate > 0.0 and rng is None:
        raise ValueError("dropout needs a random stream")
    X, x_mask = dropout(graph.features, rate, rng)
    H1, c1 = gcn_layer_forward(S, X, params["W0"], Activation.RELU)
    H1d, h_mask = dropout(H1, rate, rng)
    logits, c2 = gcn_layer_forward(S, H1d, params["W1"], Activation.NONE)
    H2 = softmax_rows(logits)
    class_loss, g_logits = masked_class_loss(H2, graph.labels, graph.train if mask is None else mask)

    caches = {"layer1": c1, "layer2": c2, "g_logits": g_logits, "h_mask": h_mask, "x_mask": x_mask}
    recon_loss = float("nan")
    if with_decoder:
        target = S
        scale = float(problem.n) ** 2
        if decoder_depth(params) == 1:
            M = spmm(S, H1d)
            rec = reconstruction(M, params["Wa"], target, scale, full_bce, block_rows, decoder_method)
        else:
            R, c3 = gcn_layer_forward(S, H1d, params["Wa1"], Activation.RELU)
            caches["decoder_hidden"] = c3
            M = spmm(S, R)
            rec = reconstruction(M, params["Wa2"], target, scale, full_bce, block_rows, decoder_method)
        caches["recon"] = rec
        recon_loss = rec.loss
    total = class_loss + gamma * recon_loss if with_decoder else class_loss
    return ForwardResult(H1, H2, class_loss, recon_loss, total, gamma, caches)


def homo_backward(problem, params, result, gamma=None):
    """Exact gradients of ``result.total_loss`` w.r.t. every entry of ``params``."""
    gamma = result.gamma if gamma is None else gamma
    St = problem.S_t
    c = result.caches
    grads = {}
    g_H1d, grads["W1"] = gcn_layer_backward(c["layer2"], params["W1"], c["g_logits"], St)

    if gamma != 0.0 and "recon" in c:
        rec = c["recon"]
        g_M = gamma * rec.grad_M
        if decoder_depth(params) == 1:
            grads["Wa"] = gamma * rec.grad_Wa
            g_H1d = g_H1d + spmm(St, g_M)
        else:
            grads["Wa2"] = gamma * rec.grad_Wa
            g_R = spmm(St, g_M)
            g_dec, grads["Wa1"] = gcn_layer_backward(c["decoder_hidden"], params["Wa1"], g_R, St)
            g_H1d = g_H1d + g_dec
    for name in ("Wa", "Wa1", "Wa2"):
        if name in params and name not in grads:
            grads[name] = np.zeros_like(params[name])

    g_H1 = g_H1d if c["h_mask"] is None else g_H1d * c["h_mask"]
    _, grads["W0"] = gcn_layer_backward(c["layer1"], params["W0"], g_H1, St, need_input_grad=False)
    return grads


def homo_predict(problem, params):
    """Class probabilities with dropout off and the decoder skipped."""
    graph, S = problem.graph, problem.S
    H1, _ = gcn_layer_forward(S, graph.features, params["W0"], Activation.RELU)
    logits, _ = gcn_layer_forward(S, H1, params["W1"], Activation.NONE)
    return softmax_rows(logits)
