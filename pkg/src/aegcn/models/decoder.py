"""Sigmoid reconstruction head shared by both model families.

The head computes ``P = sigmoid(M @ Wa)`` and the cross-entropy against a
sparse target without ever holding the full ``P``:

* one-sided loss (``-sum T log P``): both the loss and its gradient vanish
  wherever the target is zero, so only the target's stored entries are
  evaluated;
* full binary cross-entropy: ``P`` is evaluated ``block_rows`` rows at a time.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_array

from ..errors import DimensionError
from ..nn import LOG_EPS, safe_log, sigmoid
from ..sparse import sddmm, spmm


@dataclass
class ReconResult:
    loss: float
    grad_M: np.ndarray
    grad_Wa: np.ndarray
    # d loss / d target values, aligned with the target's stored entries
    grad_target: np.ndarray


def reconstruction(M, Wa, target, scale, full_bce=False, block_rows=256, method=None):
    """Loss and gradients of ``-(1/scale) sum T log sigmoid(M @ Wa)`` (plus the
    ``(1-T) log(1-P)`` term when ``full_bce``).

    ``method`` forces ``"sampled"`` or ``"blocked"``; by default the sampled
    path is used for the one-sided loss.
    """
    if M.shape[1] != Wa.shape[0] or target.shape != (M.shape[0], Wa.shape[1]):
        raise DimensionError(f"decoder shapes {M.shape} @ {Wa.shape} vs target {target.shape}")
    if method is None:
        method = "blocked" if full_bce else "sampled"
    if method == "sampled":
        if full_bce:
            raise ValueError("the sampled path only supports the one-sided loss")
        return _sampled(M, Wa, target, scale)
    return _blocked(M, Wa, target, scale, full_bce, block_rows)


def _sampled(M, Wa, target, scale):
    t = target.values
    p = sigmoid(sddmm(target, M, Wa.T))
    log_p = safe_log(p)
    loss = -float(np.dot(t, log_p)) / scale
    g_logit = np.where(p > LOG_EPS, -t * (1.0 - p), 0.0) / scale
    G = target.with_values(g_logit)
    grad_Wa = spmm(G.transpose(), M).T
    grad_M = spmm(G, Wa.T)
    return ReconResult(loss, grad_M, np.ascontiguousarray(grad_Wa), -log_p / scale)


def _blocked(M, Wa, target, scale, full_bce, block_rows):
    """Evaluate the logits ``block_rows`` rows at a time.

    The one-sided terms are read off each block at the target's stored
    entries. With ``full_bce`` the ``(1 - T) log(1 - P)`` term needs every
    entry of the block, so it is computed densely and corrected at the stored
    entries.
    """
    n = M.shape[0]
    grad_M = np.empty((n, M.shape[1]))
    grad_Wa = np.zeros_like(Wa)
    grad_target = np.empty(target.nnz)
    total = 0.0
    for r0 in range(0, n, block_rows):
        r1 = min(r0 + block_rows, n)
        lo, hi = target.row_ptr[r0], target.row_ptr[r1]
        r, c, t = target.row_idx[lo:hi] - r0, target.col_idx[lo:hi], target.values[lo:hi]
        Mb = M[r0:r1]
        logits = Mb @ Wa
        p = sigmoid(logits[r, c])
        log_p = safe_log(p)
        total -= float(np.dot(t, log_p))
        g_nz = np.where(p > LOG_EPS, -t * (1.0 - p), 0.0)
        t_grad = -log_p
        if full_bce:
            q = sigmoid(-logits)
            log_q = safe_log(q)
            G = np.where(q > LOG_EPS, sigmoid(logits), 0.0)
            q_nz, log_q_nz = q[r, c], log_q[r, c]
            # (1 - T) weights: all entries minus the stored part
            total -= float(np.sum(log_q)) - float(np.dot(t, log_q_nz))
            G[r, c] += g_nz - np.where(q_nz > LOG_EPS, t * p, 0.0)
            G /= scale
            grad_Wa += Mb.T @ G
            grad_M[r0:r1] = G @ Wa.T
            t_grad = t_grad + log_q_nz
        else:
            G = csr_array((g_nz / scale, (r, c)), shape=(r1 - r0, Wa.shape[1]))
            grad_Wa += (G.T @ Mb).T
            grad_M[r0:r1] = G @ Wa.T
        grad_target[lo:hi] = t_grad / scale
    return ReconResult(total / scale, grad_M, grad_Wa, grad_target)
