"""Initialisation, random streams and the Adam update."""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


def make_stream(seed):
    """Seeded generator (PCG64); identical seeds give identical streams on every platform."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def glorot_init(n_in, n_out, rng):
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_in, n_out))


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def default_no_decay(name):
    return name == "b" or name.startswith("b_")


def adam_step(params, grads, state, lr, weight_decay=0.0, no_decay=default_no_decay):
    """One Adam update with L2 weight decay folded into the gradient.

    Returns ``(new_params, new_state)``; the inputs are left untouched.
    Parameters for which ``no_decay(name)`` is true (biases by default) are
    not decayed.
    """
    bad = {
        name: int(np.size(g) - np.count_nonzero(np.isfinite(g)))
        for name, g in grads.items()
        if not np.all(np.isfinite(g))
    }
    if bad:
        raise NumericalError(
            "non-finite gradient entries: " + ", ".join(f"{k} ({v})" for k, v in sorted(bad.items())),
            {"non_finite_gradients": bad, "step": state.t},
        )
    t = state.t + 1
    new_params, m_new, v_new = {}, {}, {}
    c1 = 1.0 - BETA1**t
    c2 = 1.0 - BETA2**t
    for name, p in params.items():
        g = grads[name]
        if weight_decay and not no_decay(name):
            g = g + weight_decay * p
        m = BETA1 * state.m.get(name, 0.0) + (1.0 - BETA1) * g
        v = BETA2 * state.v.get(name, 0.0) + (1.0 - BETA2) * g * g
        new_params[name] = p - lr * (m / c1) / (np.sqrt(v / c2) + EPS)
        m_new[name] = m
        v_new[name] = v
    return new_params, AdamState(m_new, v_new, t)
