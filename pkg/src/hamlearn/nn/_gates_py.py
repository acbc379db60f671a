"""NumPy implementation of the fused gate-update kernels.

Fallback for :mod:`hamlearn.nn._gates_cy`; both compute identical
formulas on float64 arrays.  ``z`` packs the four gate pre-activations
as columns [forget | input | candidate | output], each block ``hidden``
wide.
"""

import numpy as np


def _sigmoid(x):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def pointwise_forward(z, c_prev):
    """Gate nonlinearities and state update for one time step.

    Returns (gates, c, tanh_c, f) where gates packs the activated
    (forget, input, candidate, output) blocks like ``z``.
    """
    h = z.shape[1] // 4
    gates = np.empty_like(z)
    gates[:, :2 * h] = _sigmoid(z[:, :2 * h])
    gates[:, 2 * h:3 * h] = np.tanh(z[:, 2 * h:3 * h])
    gates[:, 3 * h:] = _sigmoid(z[:, 3 * h:])
    g = gates[:, :h]
    i = gates[:, h:2 * h]
    e = gates[:, 2 * h:3 * h]
    d = gates[:, 3 * h:]
    c = g * c_prev + i * e
    tanh_c = np.tanh(c)
    f = d * tanh_c
    return gates, c, tanh_c, f


def pointwise_backward(gates, c_prev, tanh_c, d_f, d_c):
    """Reverse of :func:`pointwise_forward`.

    ``d_f``/``d_c`` are the gradients flowing into this step's hidden
    and cell state (``d_c`` may be None).  Returns (d_z, d_c_prev).
    """
    h = gates.shape[1] // 4
    g = gates[:, :h]
    i = gates[:, h:2 * h]
    e = gates[:, 2 * h:3 * h]
    d = gates[:, 3 * h:]
    dc = d_f * d * (1.0 - tanh_c * tanh_c)
    if d_c is not None:
        dc = dc + d_c
    d_z = np.empty_like(gates)
    d_z[:, :h] = (dc * c_prev) * (g * (1.0 - g))
    d_z[:, h:2 * h] = (dc * e) * (i * (1.0 - i))
    d_z[:, 2 * h:3 * h] = (dc * i) * (1.0 - e * e)
    d_z[:, 3 * h:] = (d_f * tanh_c) * (d * (1.0 - d))
    return d_z, dc * g
