"""LSTM cell and unrolled sequence forward/backward passes.

One cell update, with sigma the logistic function and [.,.] column
concatenation:

    G   = sigma(W_g [f_prev, o] + b_g)        forget gate
    I   = sigma(W_i [f_prev, o] + b_i)        input gate
    E   = tanh (W_e [f_prev, o] + b_e)        candidate state
    c   = G * c_prev + I * E
    D   = sigma(W_d [f_prev, o] + b_d)        output gate
    f   = D * tanh(c)

The four gate weights are stored stacked row-wise in that order, so one
GEMM per step produces all pre-activations; the elementwise part runs
through the selected kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

GATE_ORDER = ("forget", "input", "candidate", "output")


@dataclass
class LstmCellParams:
    """Stacked gate parameters: w is (4*hidden, hidden+input_dim), b is
    (4*hidden,), rows grouped per GATE_ORDER."""

    w: np.ndarray
    b: np.ndarray

    @property
    def hidden(self) -> int:
        return self.w.shape[0] // 4

    @property
    def input_dim(self) -> int:
        return self.w.shape[1] - self.hidden

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """(weight, bias) block of one gate."""
        k = GATE_ORDER.index(name)
        h = self.hidden
        return self.w[k * h:(k + 1) * h], self.b[k * h:(k + 1) * h]


def lstm_cell_forward(o_s: np.ndarray, f_prev: np.ndarray,
                      c_prev: np.ndarray, p: LstmCellParams):
    """Single cell step on 1-D vectors; returns (f, c, cache)."""
    h, d = p.hidden, p.input_dim
    if o_s.shape != (d,) or f_prev.shape != (h,) or c_prev.shape != (h,):
        raise ValueError(
            f"shape mismatch: o_s {o_s.shape}, f_prev {f_prev.shape}, "
            f"c_prev {c_prev.shape} for hidden={h}, input_dim={d}")
    x = np.concatenate([f_prev, o_s])[None, :]
    z = x @ p.w.T + p.b
    gates, c, tanh_c, f = kernels.pointwise_forward(z, c_prev[None, :].copy())
    cache = {"x": x, "gates": gates, "c_prev": c_prev[None, :],
             "tanh_c": tanh_c}
    return f[0], c[0], cache


def lstm_forward(p: LstmCellParams, inputs: np.ndarray,
                 f0: np.ndarray | None = None,
                 c0: np.ndarray | None = None):
    """Unrolled forward over a batch.

    inputs: (B, S, input_dim); f0/c0: (B, hidden) or None for zeros.
    Returns (f_last, cache); cache["F"][s] is the hidden state after
    step s.
    """
    nb, ns, d = inputs.shape
    h = p.hidden
    if d != p.input_dim:
        raise ValueError(
            f"inputs have {d} features per step, cell expects {p.input_dim}")
    f = np.zeros((nb, h)) if f0 is None else f0
    c = np.zeros((nb, h)) if c0 is None else np.ascontiguousarray(c0)
    x_steps, gate_steps, c_steps, tanh_steps, f_steps = [], [], [], [], []
    c_first = c
    for s in range(ns):
        x = np.empty((nb, h + d))
        x[:, :h] = f
        x[:, h:] = inputs[:, s, :]
        z = x @ p.w.T + p.b
        gates, c, tanh_c, f = kernels.pointwise_forward(z, c)
        x_steps.append(x)
        gate_steps.append(gates)
        c_steps.append(c)
        tanh_steps.append(tanh_c)
        f_steps.append(f)
    cache = {"X": x_steps, "gates": gate_steps, "C": c_steps,
             "TC": tanh_steps, "F": f_steps, "c0": c_first, "n_steps": ns}
    return f, cache


def lstm_backward(p: LstmCellParams, cache,
                  d_f_steps: np.ndarray | None = None,
                  d_f_last: np.ndarray | None = None,
                  d_c_last: np.ndarray | None = None,
                  want_dx: bool = False):
    """Backward through the unrolled sequence.

    d_f_steps: (B, S, hidden) gradients on every step's hidden state;
    d_f_last / d_c_last: extra gradients on the final hidden/cell state.
    Returns (dw, db, d_inputs or None, d_f0, d_c0).
    """
    x_steps, gate_steps = cache["X"], cache["gates"]
    c_steps, tanh_steps, c0 = cache["C"], cache["TC"], cache["c0"]
    ns = cache["n_steps"]
    nb = x_steps[0].shape[0]
    h = p.hidden
    dw = np.zeros_like(p.w)
    db = np.zeros_like(p.b)
    dx_inputs = np.empty((nb, ns, p.input_dim)) if want_dx else None
    d_f = np.zeros((nb, h)) if d_f_last is None else d_f_last
    d_c = d_c_last
    for s in reversed(range(ns)):
        if d_f_steps is not None:
            d_f = d_f + d_f_steps[:, s, :]
        c_prev = c_steps[s - 1] if s > 0 else c0
        d_z, d_c = kernels.pointwise_backward(gate_steps[s], c_prev,
                                              tanh_steps[s], d_f, d_c)
        dw += d_z.T @ x_steps[s]
        db += d_z.sum(axis=0)
        d_x = d_z @ p.w
        if want_dx:
            dx_inputs[:, s, :] = d_x[:, h:]
        d_f = d_x[:, :h]
    return dw, db, dx_inputs, d_f, d_c
