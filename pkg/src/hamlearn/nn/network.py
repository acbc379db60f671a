"""Network architecture: LSTM encoder plus one of two output heads.

Static-parameter targets use a single affine head on the encoder's
final hidden state (no hidden layers, no output activation).  Targets
with per-time-step components add a decoder LSTM: it is seeded with the
encoder's final hidden state as both its initial hidden and cell state,
runs one step per target time point on empty (zero-width) inputs, and
an affine map projects every step to that step's field values; a second
affine map of the encoder state emits the static couplings.  Outputs
concatenate time-major, couplings last, matching the dataset targets.

Parameters live in a flat name -> array dict whose insertion order is
the declared checkpoint order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lstm import LstmCellParams, lstm_backward, lstm_forward

MODE_STATIC = "static"
MODE_TIMEDEP = "timedep"


@dataclass(frozen=True)
class NetworkArch:
    mode: str
    input_dim: int        # features per time step (3N)
    n_steps: int          # encoder steps S
    hidden: int
    target_dim: int       # M
    decoder_steps: int = 0
    fields_per_step: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_STATIC, MODE_TIMEDEP):
            raise ValueError(f"unknown mode {self.mode!r}")
        if min(self.input_dim, self.n_steps, self.hidden,
               self.target_dim) < 1:
            raise ValueError(f"non-positive dimension in {self}")
        if self.mode == MODE_TIMEDEP:
            if self.decoder_steps < 1 or self.fields_per_step < 1:
                raise ValueError("timedep mode needs decoder dimensions")
            if self.n_static < 0:
                raise ValueError(
                    f"target_dim {self.target_dim} too small for "
                    f"{self.decoder_steps} x {self.fields_per_step} fields")

    @property
    def n_static(self) -> int:
        return self.target_dim - self.decoder_steps * self.fields_per_step


def _glorot(rng: np.random.Generator, n_out: int, n_in: int,
            shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, shape if shape is not None
                       else (n_out, n_in))


def init_params(arch: NetworkArch, seed: int) -> dict[str, np.ndarray]:
    """Uniform Glorot weights; zero biases except forget-gate bias = 1."""
    rng = np.random.default_rng(seed)
    h, d = arch.hidden, arch.input_dim
    params: dict[str, np.ndarray] = {}

    def lstm_block(prefix: str, input_dim: int):
        # per-gate fan: in = hidden + input_dim, out = hidden
        params[prefix + ".w"] = _glorot(rng, h, h + input_dim,
                                        (4 * h, h + input_dim))
        b = np.zeros(4 * h)
        b[:h] = 1.0
        params[prefix + ".b"] = b

    lstm_block("enc", d)
    if arch.mode == MODE_STATIC:
        params["head.w"] = _glorot(rng, arch.target_dim, h)
        params["head.b"] = np.zeros(arch.target_dim)
    else:
        lstm_block("dec", 0)
        params["proj.w"] = _glorot(rng, arch.fields_per_step, h)
        params["proj.b"] = np.zeros(arch.fields_per_step)
        params["stat.w"] = _glorot(rng, arch.n_static, h)
        params["stat.b"] = np.zeros(arch.n_static)
    return params


def _enc_cell(params) -> LstmCellParams:
    return LstmCellParams(params["enc.w"], params["enc.b"])


def _dec_cell(params) -> LstmCellParams:
    return LstmCellParams(params["dec.w"], params["dec.b"])


def head_forward(params: dict, arch: NetworkArch, f_last: np.ndarray):
    """Output head on the encoder's final hidden state (batched).

    Returns (preds, head_cache).
    """
    if arch.mode == MODE_STATIC:
        preds = f_last @ params["head.w"].T + params["head.b"]
        return preds, {"f_last": f_last}
    nb = f_last.shape[0]
    dec_inputs = np.zeros((nb, arch.decoder_steps, 0))
    _, dec_cache = lstm_forward(_dec_cell(params), dec_inputs,
                                f0=f_last, c0=f_last)
    f_steps = np.stack(dec_cache["F"])                    # (S', B, H)
    wave = np.einsum("sbh,nh->bsn", f_steps, params["proj.w"])
    wave += params["proj.b"]
    statics = f_last @ params["stat.w"].T + params["stat.b"]
    preds = np.concatenate([wave.reshape(nb, -1), statics], axis=1)
    return preds, {"f_last": f_last, "dec": dec_cache, "f_steps": f_steps}


def network_forward(params: dict, arch: NetworkArch, inputs: np.ndarray):
    """Full forward pass; inputs (B, S, input_dim) -> preds (B, M)."""
    if inputs.ndim != 3 or inputs.shape[1:] != (arch.n_steps,
                                                arch.input_dim):
        raise ValueError(
            f"inputs shape {inputs.shape} does not match arch "
            f"(S={arch.n_steps}, input_dim={arch.input_dim})")
    f_last, enc_cache = lstm_forward(_enc_cell(params), inputs)
    preds, head_cache = head_forward(params, arch, f_last)
    return preds, {"enc": enc_cache, "head": head_cache}


def network_backward(params: dict, arch: NetworkArch, cache,
                     d_preds: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter, given the
    loss gradient on the predictions."""
    grads: dict[str, np.ndarray] = {}
    head_cache = cache["head"]
    f_last = head_cache["f_last"]
    if arch.mode == MODE_STATIC:
        grads["head.w"] = d_preds.T @ f_last
        grads["head.b"] = d_preds.sum(axis=0)
        d_f_last = d_preds @ params["head.w"]
    else:
        nb = d_preds.shape[0]
        n_wave = arch.decoder_steps * arch.fields_per_step
        d_wave = d_preds[:, :n_wave].reshape(nb, arch.decoder_steps,
                                             arch.fields_per_step)
        d_stat = d_preds[:, n_wave:]
        f_steps = head_cache["f_steps"]
        grads["proj.w"] = np.einsum("bsn,sbh->nh", d_wave, f_steps)
        grads["proj.b"] = d_wave.sum(axis=(0, 1))
        grads["stat.w"] = d_stat.T @ f_last
        grads["stat.b"] = d_stat.sum(axis=0)
        d_f_steps = np.einsum("bsn,nh->bsh", d_wave, params["proj.w"])
        dec_w, dec_b, _, d_f0, d_c0 = lstm_backward(
            _dec_cell(params), head_cache["dec"], d_f_steps=d_f_steps)
        grads["dec.w"] = dec_w
        grads["dec.b"] = dec_b
        d_f_last = d_stat @ params["stat.w"] + d_f0 + d_c0
    enc_w, enc_b, _, _, _ = lstm_backward(_enc_cell(params), cache["enc"],
                                          d_f_last=d_f_last)
    grads["enc.w"] = enc_w
    grads["enc.b"] = enc_b
    return {name: grads[name] for name in params}


def predict(params: dict, arch: NetworkArch, inputs: np.ndarray,
            batch_size: int = 1024) -> np.ndarray:
    """Forward-only predictions for flat inputs (n, S*input_dim)."""
    n = inputs.shape[0]
    out = np.empty((n, arch.target_dim))
    for lo in range(0, n, batch_size):
        hi = min(lo + batch_size, n)
        batch = inputs[lo:hi].reshape(hi - lo, arch.n_steps, arch.input_dim)
        out[lo:hi], _ = network_forward(params, arch, batch)
    return out
