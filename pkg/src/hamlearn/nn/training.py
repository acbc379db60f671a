"""Mini-batch training loop, metrics history, and checkpoint files."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset, derive_seed, split_dataset, target_dim_for
from ..qsim import XY_CHAIN_TD_ZFIELD
from .losses import cosine_similarity_batch, mse_loss_grad
from .network import (MODE_STATIC, MODE_TIMEDEP, NetworkArch, init_params,
                      network_backward, network_forward, predict)
from .optim import AdamState, adam_step, clip_gradients, init_adam

CHECKPOINT_VERSION = 1

# Gradient clipping guards long-sequence blowups; shorter runs go bare.
CLIP_DEFAULT_NORM = 5.0
CLIP_SEQUENCE_THRESHOLD = 75

# Seed streams hanging off TrainConfig.seed.
_STREAM_INIT = 101
_STREAM_SHUFFLE = 102
_STREAM_AUGMENT = 103
_STREAM_SPLIT = 104


@dataclass
class TrainConfig:
    hidden: int = 256
    batch_size: int = 256
    epochs: int = 200
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    seed: int = 0
    noise_eps: float = 0.0        # fresh N(0, eps) per batch when > 0
    grad_clip: float | None = None  # None = auto by sequence length
    val_fraction: float = 0.05
    patience: int = 20

    def __post_init__(self):
        if min(self.hidden, self.batch_size, self.epochs) < 1:
            raise ValueError("hidden, batch_size and epochs must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.noise_eps < 0:
            raise ValueError("noise_eps must be >= 0")


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    val_loss: float
    val_f: float


@dataclass
class TrainResult:
    params: dict
    arch: NetworkArch
    history: list[EpochMetrics]
    best_epoch: int
    adam: AdamState
    runtime_s: float = 0.0


def arch_for_data(family: str, n_qubits: int, n_points: int,
                  hidden: int) -> NetworkArch:
    """Network architecture matching a dataset family."""
    target_dim = target_dim_for(family, n_qubits, n_points)
    if family == XY_CHAIN_TD_ZFIELD:
        return NetworkArch(mode=MODE_TIMEDEP, input_dim=3 * n_qubits,
                           n_steps=n_points, hidden=hidden,
                           target_dim=target_dim, decoder_steps=n_points,
                           fields_per_step=n_qubits)
    return NetworkArch(mode=MODE_STATIC, input_dim=3 * n_qubits,
                       n_steps=n_points, hidden=hidden,
                       target_dim=target_dim)


def _check_data_matches(arch: NetworkArch, ds: Dataset) -> None:
    if ds.inputs.shape[1] != arch.n_steps * arch.input_dim:
        raise ValueError(
            f"dataset rows have {ds.inputs.shape[1]} values but the network "
            f"expects {arch.n_steps} steps x {arch.input_dim} features = "
            f"{arch.n_steps * arch.input_dim}")
    if ds.targets.shape[1] != arch.target_dim:
        raise ValueError(
            f"dataset targets have length {ds.targets.shape[1]}, network "
            f"emits {arch.target_dim}")


def evaluate_loss_f(params: dict, arch: NetworkArch, ds: Dataset):
    """(mean MSE, mean cosine similarity) over a dataset."""
    preds = predict(params, arch, ds.inputs)
    loss = float(np.mean((preds - ds.targets) ** 2))
    sims, valid = cosine_similarity_batch(preds, ds.targets)
    f = float(np.mean(sims[valid])) if valid.any() else float("nan")
    return loss, f


def train(train_set: Dataset, config: TrainConfig,
          val_set: Dataset | None = None,
          resume: tuple[dict, AdamState, int] | None = None,
          log=None) -> TrainResult:
    """Train a network for the dataset's family.

    With ``val_set`` omitted, ``val_fraction`` of the training set is
    held out for the per-epoch metrics and early stopping (plateau of
    ``patience`` epochs; the best-validation parameters are returned).
    ``resume`` restores (params, adam state, epoch) from a checkpoint.
    Deterministic for fixed config and data.
    """
    t_start = time.perf_counter()
    meta = train_set.meta
    arch = arch_for_data(meta.family, meta.n_qubits, meta.n_points,
                         config.hidden)
    _check_data_matches(arch, train_set)
    if val_set is None:
        train_set, val_set = split_dataset(
            train_set, 1.0 - config.val_fraction,
            derive_seed(config.seed, 0, _STREAM_SPLIT))
    _check_data_matches(arch, val_set)

    start_epoch = 0
    if resume is not None:
        params, adam, start_epoch = resume
        if set(params) != set(init_params(arch, 0)):
            raise ValueError("resumed parameters do not match architecture")
    else:
        params = init_params(arch, derive_seed(config.seed, 0, _STREAM_INIT))
        adam = init_adam(params, lr=config.lr, beta1=config.beta1,
                         beta2=config.beta2, eps=config.eps_adam)
    clip = config.grad_clip
    if clip is None and arch.n_steps > CLIP_SEQUENCE_THRESHOLD:
        clip = CLIP_DEFAULT_NORM

    rng_shuffle = np.random.default_rng(
        derive_seed(config.seed, 0, _STREAM_SHUFFLE))
    rng_noise = np.random.default_rng(
        derive_seed(config.seed, 0, _STREAM_AUGMENT))

    n = len(train_set)
    nb, ns, din = config.batch_size, arch.n_steps, arch.input_dim
    history: list[EpochMetrics] = []
    best_val = np.inf
    best_epoch = -1
    best_params = {k: v.copy() for k, v in params.items()}

    for epoch in range(start_epoch + 1, start_epoch + config.epochs + 1):
        perm = rng_shuffle.permutation(n)
        loss_sum = 0.0
        for lo in range(0, n, nb):
            idx = perm[lo:lo + nb]
            xb = train_set.inputs[idx].reshape(len(idx), ns, din)
            if config.noise_eps > 0.0:
                xb = xb + rng_noise.normal(0.0, config.noise_eps, xb.shape)
            yb = train_set.targets[idx]
            preds, cache = network_forward(params, arch, xb)
            loss, d_preds = mse_loss_grad(preds, yb)
            grads = network_backward(params, arch, cache, d_preds)
            if clip is not None:
                clip_gradients(grads, clip)
            adam_step(params, grads, adam)
            loss_sum += loss * len(idx)
        val_loss, val_f = evaluate_loss_f(params, arch, val_set)
        metrics = EpochMetrics(epoch=epoch, train_loss=loss_sum / n,
                               val_loss=val_loss, val_f=val_f)
        history.append(metrics)
        if log is not None:
            log(metrics)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
        elif epoch - best_epoch >= config.patience:
            break

    return TrainResult(params=best_params, arch=arch, history=history,
                       best_epoch=best_epoch, adam=adam,
                       runtime_s=time.perf_counter() - t_start)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_tensor(fh, kind: str, name: str, a: np.ndarray) -> None:
    dims = " ".join(str(d) for d in a.shape)
    vals = " ".join(_fmt(v) for v in a.reshape(-1))
    fh.write(f"{kind} {name} {a.ndim} {dims} {vals}".rstrip() + "\n")


def save_checkpoint(path, params: dict, arch: NetworkArch,
                    adam: AdamState | None = None, epoch: int = 0,
                    seed: int = 0) -> None:
    """Text checkpoint: one metadata line, then tensors in dict order."""
    with open(path, "w") as fh:
        fields = [
            f"format_version={CHECKPOINT_VERSION}",
            f"mode={arch.mode}",
            f"input_dim={arch.input_dim}",
            f"n_steps={arch.n_steps}",
            f"hidden={arch.hidden}",
            f"target_dim={arch.target_dim}",
            f"decoder_steps={arch.decoder_steps}",
            f"fields_per_step={arch.fields_per_step}",
            f"epoch={epoch}",
            f"seed={seed}",
            f"adam={0 if adam is None else 1}",
        ]
        if adam is not None:
            fields += [f"adam_step={adam.step}", f"lr={_fmt(adam.lr)}",
                       f"beta1={_fmt(adam.beta1)}",
                       f"beta2={_fmt(adam.beta2)}", f"eps={_fmt(adam.eps)}"]
        fh.write(" ".join(fields) + "\n")
        for name, p in params.items():
            _write_tensor(fh, "param", name, p)
        if adam is not None:
            for name in params:
                _write_tensor(fh, "adam_m", name, adam.m[name])
            for name in params:
                _write_tensor(fh, "adam_v", name, adam.v[name])


class CheckpointFormatError(ValueError):
    """Checkpoint file does not parse."""


def _parse_tensor_line(line: str):
    parts = line.split()
    kind, name, ndim = parts[0], parts[1], int(parts[2])
    shape = tuple(int(x) for x in parts[3:3 + ndim])
    n_vals = int(np.prod(shape)) if shape else 1
    vals = parts[3 + ndim:]
    if len(vals) != n_vals:
        raise CheckpointFormatError(
            f"tensor {name}: expected {n_vals} values, found {len(vals)}")
    a = np.array([float(v) for v in vals]).reshape(shape)
    return kind, name, a


def load_checkpoint(path):
    """Returns (params, arch, adam_or_None, meta_dict)."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header:
            raise CheckpointFormatError(f"{path}: empty file")
        try:
            kv = dict(item.split("=", 1) for item in header.split())
        except ValueError as exc:
            raise CheckpointFormatError(
                f"{path}: malformed header: {exc}") from exc
        if int(kv.get("format_version", -1)) != CHECKPOINT_VERSION:
            raise CheckpointFormatError(
                f"{path}: unsupported checkpoint version "
                f"{kv.get('format_version')}")
        arch = NetworkArch(
            mode=kv["mode"], input_dim=int(kv["input_dim"]),
            n_steps=int(kv["n_steps"]), hidden=int(kv["hidden"]),
            target_dim=int(kv["target_dim"]),
            decoder_steps=int(kv["decoder_steps"]),
            fields_per_step=int(kv["fields_per_step"]))
        params: dict[str, np.ndarray] = {}
        adam = None
        if kv["adam"] == "1":
            adam = AdamState(lr=float(kv["lr"]), beta1=float(kv["beta1"]),
                             beta2=float(kv["beta2"]), eps=float(kv["eps"]),
                             step=int(kv["adam_step"]))
        for line in fh:
            line = line.strip()
            if not line:
                continue
            kind, name, a = _parse_tensor_line(line)
            if kind == "param":
                params[name] = a
            elif kind == "adam_m" and adam is not None:
                adam.m[name] = a
            elif kind == "adam_v" and adam is not None:
                adam.v[name] = a
            else:
                raise CheckpointFormatError(
                    f"{path}: unexpected tensor kind {kind!r}")
    expected = set(init_params(arch, 0))
    if set(params) != expected:
        raise CheckpointFormatError(
            f"{path}: parameter set {sorted(params)} does not match "
            f"architecture (expected {sorted(expected)})")
    if adam is not None and (set(adam.m) != expected
                             or set(adam.v) != expected):
        raise CheckpointFormatError(f"{path}: incomplete optimizer state")
    meta = {"epoch": int(kv["epoch"]), "seed": int(kv["seed"])}
    return params, arch, adam, meta


def history_to_csv(history: list[EpochMetrics]) -> str:
    lines = ["epoch,train_loss,val_loss,val_f"]
    for m in history:
        lines.append(f"{m.epoch},{_fmt(m.train_loss)},{_fmt(m.val_loss)},"
                     f"{_fmt(m.val_f)}")
    return "\n".join(lines) + "\n"
