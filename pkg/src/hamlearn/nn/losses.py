"""Objective and similarity metrics."""

from __future__ import annotations

import numpy as np

NORM_FLOOR = 1e-12


class UndefinedSimilarityError(ValueError):
    """Cosine similarity is undefined for a (near-)zero vector."""


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error (1/M) sum_m (target_m - pred_m)^2."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(
            f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    return float(np.mean((target - pred) ** 2))


def mse_loss_grad(preds: np.ndarray, targets: np.ndarray):
    """Batch-mean MSE and its gradient w.r.t. preds, both (B, M)."""
    if preds.shape != targets.shape:
        raise ValueError(
            f"shape mismatch: preds {preds.shape} vs targets "
            f"{targets.shape}")
    diff = preds - targets
    loss = float(np.mean(diff ** 2))
    return loss, (2.0 / diff.size) * diff


def cosine_similarity(pred: np.ndarray, target: np.ndarray) -> float:
    """Normalized inner product, in [-1, 1]."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(
            f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    np_, nt = np.linalg.norm(pred), np.linalg.norm(target)
    if np_ < NORM_FLOOR or nt < NORM_FLOOR:
        raise UndefinedSimilarityError(
            f"vector norms ({np_:.3e}, {nt:.3e}) below {NORM_FLOOR}")
    return float(np.dot(pred, target) / (np_ * nt))


def cosine_similarity_batch(preds: np.ndarray, targets: np.ndarray):
    """Per-sample similarities plus a validity mask.

    Samples where either vector's norm is below the floor are marked
    invalid instead of raising, so callers can report exclusion counts.
    """
    if preds.shape != targets.shape:
        raise ValueError(
            f"shape mismatch: preds {preds.shape} vs targets "
            f"{targets.shape}")
    norm_p = np.linalg.norm(preds, axis=1)
    norm_t = np.linalg.norm(targets, axis=1)
    valid = (norm_p >= NORM_FLOOR) & (norm_t >= NORM_FLOOR)
    sims = np.zeros(preds.shape[0])
    dots = np.einsum("bm,bm->b", preds, targets)
    sims[valid] = dots[valid] / (norm_p[valid] * norm_t[valid])
    return sims, valid
