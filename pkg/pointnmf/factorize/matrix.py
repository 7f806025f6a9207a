"""Dense KL-NMF with multiplicative updates, the regular-grid baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from ..errors import ValidationError
from .loss import total_kl

EPS = 2.0**-52


@dataclass(eq=False)
class MatrixNmfModel:
    W: np.ndarray
    H: np.ndarray
    loss_curve: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if self.W.ndim != 2 or self.H.ndim != 2 or self.W.shape[1] != self.H.shape[0]:
            raise ValidationError(f"factor shapes {self.W.shape} and {self.H.shape} do not chain")
        if (self.W < 0).any() or (self.H < 0).any() or not (np.isfinite(self.W).all() and np.isfinite(self.H).all()):
            raise ValidationError("factors must be finite and non-negative")

    @property
    def K(self) -> int:
        return self.W.shape[1]

    def reconstruct(self) -> np.ndarray:
        return self.W @ self.H


def _check_matrix(V: np.ndarray, K: int, iterations: int) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or not V.size:
        raise ValidationError("V must be a non-empty matrix")
    if not np.isfinite(V).all() or (V < 0).any():
        raise ValidationError("V must be finite and non-negative")
    if not V.any():
        raise ValidationError("V is all zeros")
    if K < 1:
        raise ValidationError(f"rank K must be >= 1, got {K}")
    if iterations < 0:
        raise ValidationError(f"iterations must be >= 0, got {iterations}")
    return V


def _update_H(V: np.ndarray, W: np.ndarray, H: np.ndarray) -> np.ndarray:
    Q = V / np.maximum(W @ H, EPS)
    return H * (W.T @ Q) / np.maximum(W.sum(axis=0)[:, None], EPS)


def _update_W(V: np.ndarray, W: np.ndarray, H: np.ndarray) -> np.ndarray:
    Q = V / np.maximum(W @ H, EPS)
    return W * (Q @ H.T) / np.maximum(H.sum(axis=1)[None, :], EPS)


def _kl(V, W, H) -> float:
    return total_kl(V, np.maximum(W @ H, EPS)) / V.size


def nmf_multiplicative(V: np.ndarray, K: int, iterations: int = 500, seed: int = 0) -> MatrixNmfModel:
    """
    Lee-Seung KL updates from a uniform(0.1, 1.1) start. The loss curve holds the
    per-entry mean KL before any update and after each iteration.
    """
    V = _check_matrix(V, K, iterations)
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.1, 1.1, size=(V.shape[0], K))
    H = rng.uniform(0.1, 1.1, size=(K, V.shape[1]))
    curve = [_kl(V, W, H)]
    for _ in range(iterations):
        H = _update_H(V, W, H)
        W = _update_W(V, W, H)
        curve.append(_kl(V, W, H))
    logger.bind(scheme="train").debug(f"Matrix NMF K={K}: KL {curve[0]:.6g} -> {curve[-1]:.6g} in {iterations} iterations.")
    return MatrixNmfModel(W, H, np.array(curve))


def matrix_nmf_refit_H(V: np.ndarray, W: np.ndarray, iterations: int = 500, seed: int = 0) -> MatrixNmfModel:
    """Activation-only updates against a fixed dictionary W, which is returned untouched."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValidationError("W must be a matrix")
    V = _check_matrix(V, W.shape[1], iterations)
    if W.shape[0] != V.shape[0]:
        raise ValidationError(f"W has {W.shape[0]} rows but V has {V.shape[0]}")
    rng = np.random.default_rng(seed)
    H = rng.uniform(0.1, 1.1, size=(W.shape[1], V.shape[1]))
    curve = [_kl(V, W, H)]
    for _ in range(iterations):
        H = _update_H(V, W, H)
        curve.append(_kl(V, W, H))
    logger.bind(scheme="refit").debug(f"Matrix refit K={W.shape[1]}: KL {curve[0]:.6g} -> {curve[-1]:.6g}.")
    return MatrixNmfModel(W, H, np.array(curve))


def mean_kl_matrix(V: np.ndarray, model: MatrixNmfModel) -> float:
    """Per-entry mean KL, comparable with the per-point mean of the point-set engines."""
    return _kl(V, model.W, model.H)
