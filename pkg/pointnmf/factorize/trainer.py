"""
Mini-batch gradient descent on the per-point generalized KL loss of a sum of
separable products  m(t, f) ~ sum_k W_k(f) H_k(t).

Every component is evaluated on the distinct coordinates of a batch only, then
scattered back to the points. Frozen spectral components are evaluated once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from ..errors import DivergenceError
from ..inr import Component, GradientBuffer, TableFunction
from ..utils import batch
from .loss import kl_pointwise
from .optim import Optimizer, OptimizerKind, make_optimizer


@dataclass(eq=False)
class FactorPair:
    spectral: Component
    activation: Component
    f_scale: float
    frozen_spectral: bool = False


class FactorTrainer:
    def __init__(
        self,
        pairs: Sequence[FactorPair],
        f_hz: np.ndarray,
        t_norm: np.ndarray,
        m_norm: np.ndarray,
        kl_floor: float = 1e-8,
        scheme: str = "train",
    ):
        self.pairs = list(pairs)
        self.m = np.asarray(m_norm, dtype=np.float64)
        self.kl_floor = kl_floor
        self.log = logger.bind(scheme=scheme)
        self.f_unique, self.f_index = np.unique(np.asarray(f_hz, dtype=np.float64), return_inverse=True)
        self.t_unique, self.t_index = np.unique(np.asarray(t_norm, dtype=np.float64), return_inverse=True)
        self._frozen = {}
        for i, p in enumerate(self.pairs):
            if p.frozen_spectral:
                self._frozen[i] = p.spectral.evaluate_batch(self.f_unique / p.f_scale)
        self.buffers: List[List[GradientBuffer]] = []
        params, grads, in_table = [], [], []
        for p in self.pairs:
            components = [p.activation] if p.frozen_spectral else [p.spectral, p.activation]
            buffers = []
            for c in components:
                buf = GradientBuffer.like(c.parameters())
                params.extend(c.parameters())
                in_table.extend([isinstance(c, TableFunction)] * len(buf.grads))
                grads.extend(buf.grads)
                buffers.append(buf)
            self.buffers.append(buffers)
        self.params = params
        self.grads = grads
        self.in_table = in_table

    def __len__(self):
        return len(self.m)

    def _spectral(self, i: int, f_ids: np.ndarray):
        pair = self.pairs[i]
        if pair.frozen_spectral:
            return self._frozen[i][f_ids], None
        return pair.spectral.forward(self.f_unique[f_ids] / pair.f_scale)

    def predict(self, idx: Optional[np.ndarray] = None) -> np.ndarray:
        """Normalized predictions at the given point indices (all points by default)."""
        f_index = self.f_index if idx is None else self.f_index[idx]
        t_index = self.t_index if idx is None else self.t_index[idx]
        f_ids, f_inv = np.unique(f_index, return_inverse=True)
        t_ids, t_inv = np.unique(t_index, return_inverse=True)
        pred = np.zeros(len(f_index))
        for i, pair in enumerate(self.pairs):
            w, _ = self._spectral(i, f_ids)
            h = pair.activation.evaluate_batch(self.t_unique[t_ids])
            pred += w[f_inv] * h[t_inv]
        return pred

    def mean_loss(self) -> float:
        return float(np.mean(kl_pointwise(self.m, np.maximum(self.predict(), self.kl_floor))))

    def _step(self, idx: np.ndarray, optimizer: Optimizer, epoch: int, number: int) -> float:
        f_ids, f_inv = np.unique(self.f_index[idx], return_inverse=True)
        t_ids, t_inv = np.unique(self.t_index[idx], return_inverse=True)
        caches = []
        pred = np.zeros(len(idx))
        for i, pair in enumerate(self.pairs):
            w, w_cache = self._spectral(i, f_ids)
            h, h_cache = pair.activation.forward(self.t_unique[t_ids])
            w_points = w[f_inv]
            h_points = h[t_inv]
            pred += w_points * h_points
            caches.append((w_cache, h_cache, w_points, h_points))
        m = self.m[idx]
        floored = np.maximum(pred, self.kl_floor)
        loss = float(np.mean(kl_pointwise(m, floored)))
        if not np.isfinite(loss):
            raise DivergenceError(epoch, number, loss)
        # d(mean KL)/d(pred), zero where the floor is active
        g = np.where(pred > self.kl_floor, 1.0 - m / floored, 0.0) / len(idx)
        for buffers in self.buffers:
            for buf in buffers:
                buf.zero()
        for pair, buffers, (w_cache, h_cache, w_points, h_points) in zip(self.pairs, self.buffers, caches):
            if not pair.frozen_spectral:
                upstream = np.bincount(f_inv, weights=g * h_points, minlength=len(f_ids))
                pair.spectral.backward_cached(w_cache, upstream, buffers[0])
            upstream = np.bincount(t_inv, weights=g * w_points, minlength=len(t_ids))
            pair.activation.backward_cached(h_cache, upstream, buffers[-1])
        optimizer.step(self.grads)
        return loss

    def train(
        self,
        epochs: int,
        batch_size: int,
        learning_rate: float,
        seed: int,
        optimizer: OptimizerKind = OptimizerKind.ADAM,
        momentum: float = 0.9,
        log_every: int = 100,
        table_learning_rate: Optional[float] = None,
    ) -> np.ndarray:
        """
        Run the descent and return the loss curve: entry 0 is the mean KL over all
        points before any update, entry e the batch-weighted mean KL of epoch e.
        Lookup-table parameters step with `table_learning_rate` when it is given.
        """
        rng = np.random.default_rng(seed)
        table_rate = learning_rate if table_learning_rate is None else table_learning_rate
        rates = [table_rate if t else learning_rate for t in self.in_table]
        opt = make_optimizer(optimizer, self.params, rates, momentum)
        initial = self.mean_loss()
        if not np.isfinite(initial):
            raise DivergenceError(0, 0, initial)
        curve = [initial]
        self.log.debug(f"Training {len(self.params)} parameter arrays on {len(self)} points, initial KL {initial:.6g}.")
        for epoch in range(1, epochs + 1):
            order = rng.permutation(len(self))
            total = 0.0
            for number, idx in enumerate(batch(order, batch_size)):
                total += self._step(idx, opt, epoch, number) * len(idx)
            curve.append(total / len(self))
            if log_every and epoch % log_every == 0:
                self.log.debug(f"Epoch {epoch}/{epochs}: mean KL {curve[-1]:.6g}.")
        self.log.info(f"Finished {epochs} epochs, mean KL {curve[0]:.6g} -> {curve[-1]:.6g}.")
        return np.array(curve)
