"""
Two-source separation with fixed per-source dictionaries: activations for both
sources are learned jointly on the mixture, the two predictions become soft masks
on the mixture STFT, and estimates are scored with projection-based ratios.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from .errors import MetricError, ValidationError
from .factorize import (
    FactorPair,
    FactorTrainer,
    InnmfModel,
    TrainConfig,
    grid_collapse_check,
    innmf_fit,
    matrix_nmf_refit_H,
    nmf_multiplicative,
)
from .factorize.innmf import init_activations
from .inr import Component
from .points import NormalizationInfo, compute_normalization
from .transforms import AudioBuffer, StftGrid, istft, stft, stft_to_points
from .utils import child_seeds

MASK_EPS = 1e-12
DB_CAP = 100.0


@dataclass(frozen=True)
class BssScores:
    sdr_db: float
    sir_db: float
    sar_db: float


@dataclass(eq=False)
class SeparationJob:
    mixture: AudioBuffer
    dictionary1: InnmfModel
    dictionary2: InnmfModel
    window_size: int
    hop: int
    config: TrainConfig
    references: Optional[Tuple[AudioBuffer, AudioBuffer]] = None

    def __post_init__(self):
        if self.dictionary1.K != self.dictionary2.K:
            raise ValidationError(f"dictionaries differ in rank ({self.dictionary1.K} vs {self.dictionary2.K})")
        if not len(self.mixture):
            raise ValidationError("empty mixture")
        if self.references is not None:
            for ref in self.references:
                if len(ref) != len(self.mixture):
                    raise ValidationError("references must have the length of the mixture")

    @property
    def K(self) -> int:
        return self.dictionary1.K

    def swapped(self) -> SeparationJob:
        refs = None if self.references is None else self.references[::-1]
        return SeparationJob(
            self.mixture, self.dictionary2, self.dictionary1, self.window_size, self.hop, self.config, refs
        )


@dataclass(eq=False)
class SeparationResult:
    estimates: Tuple[AudioBuffer, AudioBuffer]
    predictions: Tuple[np.ndarray, np.ndarray]
    masks: Tuple[np.ndarray, np.ndarray]
    method: str = "innmf"
    window_size: int = 0
    loss_curve: np.ndarray = field(default_factory=lambda: np.empty(0))
    metrics: Optional[Tuple[BssScores, BssScores]] = None

    def metric_rows(self) -> List[tuple]:
        if self.metrics is None:
            return []
        return [
            (self.method, self.window_size, i + 1, s.sdr_db, s.sir_db, s.sar_db) for i, s in enumerate(self.metrics)
        ]


def mixture_grid(job: SeparationJob) -> StftGrid:
    return stft(job.mixture, job.window_size, job.hop, center=True)


def fit_mixture_activations(job: SeparationJob) -> Tuple[List[Component], List[Component], np.ndarray]:
    """Train both sources' activations together on the mixture, dictionaries frozen."""
    points = stft_to_points(mixture_grid(job))
    norm = compute_normalization(points, job.mixture.nyquist_hz)
    K = job.K
    seeds = child_seeds(job.config.seed, 2 * K + 1)
    t_coords = np.unique(norm.normalize_t(points.t))
    acts1 = init_activations(job.config, seeds[:K], t_coords)
    acts2 = init_activations(job.config, seeds[K : 2 * K], t_coords)
    pairs = [
        FactorPair(w, h, d.norm.f_scale, frozen_spectral=True)
        for d, acts in ((job.dictionary1, acts1), (job.dictionary2, acts2))
        for w, h in zip(d.spectral, acts)
    ]
    trainer = FactorTrainer(
        pairs,
        points.f,
        norm.normalize_t(points.t),
        norm.normalize_m(points.m),
        kl_floor=job.config.kl_floor,
        scheme="separate",
    )
    curve = trainer.train(seed=seeds[-1], **job.config.trainer_options())
    return acts1, acts2, curve


def soft_masks(pred1: np.ndarray, pred2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ratio masks that sum to one everywhere, splitting silent bins evenly."""
    if pred1.shape != pred2.shape:
        raise ValidationError(f"prediction grids differ in shape: {pred1.shape} vs {pred2.shape}")
    denom = pred1 + pred2 + MASK_EPS
    mask1 = (pred1 + MASK_EPS / 2) / denom
    return mask1, 1.0 - mask1


def soft_mask_reconstruct(grid: StftGrid, pred1: np.ndarray, pred2: np.ndarray) -> Tuple[AudioBuffer, AudioBuffer]:
    if pred1.shape != grid.frames.shape:
        raise ValidationError(f"predictions of shape {pred1.shape} do not match the grid {grid.frames.shape}")
    mask1, mask2 = soft_masks(pred1, pred2)
    return istft(grid.with_frames(grid.frames * mask1)), istft(grid.with_frames(grid.frames * mask2))


def _safe_db(num: float, den: float) -> float:
    if den == 0:
        return DB_CAP
    if num == 0:
        return -DB_CAP
    return float(np.clip(10 * np.log10(num / den), -DB_CAP, DB_CAP))


def _energy(x: np.ndarray) -> float:
    return float(x @ x)


def bss_metrics(estimate: AudioBuffer, reference: AudioBuffer, interference: AudioBuffer) -> BssScores:
    """
    Instantaneous BSS decomposition: the target is the projection on the reference,
    interference the rest of the projection on (reference, interference), artifacts the residual.
    """
    est, ref, other = estimate.samples, reference.samples, interference.samples
    if not len(est) == len(ref) == len(other):
        raise MetricError(f"signal lengths differ: {len(est)}, {len(ref)}, {len(other)}")
    ref_energy = float(ref @ ref)
    if ref_energy == 0 or not other.any():
        raise MetricError("reference signals must have non-zero energy")
    s_target = (est @ ref) / ref_energy * ref
    basis = np.stack([ref, other], axis=1)
    coef = np.linalg.lstsq(basis, est, rcond=None)[0]
    projection = basis @ coef
    e_interf = projection - s_target
    e_artif = est - projection
    return BssScores(
        sdr_db=_safe_db(_energy(s_target), _energy(e_interf + e_artif)),
        sir_db=_safe_db(_energy(s_target), _energy(e_interf)),
        sar_db=_safe_db(_energy(s_target + e_interf), _energy(e_artif)),
    )


def _score(result: SeparationResult, references: Optional[Tuple[AudioBuffer, AudioBuffer]]):
    if references is None:
        return
    ref1, ref2 = references
    result.metrics = (
        bss_metrics(result.estimates[0], ref1, ref2),
        bss_metrics(result.estimates[1], ref2, ref1),
    )
    log = logger.bind(scheme="separate")
    for i, s in enumerate(result.metrics, 1):
        log.info(f"{result.method} N={result.window_size} source {i}: SDR {s.sdr_db:.2f} SIR {s.sir_db:.2f} SAR {s.sar_db:.2f} dB.")


def run_separation(job: SeparationJob) -> SeparationResult:
    grid = mixture_grid(job)
    acts1, acts2, curve = fit_mixture_activations(job)
    points = stft_to_points(grid)
    norm = compute_normalization(points, job.mixture.nyquist_hz)
    preds = []
    for d, acts in ((job.dictionary1, acts1), (job.dictionary2, acts2)):
        # trained in normalized magnitude units, so the mixture's m_scale applies
        source = InnmfModel(d.spectral, acts, NormalizationInfo(norm.t_span, d.norm.f_scale, norm.m_scale))
        preds.append(grid_collapse_check(source, grid))
    estimates = soft_mask_reconstruct(grid, preds[0], preds[1])
    result = SeparationResult(
        estimates=estimates,
        predictions=tuple(preds),
        masks=soft_masks(preds[0], preds[1]),
        method="innmf",
        window_size=job.window_size,
        loss_curve=curve,
    )
    _score(result, job.references)
    return result


def train_dictionary(audio: AudioBuffer, K: int, window_size: int, hop: int, config: TrainConfig) -> InnmfModel:
    """Fit a K-component model to the STFT points of clean source material."""
    points = stft_to_points(stft(audio, window_size, hop, center=True))
    return innmf_fit(points, K, config, nyquist_hz=audio.nyquist_hz)


def train_matrix_dictionary(audio: AudioBuffer, K: int, window_size: int, hop: int, iterations: int, seed: int) -> np.ndarray:
    V = stft(audio, window_size, hop, center=True).magnitude
    return nmf_multiplicative(V / V.mean(), K, iterations, seed).W


def run_matrix_separation(
    mixture: AudioBuffer,
    W1: np.ndarray,
    W2: np.ndarray,
    window_size: int,
    hop: int,
    iterations: int = 500,
    seed: int = 0,
    references: Optional[Tuple[AudioBuffer, AudioBuffer]] = None,
) -> SeparationResult:
    """Baseline: activation-only multiplicative updates against the stacked dictionaries."""
    grid = stft(mixture, window_size, hop, center=True)
    V = grid.magnitude
    scale = V.mean() if V.mean() > 0 else 1.0
    model = matrix_nmf_refit_H(V / scale, np.hstack([W1, W2]), iterations, seed)
    k1 = W1.shape[1]
    preds = (W1 @ model.H[:k1] * scale, W2 @ model.H[k1:] * scale)
    result = SeparationResult(
        estimates=soft_mask_reconstruct(grid, *preds),
        predictions=preds,
        masks=soft_masks(*preds),
        method="nmf",
        window_size=window_size,
        loss_curve=model.loss_curve,
    )
    _score(result, references)
    return result
