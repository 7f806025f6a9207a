from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from aenum import IntEnum
from loguru import logger

from ..errors import ConfigError, ValidationError
from ..inr import Component, EncodingConfig, InrFunction, TableFunction
from ..points import NormalizationInfo, TFPointSet, compute_normalization
from ..transforms.stft import StftGrid
from ..utils import child_seeds
from .loss import mean_kl
from .optim import OptimizerKind
from .trainer import FactorPair, FactorTrainer


class ActivationKind(IntEnum):
    _init_ = "value display"

    FUNCTIONS = 1, "functions"
    MATRIX = 2, "matrix"

    @classmethod
    def parse(cls, value) -> ActivationKind:
        if isinstance(value, cls):
            return value
        for kind in cls:
            if kind.display == str(value).lower():
                return kind
        raise ConfigError(f'unknown activation kind "{value}", expected one of {", ".join(k.display for k in cls)}')


@dataclass(kw_only=True)
class TrainConfig:
    learning_rate: float = 1e-3
    table_learning_rate: float = 1e-2
    epochs: int = 2000
    batch_size: int = 1024
    seed: int = 0
    kl_floor: float = 1e-8
    optimizer: OptimizerKind = OptimizerKind.ADAM
    momentum: float = 0.9
    hidden_sizes: Tuple[int, ...] = (64, 64)
    encoding_frequencies: int = 8
    activation: ActivationKind = ActivationKind.FUNCTIONS
    log_every: int = 100

    def __post_init__(self):
        self.optimizer = OptimizerKind.parse(self.optimizer)
        self.activation = ActivationKind.parse(self.activation)
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        if not self.learning_rate > 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if not self.table_learning_rate > 0:
            raise ConfigError(f"table learning rate must be positive, got {self.table_learning_rate}")
        if int(self.epochs) < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if int(self.batch_size) < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if not self.kl_floor > 0:
            raise ConfigError(f"KL floor must be positive, got {self.kl_floor}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ConfigError(f"hidden sizes must be positive, got {self.hidden_sizes}")
        if int(self.encoding_frequencies) < 1:
            raise ConfigError(f"encoding needs at least one frequency, got {self.encoding_frequencies}")

    @classmethod
    def from_config(cls, conf, base: Optional[TrainConfig] = None, **overrides) -> TrainConfig:
        """
        Build from a config mapping, explicit non-None overrides taking precedence.
        Fields the mapping does not name come from `base`, or the class defaults.
        """
        values = {} if base is None else {f.name: getattr(base, f.name) for f in fields(cls)}
        for f in fields(cls):
            if overrides.get(f.name) is not None:
                values[f.name] = overrides[f.name]
            elif f.name in conf:
                values[f.name] = conf[f.name]
        return cls(**values)

    @property
    def encoding(self) -> EncodingConfig:
        return EncodingConfig.ladder(int(self.encoding_frequencies))

    def trainer_options(self) -> dict:
        """Keyword arguments of FactorTrainer.train, apart from the seed."""
        return dict(
            epochs=int(self.epochs),
            batch_size=int(self.batch_size),
            learning_rate=float(self.learning_rate),
            table_learning_rate=float(self.table_learning_rate),
            optimizer=self.optimizer,
            momentum=float(self.momentum),
            log_every=int(self.log_every),
        )


@dataclass(eq=False)
class InnmfModel:
    """K spectral functions over normalized frequency and K activations over normalized time."""

    spectral: List[Component]
    activations: List[Component]
    norm: NormalizationInfo
    loss_curve: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if not self.spectral or len(self.spectral) != len(self.activations):
            raise ValidationError("a model needs K >= 1 spectral functions and as many activations")

    @property
    def K(self) -> int:
        return len(self.spectral)

    @property
    def activation_kind(self) -> ActivationKind:
        if all(isinstance(h, TableFunction) for h in self.activations):
            return ActivationKind.MATRIX
        return ActivationKind.FUNCTIONS

    @classmethod
    def from_matrices(cls, W: np.ndarray, H: np.ndarray, frequencies_hz, times_sec) -> InnmfModel:
        """Lookup-table model whose components are exactly the columns of W and rows of H."""
        W = np.asarray(W, dtype=np.float64)
        H = np.asarray(H, dtype=np.float64)
        freqs = np.asarray(frequencies_hz, dtype=np.float64)
        times = np.asarray(times_sec, dtype=np.float64)
        if W.shape != (len(freqs), H.shape[0]) or H.shape[1] != len(times):
            raise ValidationError(f"factor shapes {W.shape} x {H.shape} do not match the grid")
        f_scale = float(freqs.max()) if freqs.max() > 0 else 1.0
        norm = compute_normalization(
            TFPointSet(times, np.zeros_like(times), np.ones_like(times)), f_scale
        )
        spectral = [TableFunction.from_values(norm.normalize_f(freqs), W[:, k]) for k in range(W.shape[1])]
        activations = [TableFunction.from_values(norm.normalize_t(times), H[k]) for k in range(H.shape[0])]
        return cls(spectral, activations, norm)

    def spectral_values(self, f_hz) -> np.ndarray:
        """K x n matrix of W_k(f)."""
        f = self.norm.normalize_f(np.asarray(f_hz, dtype=np.float64).reshape(-1))
        return np.array([w.evaluate_batch(f) for w in self.spectral])

    def activation_values(self, t_sec) -> np.ndarray:
        """K x n matrix of H_k(t)."""
        t = self.norm.normalize_t(np.asarray(t_sec, dtype=np.float64).reshape(-1))
        return np.array([h.evaluate_batch(t) for h in self.activations])

    def component_predictions(self, t_sec, f_hz) -> np.ndarray:
        """K x n de-normalized contributions W_k(f) H_k(t) m_scale."""
        t_sec = np.asarray(t_sec, dtype=np.float64).reshape(-1)
        f_hz = np.asarray(f_hz, dtype=np.float64).reshape(-1)
        ut, t_inv = np.unique(t_sec, return_inverse=True)
        uf, f_inv = np.unique(f_hz, return_inverse=True)
        return self.spectral_values(uf)[:, f_inv] * self.activation_values(ut)[:, t_inv] * self.norm.m_scale

    def predict_batch(self, t_sec, f_hz) -> np.ndarray:
        return self.component_predictions(t_sec, f_hz).sum(axis=0)

    def predict(self, t: float, f: float) -> float:
        return float(self.predict_batch([t], [f])[0])

    def predict_points(self, points: TFPointSet) -> np.ndarray:
        return self.predict_batch(points.t, points.f)

    def mean_kl(self, points: TFPointSet, kl_floor: float = 1e-8) -> float:
        """Per-point mean KL in normalized magnitude units of `points`."""
        scale = points.m.mean() if points.m.mean() > 0 else 1.0
        return mean_kl(points.m / scale, self.predict_points(points) / scale, kl_floor)


def predict(model: InnmfModel, t: float, f: float) -> float:
    return model.predict(t, f)


def _resolve_nyquist(points: TFPointSet, nyquist_hz: Optional[float]) -> float:
    if nyquist_hz:
        return float(nyquist_hz)
    top = float(points.f.max())
    logger.debug(f"No nyquist frequency given, scaling frequencies by the largest one ({top} Hz).")
    return top if top > 0 else 1.0


def init_activations(config: TrainConfig, seeds: Sequence[int], t_coords: np.ndarray) -> List[Component]:
    if config.activation == ActivationKind.MATRIX:
        return [TableFunction.random(t_coords, seed) for seed in seeds]
    return [InrFunction.init(seed, config.encoding, config.hidden_sizes) for seed in seeds]


def _train(pairs: List[FactorPair], points: TFPointSet, norm: NormalizationInfo, config: TrainConfig, seed: int, scheme: str):
    trainer = FactorTrainer(
        pairs,
        points.f,
        norm.normalize_t(points.t),
        norm.normalize_m(points.m),
        kl_floor=config.kl_floor,
        scheme=scheme,
    )
    return trainer.train(seed=seed, **config.trainer_options())


def innmf_fit(points: TFPointSet, K: int, config: TrainConfig, nyquist_hz: Optional[float] = None) -> InnmfModel:
    """Learn K spectral and K activation functions jointly on a point set."""
    if K < 1:
        raise ValidationError(f"rank K must be >= 1, got {K}")
    norm = compute_normalization(points, _resolve_nyquist(points, nyquist_hz))
    seeds = child_seeds(config.seed, 2 * K + 1)
    spectral = [InrFunction.init(s, config.encoding, config.hidden_sizes) for s in seeds[:K]]
    activations = init_activations(config, seeds[K : 2 * K], np.unique(norm.normalize_t(points.t)))
    pairs = [FactorPair(w, h, norm.f_scale) for w, h in zip(spectral, activations)]
    logger.bind(scheme="train").info(f"Fitting K={K} on {len(points)} points ({points.source_tag or 'untagged'}).")
    curve = _train(pairs, points, norm, config, seeds[-1], "train")
    return InnmfModel(spectral, activations, norm, curve)


def refit_activations(
    points: TFPointSet,
    fixed_spectral: Sequence[Component],
    K: int,
    config: TrainConfig,
    f_scale: float,
) -> InnmfModel:
    """
    Learn fresh activations for new points against a frozen dictionary. The
    dictionary keeps its frequency scale; time span and magnitude scale follow the points.
    """
    if len(fixed_spectral) != K:
        raise ValidationError(f"expected {K} spectral functions, got {len(fixed_spectral)}")
    spectral = [w.copy() for w in fixed_spectral]
    norm = compute_normalization(points, f_scale)
    seeds = child_seeds(config.seed, K + 1)
    activations = init_activations(config, seeds[:K], np.unique(norm.normalize_t(points.t)))
    pairs = [FactorPair(w, h, norm.f_scale, frozen_spectral=True) for w, h in zip(spectral, activations)]
    logger.bind(scheme="refit").info(f"Refitting K={K} activations on {len(points)} points.")
    curve = _train(pairs, points, norm, config, seeds[-1], "refit")
    return InnmfModel(spectral, activations, norm, curve)


def grid_collapse_check(model: InnmfModel, grid: Union[StftGrid, Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """
    Sample the model on a regular grid as the product of the sampled factor matrices,
    returning the bins x frames matrix of predictions.
    """
    if isinstance(grid, StftGrid):
        freqs, times = grid.frequencies, grid.times
    else:
        freqs, times = grid
    W = model.spectral_values(freqs).T
    H = model.activation_values(times)
    return (W @ H) * model.norm.m_scale
