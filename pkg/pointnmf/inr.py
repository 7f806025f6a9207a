"""
Continuous non-negative functions of one normalised coordinate.

InrFunction is a Fourier-encoded, sine-activated perceptron with a softplus output.
TableFunction is the lookup-table counterpart used when a coordinate axis is regular.
Both expose the same forward / backward / parameters interface to the trainers.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, List, Protocol, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .errors import NumericError, ValidationError

FIRST_OMEGA = 1.0
HIDDEN_OMEGA = 30.0


def softplus(z):
    return np.logaddexp(0.0, z)


def inverse_softplus(y):
    y = np.asarray(y, dtype=np.float64)
    return y + np.log(-np.expm1(-y))


@dataclass(frozen=True)
class EncodingConfig:
    frequencies: Tuple[float, ...]

    def __post_init__(self):
        freqs = tuple(float(s) for s in self.frequencies)
        if not freqs:
            raise ValidationError("encoding needs at least one frequency")
        if any(s <= 0 for s in freqs) or any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValidationError(f"encoding frequencies must be positive and strictly increasing, got {freqs}")
        object.__setattr__(self, "frequencies", freqs)

    @classmethod
    def ladder(cls, count: int = 8) -> EncodingConfig:
        """Doubling ladder 1, 2, 4, ... cycles per unit input."""
        return cls(tuple(2.0**j for j in range(count)))

    @property
    def output_dim(self) -> int:
        return 2 * len(self.frequencies)


def fourier_encode(x: float, config: EncodingConfig) -> np.ndarray:
    """[sin(2 pi s1 x), cos(2 pi s1 x), sin(2 pi s2 x), ...] in frequency order."""
    return fourier_encode_batch(np.array([x], dtype=np.float64), config)[0]


def fourier_encode_batch(xs: np.ndarray, config: EncodingConfig) -> np.ndarray:
    phase = 2 * np.pi * np.outer(xs, config.frequencies)
    out = np.empty((len(xs), config.output_dim))
    out[:, 0::2] = np.sin(phase)
    out[:, 1::2] = np.cos(phase)
    return out


@dataclass(eq=False)
class GradientBuffer:
    """Gradient accumulator congruent with a component's parameter list."""

    grads: List[np.ndarray]
    count: int = 0

    @classmethod
    def like(cls, parameters: Sequence[np.ndarray]) -> GradientBuffer:
        return cls([np.zeros_like(p) for p in parameters])

    def zero(self):
        for g in self.grads:
            g.fill(0.0)
        self.count = 0

    def merge(self, other: GradientBuffer):
        for g, o in zip(self.grads, other.grads):
            g += o
        self.count += other.count


class Component(Protocol):
    def forward(self, xs: np.ndarray) -> Tuple[np.ndarray, Any]: ...

    def backward_cached(self, cache: Any, upstream: np.ndarray, out: GradientBuffer): ...

    def evaluate_batch(self, xs) -> np.ndarray: ...

    def parameters(self) -> List[np.ndarray]: ...


@dataclass(eq=False)
class InrFunction:
    encoding: EncodingConfig
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    omegas: Tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or len(self.weights) != len(self.omegas) + 1:
            raise ValidationError("an INR needs one sine multiplier per hidden layer and one output layer")
        fan_in = self.encoding.output_dim
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or w.shape[1] != fan_in or b.shape != (w.shape[0],):
                raise ValidationError(f"layer shapes {w.shape}/{b.shape} do not chain from width {fan_in}")
            fan_in = w.shape[0]
        if fan_in != 1:
            raise ValidationError("the output layer must have width 1")

    @classmethod
    def init(
        cls,
        seed: int,
        encoding: EncodingConfig,
        hidden_sizes: Sequence[int] = (64, 64),
        first_omega: float = FIRST_OMEGA,
        hidden_omega: float = HIDDEN_OMEGA,
    ) -> InrFunction:
        """
        Sine-network initialisation: the first layer is uniform in +-1/J, deeper
        layers in +-sqrt(6 / fan_in) / omega. Biases share their layer's bound.
        """
        hidden_sizes = [int(h) for h in hidden_sizes]
        if not hidden_sizes or any(h < 1 for h in hidden_sizes):
            raise ValidationError(f"hidden sizes must be a non-empty list of positive ints, got {hidden_sizes}")
        rng = np.random.default_rng(seed)
        sizes = [encoding.output_dim, *hidden_sizes, 1]
        weights, biases = [], []
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            bound = 1.0 / fan_in if i == 0 else np.sqrt(6.0 / fan_in) / hidden_omega
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        omegas = (first_omega,) + (hidden_omega,) * (len(hidden_sizes) - 1)
        return cls(encoding, weights, biases, omegas)

    @property
    def layer_sizes(self) -> List[int]:
        return [self.encoding.output_dim] + [w.shape[0] for w in self.weights]

    def parameters(self) -> List[np.ndarray]:
        """Weights and biases, layer by layer."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def gradient_buffer(self) -> GradientBuffer:
        return GradientBuffer.like(self.parameters())

    def copy(self) -> InrFunction:
        return copy.deepcopy(self)

    def forward(self, xs) -> Tuple[np.ndarray, Any]:
        xs = np.asarray(xs, dtype=np.float64).reshape(-1)
        a = fourier_encode_batch(xs, self.encoding)
        inputs, pre = [a], []
        for w, b, omega in zip(self.weights[:-1], self.biases[:-1], self.omegas):
            z = a @ w.T + b
            a = np.sin(omega * z)
            pre.append(z)
            inputs.append(a)
        z_out = (a @ self.weights[-1].T + self.biases[-1])[:, 0]
        y = softplus(z_out)
        if not np.isfinite(y).all():
            raise NumericError("non-finite value in INR evaluation")
        return y, (inputs, pre, z_out)

    def backward_cached(self, cache, upstream, out: GradientBuffer):
        """Accumulate d(output)/d(theta) * upstream, summed over the cached inputs."""
        inputs, pre, z_out = cache
        upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
        dz = (upstream * expit(z_out))[:, None]
        for layer in range(len(self.weights) - 1, -1, -1):
            out.grads[2 * layer] += dz.T @ inputs[layer]
            out.grads[2 * layer + 1] += dz.sum(axis=0)
            if layer:
                omega = self.omegas[layer - 1]
                dz = (dz @ self.weights[layer]) * (omega * np.cos(omega * pre[layer - 1]))
        out.count += int(np.count_nonzero(upstream))

    def evaluate_batch(self, xs) -> np.ndarray:
        return self.forward(xs)[0]

    def evaluate(self, x: float) -> float:
        return float(self.evaluate_batch([x])[0])

    def backward_batch(self, xs, upstream, out: GradientBuffer):
        _, cache = self.forward(xs)
        self.backward_cached(cache, upstream, out)

    def backward(self, x: float, upstream_grad: float, out: GradientBuffer):
        self.backward_batch([x], [upstream_grad], out)


@dataclass(eq=False)
class TableFunction:
    """
    A function stored as values at sorted coordinates, read by nearest coordinate.
    With softplus set the stored parameters are free reals and the values are
    softplus(raw); otherwise the values are the raw entries, which must be non-negative.
    """

    coords: np.ndarray
    raw: np.ndarray
    softplus: bool = True
    _midpoints: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64).reshape(-1)
        self.raw = np.array(self.raw, dtype=np.float64).reshape(-1)
        if len(self.coords) != len(self.raw) or not len(self.coords):
            raise ValidationError("a table needs one value per coordinate")
        if np.any(np.diff(self.coords) <= 0):
            raise ValidationError("table coordinates must be strictly increasing")
        if not self.softplus and (self.raw < 0).any():
            raise ValidationError("identity tables must hold non-negative values")
        self._midpoints = 0.5 * (self.coords[1:] + self.coords[:-1])

    @classmethod
    def from_values(cls, coords, values, softplus: bool = False) -> TableFunction:
        values = np.asarray(values, dtype=np.float64)
        return cls(coords, inverse_softplus(values) if softplus else values, softplus)

    @classmethod
    def random(cls, coords, seed: int, low: float = 0.1, high: float = 1.1) -> TableFunction:
        """Softplus table whose initial values are uniform in [low, high)."""
        rng = np.random.default_rng(seed)
        return cls.from_values(coords, rng.uniform(low, high, size=len(coords)), softplus=True)

    @property
    def values(self) -> np.ndarray:
        return softplus(self.raw) if self.softplus else self.raw

    def index(self, xs) -> np.ndarray:
        return np.searchsorted(self._midpoints, np.asarray(xs, dtype=np.float64).reshape(-1))

    def parameters(self) -> List[np.ndarray]:
        return [self.raw]

    def gradient_buffer(self) -> GradientBuffer:
        return GradientBuffer.like(self.parameters())

    def copy(self) -> TableFunction:
        return copy.deepcopy(self)

    def forward(self, xs) -> Tuple[np.ndarray, Any]:
        idx = self.index(xs)
        return self.values[idx], idx

    def backward_cached(self, idx, upstream, out: GradientBuffer):
        upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
        slope = expit(self.raw[idx]) if self.softplus else 1.0
        out.grads[0] += np.bincount(idx, weights=upstream * slope, minlength=len(self.raw))
        out.count += int(np.count_nonzero(upstream))

    def evaluate_batch(self, xs) -> np.ndarray:
        return self.forward(xs)[0]

    def evaluate(self, x: float) -> float:
        return float(self.evaluate_batch([x])[0])

    def backward_batch(self, xs, upstream, out: GradientBuffer):
        self.backward_cached(self.index(xs), upstream, out)

    def backward(self, x: float, upstream_grad: float, out: GradientBuffer):
        self.backward_batch([x], [upstream_grad], out)
