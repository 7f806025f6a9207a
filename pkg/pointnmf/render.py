"""Dense rasters of models and point sets on a common time-frequency grid."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ValidationError
from .factorize import InnmfModel, mean_kl
from .points import TFPointSet

_AXIS = re.compile(r"^\s*([^:]+):([^:]+):(\d+)\s*$")


@dataclass(frozen=True)
class GridSpec:
    t_range: Tuple[float, float]
    f_range: Tuple[float, float]
    t_steps: int
    f_steps: int

    def __post_init__(self):
        if self.t_steps < 1 or self.f_steps < 1:
            raise ValidationError("empty grid spec")
        for name, (lo, hi) in (("time", self.t_range), ("frequency", self.f_range)):
            if hi < lo or lo < 0:
                raise ValidationError(f"{name} range {lo}..{hi} must be non-negative and ordered")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(*self.t_range, self.t_steps)

    @property
    def frequencies(self) -> np.ndarray:
        return np.linspace(*self.f_range, self.f_steps)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Flattened (t, f) coordinates, time-major."""
        return np.repeat(self.times, self.f_steps), np.tile(self.frequencies, self.t_steps)


def parse_grid_spec(text: str) -> GridSpec:
    """'t0:t1:nt,f0:f1:nf', e.g. '0:3:100,0:4000:128'."""
    axes = [a for a in (text or "").split(",") if a.strip()]
    if not axes:
        raise ValidationError("empty grid spec")
    if len(axes) != 2:
        raise ValidationError(f'grid spec "{text}" needs a time axis and a frequency axis')
    parsed = []
    for axis in axes:
        match = _AXIS.match(axis)
        if not match:
            raise ValidationError(f'malformed grid axis "{axis}", expected start:end:steps')
        try:
            parsed.append((float(match[1]), float(match[2]), int(match[3])))
        except ValueError:
            raise ValidationError(f'malformed grid axis "{axis}"') from None
    (t0, t1, nt), (f0, f1, nf) = parsed
    return GridSpec((t0, t1), (f0, f1), nt, nf)


def _nearest(values: np.ndarray, axis: np.ndarray) -> np.ndarray:
    if len(axis) == 1:
        return np.zeros(len(values), dtype=int)
    return np.searchsorted(0.5 * (axis[1:] + axis[:-1]), values)


def render_model(model: InnmfModel, grid: GridSpec) -> np.ndarray:
    """Model predictions at every grid cell, time-major."""
    t, f = grid.mesh()
    return model.predict_batch(t, f)


def bin_points(points: TFPointSet, grid: GridSpec) -> np.ndarray:
    """
    Max magnitude of the points nearest each grid cell, time-major; empty cells are 0.
    Points beyond half a step outside the grid are ignored.
    """
    times, freqs = grid.times, grid.frequencies
    half_t = (times[1] - times[0]) / 2 if len(times) > 1 else 0.0
    half_f = (freqs[1] - freqs[0]) / 2 if len(freqs) > 1 else 0.0
    inside = (
        (points.t >= times[0] - half_t)
        & (points.t <= times[-1] + half_t)
        & (points.f >= freqs[0] - half_f)
        & (points.f <= freqs[-1] + half_f)
    )
    cells = _nearest(points.t[inside], times) * len(freqs) + _nearest(points.f[inside], freqs)
    out = np.zeros(len(times) * len(freqs))
    np.maximum.at(out, cells, points.m[inside])
    return out


def raster_kl(rendered: np.ndarray, binned: np.ndarray, kl_floor: float = 1e-8) -> float:
    """Mean KL between a model raster and a binned raster, both scaled by the binned mean."""
    scale = binned.mean() if binned.mean() > 0 else 1.0
    return mean_kl(binned / scale, rendered / scale, kl_floor)
