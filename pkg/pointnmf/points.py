"""Irregular time-frequency point sets, the interchange format between transforms and factorizers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence, Tuple, Union

import numpy as np

from .errors import OperationError, ParseError, ValidationError
from .utils import format_float

HEADER = ("t_sec", "f_hz", "mag")


@dataclass(frozen=True)
class TFPoint:
    t: float
    f: float
    m: float

    def __post_init__(self):
        if not all(np.isfinite((self.t, self.f, self.m))):
            raise ValidationError(f"non-finite point {self}")
        if self.t < 0 or self.f < 0:
            raise ValidationError(f"negative coordinate in {self}")
        if self.m < 0:
            raise ValidationError(f"negative magnitude in {self}")


def _check_columns(t: np.ndarray, f: np.ndarray, m: np.ndarray):
    if not (t.shape == f.shape == m.shape) or t.ndim != 1:
        raise ValidationError("t, f and m must be 1-d arrays of equal length")
    if not (np.isfinite(t).all() and np.isfinite(f).all() and np.isfinite(m).all()):
        raise ValidationError("point coordinates and magnitudes must be finite")
    if (t < 0).any() or (f < 0).any():
        raise ValidationError("point coordinates must be non-negative")
    if (m < 0).any():
        raise ValidationError("point magnitudes must be non-negative")


@dataclass(frozen=True, eq=False)
class TFPointSet:
    """
    An ordered collection of (t, f, m) tuples, stored column-wise.
    Duplicate (t, f) coordinates are allowed since hybrid representations may overlap.
    """

    t: np.ndarray
    f: np.ndarray
    m: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        for name in ("t", "f", "m"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        _check_columns(self.t, self.f, self.m)

    @classmethod
    def concat(cls, sets: Sequence[TFPointSet]) -> TFPointSet:
        """Concatenate point sets in order, joining their tags with ';'."""
        sets = list(sets)
        if not sets:
            return cls(np.empty(0), np.empty(0), np.empty(0))
        return cls(
            t=np.concatenate([s.t for s in sets]),
            f=np.concatenate([s.f for s in sets]),
            m=np.concatenate([s.m for s in sets]),
            source_tag=";".join(s.source_tag for s in sets if s.source_tag),
        )

    def __len__(self):
        return len(self.m)

    def __iter__(self) -> Iterator[TFPoint]:
        for t, f, m in zip(self.t, self.f, self.m):
            yield TFPoint(float(t), float(f), float(m))

    def __getitem__(self, index: int) -> TFPoint:
        return TFPoint(float(self.t[index]), float(self.f[index]), float(self.m[index]))

    def select(self, mask: np.ndarray, source_tag: str = None) -> TFPointSet:
        return TFPointSet(
            self.t[mask], self.f[mask], self.m[mask], self.source_tag if source_tag is None else source_tag
        )


@dataclass(frozen=True)
class NormalizationInfo:
    """Maps physical coordinates into the unit input domain of the component functions."""

    t_span: Tuple[float, float]
    f_scale: float
    m_scale: float = field(default=1.0)

    def __post_init__(self):
        t_min, t_max = self.t_span
        if not t_max > t_min:
            raise ValidationError(f"time span must be increasing, got {self.t_span}")
        if not self.f_scale > 0:
            raise ValidationError(f"frequency scale must be positive, got {self.f_scale}")
        if not self.m_scale > 0:
            raise ValidationError(f"magnitude scale must be positive, got {self.m_scale}")

    def normalize_t(self, t):
        t_min, t_max = self.t_span
        return (np.asarray(t, dtype=np.float64) - t_min) / (t_max - t_min)

    def normalize_f(self, f):
        return np.asarray(f, dtype=np.float64) / self.f_scale

    def normalize_m(self, m):
        return np.asarray(m, dtype=np.float64) / self.m_scale


def compute_normalization(points: TFPointSet, nyquist_hz: float) -> NormalizationInfo:
    if not len(points):
        raise ValidationError("empty point set")
    if not nyquist_hz > 0:
        raise ValidationError(f"nyquist frequency must be positive, got {nyquist_hz}")
    t_min = float(points.t.min())
    t_max = float(points.t.max())
    if not t_max > t_min:
        t_max = t_min + np.finfo(np.float64).eps * max(1.0, abs(t_min))
    m_mean = float(points.m.mean())
    m_scale = m_mean if m_mean > 0 else 1.0
    return NormalizationInfo(t_span=(t_min, t_max), f_scale=float(nyquist_hz), m_scale=m_scale)


def load_points(path: Union[str, Path]) -> TFPointSet:
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as e:
        raise ValidationError(f'can not open point file "{path}": {e.strerror}') from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != HEADER:
                raise ParseError(f'expected header "{",".join(HEADER)}"', line=1, path=path)
            rows = []
            for row in reader:
                line = reader.line_num
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 3:
                    raise ParseError(f"expected 3 fields, got {len(row)}", line=line, path=path)
                try:
                    t, f, m = (float(c) for c in row)
                except ValueError:
                    raise ParseError(f"malformed number in row {row}", line=line, path=path) from None
                if not all(np.isfinite((t, f, m))):
                    raise ParseError("non-finite value", line=line, path=path)
                if m < 0:
                    raise ParseError(f"negative magnitude {m}", line=line, path=path)
                if t < 0 or f < 0:
                    raise ParseError("negative coordinate", line=line, path=path)
                rows.append((t, f, m))
        except UnicodeDecodeError as e:
            raise ParseError(f"not UTF-8 text: {e.reason}", path=path) from None
    if not rows:
        raise ParseError("empty point set", path=path)
    data = np.array(rows, dtype=np.float64)
    return TFPointSet(data[:, 0], data[:, 1], data[:, 2], source_tag=f"csv:{path.name}")


def save_points(points: TFPointSet, path: Union[str, Path]):
    if not len(points):
        raise ValidationError("empty point set")
    path = Path(path)
    try:
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(HEADER)
            for t, f, m in zip(points.t, points.f, points.m):
                writer.writerow((format_float(t), format_float(f), format_float(m)))
    except OSError as e:
        raise OperationError(f'can not write point file "{path}": {e.strerror}') from None


def to_matrix(points: TFPointSet) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Pivot points on a regular grid into a bins x frames matrix.
    Returns the matrix with its sorted frequencies and times; every (t, f) cell must occur once.
    """
    times, t_index = np.unique(points.t, return_inverse=True)
    freqs, f_index = np.unique(points.f, return_inverse=True)
    cells = f_index * len(times) + t_index
    if len(points) != len(times) * len(freqs) or len(np.unique(cells)) != len(points):
        raise ValidationError(
            f"points do not form a regular grid ({len(points)} points over {len(freqs)} x {len(times)} coordinates)"
        )
    V = np.zeros((len(freqs), len(times)))
    V[f_index, t_index] = points.m
    return V, freqs, times
