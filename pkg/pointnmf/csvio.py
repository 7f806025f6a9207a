"""Writers for the CSV artifacts: loss curves, factor matrices, rasters and metric tables."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import OperationError, ParseError
from .utils import format_float

LOSS_HEADER = ("epoch", "mean_kl")
RASTER_HEADER = ("t", "f", "value")
METRICS_HEADER = ("method", "window_size", "source", "sdr_db", "sir_db", "sar_db")


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_rows(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]):
    path = Path(path)
    try:
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            if header:
                writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    except OSError as e:
        raise OperationError(f'can not write "{path}": {e.strerror}') from None


def write_loss_curve(path, curve: Sequence[float]):
    write_rows(path, LOSS_HEADER, ((epoch, float(kl)) for epoch, kl in enumerate(curve)))


def write_matrix(path, matrix: np.ndarray):
    """Headerless dense matrix, one row per line."""
    write_rows(path, (), ([float(v) for v in row] for row in np.atleast_2d(matrix)))


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        with path.open(newline="") as handle:
            rows = [row for row in csv.reader(handle) if row]
    except OSError as e:
        raise OperationError(f'can not read "{path}": {e.strerror}') from None
    try:
        return np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except ValueError:
        raise ParseError("malformed matrix", path=path) from None


def write_raster(path, t: np.ndarray, f: np.ndarray, values: np.ndarray):
    write_rows(path, RASTER_HEADER, zip(map(float, t), map(float, f), map(float, values)))


def write_metrics(path, rows: Iterable[Sequence]):
    write_rows(path, METRICS_HEADER, rows)
