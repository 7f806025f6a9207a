from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import check_COLA, get_window

from ..errors import ValidationError
from ..points import TFPointSet
from .audio import AudioBuffer


@lru_cache(maxsize=32)
def hann_window(window_size: int) -> np.ndarray:
    """Periodic Hann window, read-only and cached per size."""
    window = get_window("hann", window_size, fftbins=True).astype(np.float64)
    window.setflags(write=False)
    return window


def window_gain(window_size: int) -> float:
    """Peak STFT magnitude of a unit-amplitude complex exponential, i.e. the window sum."""
    return float(hann_window(window_size).sum())


def check_framing(window_size: int, hop: int):
    if window_size < 16 or window_size % 2:
        raise ValidationError(f"window size must be an even integer >= 16, got {window_size}")
    if not 0 < hop <= window_size or window_size % hop:
        raise ValidationError(f"hop must divide the window size, got hop {hop} for window {window_size}")
    if not check_COLA(hann_window(window_size), window_size, window_size - hop):
        raise ValidationError(f"hop {hop} does not satisfy overlap-add for a Hann window of size {window_size}")


@dataclass(frozen=True, eq=False)
class StftGrid:
    frames: np.ndarray
    window_size: int
    hop: int
    sample_rate_hz: int
    length: int
    center: bool = False

    def __post_init__(self):
        if self.frames.ndim != 2 or self.frames.shape[0] != self.window_size // 2 + 1:
            raise ValidationError(
                f"grid must have {self.window_size // 2 + 1} bins, got shape {self.frames.shape}"
            )

    @property
    def num_bins(self) -> int:
        return self.frames.shape[0]

    @property
    def num_frames(self) -> int:
        return self.frames.shape[1]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.frames)

    @property
    def frequencies(self) -> np.ndarray:
        """Bin centres in Hz, k * sr / N."""
        return np.arange(self.num_bins) * self.sample_rate_hz / self.window_size

    @property
    def times(self) -> np.ndarray:
        """Window centres in seconds, relative to the start of the analysed audio."""
        offset = 0 if self.center else self.window_size // 2
        return (np.arange(self.num_frames) * self.hop + offset) / self.sample_rate_hz

    def with_frames(self, frames: np.ndarray) -> StftGrid:
        return StftGrid(frames, self.window_size, self.hop, self.sample_rate_hz, self.length, self.center)


def stft(audio: AudioBuffer, window_size: int, hop: int, center: bool = False) -> StftGrid:
    """
    Hann-windowed short-time Fourier transform.

    Frame j covers samples [j*hop, j*hop + N) of the signal, which is first padded
    with N/2 zeros on each side (plus tail zeros up to a whole hop) when center is set.
    """
    check_framing(window_size, hop)
    x = audio.samples
    if len(x) < window_size:
        raise ValidationError(f"audio of {len(x)} samples is shorter than one window of {window_size}")
    if center:
        half = window_size // 2
        x = np.pad(x, (half, half + (-len(x)) % hop))
    frames = sliding_window_view(x, window_size)[::hop]
    coefficients = np.fft.rfft(frames * hann_window(window_size), axis=1).T
    return StftGrid(
        frames=np.ascontiguousarray(coefficients),
        window_size=window_size,
        hop=hop,
        sample_rate_hz=audio.sample_rate_hz,
        length=len(audio),
        center=center,
    )


def istft(grid: StftGrid) -> AudioBuffer:
    """Weighted overlap-add inverse with squared-window normalisation."""
    check_framing(grid.window_size, grid.hop)
    n, hop = grid.window_size, grid.hop
    window = hann_window(n)
    segments = np.fft.irfft(grid.frames.T, n=n, axis=1) * window
    total = (grid.num_frames - 1) * hop + n
    out = np.zeros(total)
    norm = np.zeros(total)
    squared = window**2
    for j, segment in enumerate(segments):
        out[j * hop : j * hop + n] += segment
        norm[j * hop : j * hop + n] += squared
    covered = norm > 1e-10 * norm.max()
    out[covered] /= norm[covered]
    out[~covered] = 0.0
    start = n // 2 if grid.center else 0
    out = out[start : start + grid.length]
    if len(out) < grid.length:
        out = np.pad(out, (0, grid.length - len(out)))
    return AudioBuffer(out, grid.sample_rate_hz)


def stft_to_points(grid: StftGrid) -> TFPointSet:
    """One point per (frame, bin), frame-major then bin-major."""
    return TFPointSet(
        t=np.repeat(grid.times, grid.num_bins),
        f=np.tile(grid.frequencies, grid.num_frames),
        m=grid.magnitude.T.reshape(-1),
        source_tag=f"stft:N={grid.window_size},hop={grid.hop}",
    )
