from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from ..errors import ValidationError
from ..points import TFPointSet
from .audio import AudioBuffer
from .stft import check_framing

# magnitudes below this are treated as silence
SILENCE = 1e-10


@lru_cache(maxsize=32)
def peak_window(window_size: int) -> np.ndarray:
    """Blackman-Harris analysis window; its sidelobes sit below any usable peak threshold."""
    window = get_window("blackmanharris", window_size, fftbins=True).astype(np.float64)
    window.setflags(write=False)
    return window


def peak_window_gain(window_size: int) -> float:
    return float(peak_window(window_size).sum())


def parabolic_peak(left: np.ndarray, center: np.ndarray, right: np.ndarray):
    """
    Vertex of the parabola through three equally spaced samples.
    Returns the offset from the centre sample, clamped to +-0.5, and the vertex height.
    """
    denom = left - 2 * center + right
    with np.errstate(divide="ignore", invalid="ignore"):
        offset = np.where(denom < 0, 0.5 * (left - right) / denom, 0.0)
    offset = np.clip(offset, -0.5, 0.5)
    height = center - 0.25 * (left - right) * offset
    return offset, height


def sinusoidal_model_points(
    audio: AudioBuffer,
    window_size: int,
    hop: int,
    peak_threshold_db: float = -60.0,
    center: bool = False,
) -> TFPointSet:
    """
    Per-frame spectral peaks refined by parabolic interpolation in dB over the
    three-bin neighbourhood. Peaks quieter than peak_threshold_db relative to the
    frame maximum are dropped, silent frames emit nothing.

    Framing and frame times follow stft().
    """
    check_framing(window_size, hop)
    x = audio.samples
    if len(x) < window_size:
        raise ValidationError(f"audio of {len(x)} samples is shorter than one window of {window_size}")
    if center:
        x = np.pad(x, (window_size // 2, window_size // 2 + (-len(x)) % hop))
    frames = sliding_window_view(x, window_size)[::hop]
    mag = np.abs(np.fft.rfft(frames * peak_window(window_size), axis=1))
    offset_samples = 0 if center else window_size // 2
    times = (np.arange(len(frames)) * hop + offset_samples) / audio.sample_rate_hz
    db = 20 * np.log10(np.maximum(mag, SILENCE * 1e-3))
    bin_hz = audio.sample_rate_hz / window_size
    ts, fs, ms = [], [], []
    for t, frame, frame_db in zip(times, mag, db):
        if frame.max() <= SILENCE:
            continue
        k = np.arange(1, len(frame) - 1)
        is_peak = (frame[k] > frame[k - 1]) & (frame[k] >= frame[k + 1])
        is_peak &= frame_db[k] >= frame_db.max() + peak_threshold_db
        k = k[is_peak]
        if not len(k):
            continue
        offset, height = parabolic_peak(frame_db[k - 1], frame_db[k], frame_db[k + 1])
        ts.append(np.full(len(k), t))
        fs.append((k + offset) * bin_hz)
        ms.append(10 ** (height / 20))
    tag = f"sin:N={window_size},hop={hop},thresh={peak_threshold_db}"
    if not ts:
        return TFPointSet(np.empty(0), np.empty(0), np.empty(0), source_tag=tag)
    return TFPointSet(t=np.concatenate(ts), f=np.concatenate(fs), m=np.concatenate(ms), source_tag=tag)
