from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from ..errors import ValidationError
from ..points import TFPointSet
from .audio import AudioBuffer


@dataclass(frozen=True)
class CqtConfig:
    f_min_hz: float
    f_max_hz: float
    bins_per_octave: int = 12
    q_scale: float = 17.0

    def __post_init__(self):
        if not self.f_min_hz > 0:
            raise ValidationError(f"f_min must be positive, got {self.f_min_hz}")
        if not self.f_max_hz > self.f_min_hz:
            raise ValidationError(f"f_max ({self.f_max_hz}) must exceed f_min ({self.f_min_hz})")
        if int(self.bins_per_octave) < 1:
            raise ValidationError(f"bins per octave must be >= 1, got {self.bins_per_octave}")
        if not self.q_scale > 0:
            raise ValidationError(f"q scale must be positive, got {self.q_scale}")

    @property
    def frequencies(self) -> np.ndarray:
        """Geometric bin centres f_min * 2^(k/B) up to f_max."""
        b = int(self.bins_per_octave)
        n = int(np.floor(b * np.log2(self.f_max_hz / self.f_min_hz) + 1e-9)) + 1
        return self.f_min_hz * 2.0 ** (np.arange(n) / b)

    def window_length(self, frequency_hz: float, sample_rate_hz: int) -> int:
        """ceil(q * sr / f_k), rounded up to an even length."""
        length = int(np.ceil(self.q_scale * sample_rate_hz / frequency_hz))
        return length + length % 2


def cqt_to_points(audio: AudioBuffer, config: CqtConfig) -> TFPointSet:
    """
    Naive constant-Q analysis: each bin takes windowed inner products with a complex
    exponential at its own centre frequency, on its own time grid with hop L_k / 2.
    Magnitudes are divided by the window sum, so a unit sinusoid reads 0.5 in its bin.

    Points are emitted bin by bin, low to high frequency, each bin in time order.
    """
    sr = audio.sample_rate_hz
    if config.f_max_hz > audio.nyquist_hz:
        raise ValidationError(f"f_max {config.f_max_hz} Hz exceeds the Nyquist frequency {audio.nyquist_hz} Hz")
    ts, fs, ms = [], [], []
    for fk in config.frequencies:
        length = config.window_length(fk, sr)
        hop = length // 2
        window = get_window("hann", length, fftbins=True)
        n = np.arange(length)
        kernel = window * np.exp(-2j * np.pi * fk * (n - length // 2) / sr) / window.sum()
        x = np.pad(audio.samples, (length // 2, length // 2 + (-len(audio)) % hop))
        frames = sliding_window_view(x, length)[::hop]
        # centres at j * hop of the unpadded signal; drop any that fall past its end
        count = min(len(frames), len(audio) // hop + 1)
        frames = frames[:count]
        ts.append(np.arange(count) * hop / sr)
        fs.append(np.full(count, fk))
        ms.append(np.abs(frames @ kernel))
    return TFPointSet(
        t=np.concatenate(ts),
        f=np.concatenate(fs),
        m=np.concatenate(ms),
        source_tag=f"cqt:fmin={config.f_min_hz},fmax={config.f_max_hz},bpo={config.bins_per_octave},q={config.q_scale}",
    )
