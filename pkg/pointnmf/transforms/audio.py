from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from scipy.io import wavfile

from ..errors import AudioError, ValidationError


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64).reshape(-1)
        if not np.isfinite(samples).all():
            raise ValidationError("audio samples must be finite")
        if int(self.sample_rate_hz) <= 0:
            raise ValidationError(f"sample rate must be positive, got {self.sample_rate_hz}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate_hz / 2

    @property
    def rms(self) -> float:
        if not len(self.samples):
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))

    def with_samples(self, samples: np.ndarray) -> AudioBuffer:
        return AudioBuffer(samples, self.sample_rate_hz)

    def slice(self, start_sec: float, end_sec: float) -> AudioBuffer:
        a = int(round(start_sec * self.sample_rate_hz))
        b = int(round(end_sec * self.sample_rate_hz))
        return self.with_samples(self.samples[a:b])


def read_wav(path: Union[str, Path]) -> AudioBuffer:
    """Read a PCM16, PCM32 or float WAV file, downmixing stereo by averaging."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f'audio file "{path}" does not exist')
    try:
        sr, data = wavfile.read(path)
    except (ValueError, OSError) as e:
        raise AudioError(f'can not read wav file "{path}": {e}') from None
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        data = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.floating):
        data = data.astype(np.float64)
    else:
        raise AudioError(f'unsupported wav sample format {data.dtype} in "{path}"')
    if data.ndim == 2:
        data = data.mean(axis=1)
    return AudioBuffer(data, sr)


def write_wav(audio: AudioBuffer, path: Union[str, Path]):
    """Write a 32-bit float WAV file."""
    try:
        wavfile.write(Path(path), audio.sample_rate_hz, audio.samples.astype(np.float32))
    except OSError as e:
        raise AudioError(f'can not write wav file "{path}": {e.strerror}') from None


def mix_at_0db(source1: AudioBuffer, source2: AudioBuffer) -> Tuple[AudioBuffer, AudioBuffer, AudioBuffer]:
    """
    Scale the second source to the RMS of the first and sum them.
    Returns the mixture and the two references as they appear in it.
    """
    if source1.sample_rate_hz != source2.sample_rate_hz:
        raise ValidationError("sources must share a sample rate")
    n = min(len(source1), len(source2))
    s1 = source1.samples[:n]
    s2 = source2.samples[:n]
    rms1 = np.sqrt(np.mean(s1**2))
    rms2 = np.sqrt(np.mean(s2**2))
    if rms1 == 0 or rms2 == 0:
        raise ValidationError("can not mix a silent source at 0 dB")
    s2 = s2 * (rms1 / rms2)
    sr = source1.sample_rate_hz
    return AudioBuffer(s1 + s2, sr), AudioBuffer(s1, sr), AudioBuffer(s2, sr)


def split_train_holdout(audio: AudioBuffer, train_fraction: float = 0.8) -> Tuple[AudioBuffer, AudioBuffer]:
    """Split material into a dictionary-training part and a held-out part for mixtures."""
    if not 0 < train_fraction < 1:
        raise ValidationError(f"train fraction must be in (0, 1), got {train_fraction}")
    cut = int(round(len(audio) * train_fraction))
    return audio.with_samples(audio.samples[:cut]), audio.with_samples(audio.samples[cut:])
