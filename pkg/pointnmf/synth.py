"""Desk-scale synthetic material: harmonic tones, gated notes and two-source pairs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .transforms import AudioBuffer

DEFAULT_SR = 8000


def harmonic_tone(
    f0_hz: float,
    duration_sec: float,
    sample_rate_hz: int = DEFAULT_SR,
    partials: Sequence[float] = (1.0, 0.5, 0.25),
) -> np.ndarray:
    """Sum of harmonics k * f0 with the given amplitudes, dropping those above Nyquist."""
    t = np.arange(int(round(duration_sec * sample_rate_hz))) / sample_rate_hz
    out = np.zeros_like(t)
    for k, amp in enumerate(partials, 1):
        if k * f0_hz < sample_rate_hz / 2:
            out += amp * np.sin(2 * np.pi * k * f0_hz * t)
    return out


def breathy_tone(
    f0_hz: float,
    duration_sec: float,
    rng: np.random.Generator,
    bandwidth_hz: float,
    sample_rate_hz: int = DEFAULT_SR,
    partials: Sequence[float] = (1.0, 0.5, 0.25),
) -> np.ndarray:
    """
    White noise shaped into Gaussian bands of standard deviation `bandwidth_hz`
    around each harmonic, scaled to the RMS of the matching harmonic_tone.
    """
    if not bandwidth_hz > 0:
        raise ValidationError(f"bandwidth must be positive, got {bandwidth_hz}")
    n = int(round(duration_sec * sample_rate_hz))
    freqs = np.fft.rfftfreq(n, 1 / sample_rate_hz)
    shape = np.zeros_like(freqs)
    power = 0.0
    for k, amp in enumerate(partials, 1):
        if k * f0_hz < sample_rate_hz / 2:
            shape += amp * np.exp(-0.5 * ((freqs - k * f0_hz) / bandwidth_hz) ** 2)
            power += 0.5 * amp**2
    out = np.fft.irfft(np.fft.rfft(rng.standard_normal(n)) * shape, n)
    rms = np.sqrt(np.mean(out**2))
    return out * (np.sqrt(power) / rms) if rms > 0 else out


def note_gate(
    duration_sec: float, start_sec: float, end_sec: float, sample_rate_hz: int = DEFAULT_SR, ramp_sec: float = 0.01
) -> np.ndarray:
    """0/1 envelope with short linear ramps at note on and off."""
    t = np.arange(int(round(duration_sec * sample_rate_hz))) / sample_rate_hz
    rise = np.clip((t - start_sec) / ramp_sec, 0.0, 1.0)
    fall = np.clip((end_sec - t) / ramp_sec, 0.0, 1.0)
    return rise * fall


@dataclass(frozen=True)
class GatedNotes:
    audio: AudioBuffer
    gates: Tuple[np.ndarray, ...]
    f0s: Tuple[float, ...]

    def gates_at(self, times_sec: np.ndarray) -> np.ndarray:
        """Gate values at arbitrary times, one row per note."""
        idx = np.clip(np.round(np.asarray(times_sec) * self.audio.sample_rate_hz).astype(int), 0, len(self.audio) - 1)
        return np.array([g[idx] for g in self.gates])


def gated_notes(
    notes: Sequence[Tuple[float, float, float]] = ((220.0, 0.1, 1.4), (330.0, 1.6, 2.9)),
    duration_sec: float = 3.0,
    sample_rate_hz: int = DEFAULT_SR,
) -> GatedNotes:
    """Harmonic notes given as (f0, start, end), summed into one signal."""
    gates, total = [], np.zeros(int(round(duration_sec * sample_rate_hz)))
    for f0, start, end in notes:
        gate = note_gate(duration_sec, start, end, sample_rate_hz)
        total += gate * harmonic_tone(f0, duration_sec, sample_rate_hz)
        gates.append(gate)
    return GatedNotes(AudioBuffer(total, sample_rate_hz), tuple(gates), tuple(n[0] for n in notes))


def note_sequence(
    f0s_hz: Sequence[float],
    duration_sec: float,
    seed: int,
    sample_rate_hz: int = DEFAULT_SR,
    note_sec: float = 0.25,
    bandwidth_hz: float = 0.0,
) -> AudioBuffer:
    """
    A melody of random notes drawn from f0s, each with a random level. With a
    positive bandwidth the notes are breathy (see breathy_tone) instead of pure.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_sec * sample_rate_hz))
    step = int(round(note_sec * sample_rate_hz))
    out = np.zeros(n)
    ramp = np.minimum(1.0, np.minimum(np.arange(step), np.arange(step)[::-1]) / (0.01 * sample_rate_hz))
    for start in range(0, n, step):
        f0 = f0s_hz[rng.integers(len(f0s_hz))]
        level = rng.uniform(0.3, 1.0)
        if bandwidth_hz > 0:
            tone = breathy_tone(f0, note_sec, rng, bandwidth_hz, sample_rate_hz)
        else:
            tone = harmonic_tone(f0, note_sec, sample_rate_hz)
        seg = level * ramp * tone[:step]
        out[start : start + step] += seg[: n - start]
    return AudioBuffer(out, sample_rate_hz)


# with three partials the two sets occupy disjoint bands (< 450 Hz and > 850 Hz)
LOW_PITCHES = (110.0, 130.8, 146.8)
HIGH_PITCHES = (880.0, 987.8, 1174.7)


def two_source_pair(seed: int, duration_sec: float = 5.0, sample_rate_hz: int = DEFAULT_SR) -> Tuple[AudioBuffer, AudioBuffer]:
    """Two melodies over disjoint pitch sets, standing in for two speakers."""
    return (
        note_sequence(LOW_PITCHES, duration_sec, seed, sample_rate_hz),
        note_sequence(HIGH_PITCHES, duration_sec, seed + 1, sample_rate_hz),
    )
