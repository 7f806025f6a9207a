import numpy as np
import pytest

from pointnmf.errors import SpecError, ValidationError
from pointnmf.transforms import (
    AudioBuffer,
    CqtConfig,
    StftGrid,
    TransformKind,
    apply_transform_spec,
    cqt_to_points,
    istft,
    mix_at_0db,
    parse_transform_spec,
    read_wav,
    sinusoidal_model_points,
    split_train_holdout,
    stft,
    stft_to_points,
    write_wav,
)
from pointnmf.transforms.sinusoidal import parabolic_peak


def sine(freq, sr=16000, seconds=1.0, amp=1.0):
    t = np.arange(int(sr * seconds)) / sr
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), sr)


def test_stft_bin_alignment():
    sr, n = 16000, 256
    grid = stft(sine(10 * sr / n, sr), n, 64)
    assert (grid.magnitude.argmax(axis=0) == 10).all()


def test_stft_zero_audio():
    grid = stft(AudioBuffer(np.zeros(2048), 8000), 256, 64)
    assert not grid.magnitude.any()


def test_stft_frame_count_and_times():
    grid = stft(AudioBuffer(np.zeros(1024), 16000), 256, 64)
    assert grid.num_frames == 13
    assert grid.num_bins == 129
    points = stft_to_points(grid)
    assert points[0].f == 0.0
    assert points[0].t == 128 / 16000
    assert len(points) == 129 * 13


def test_stft_errors():
    with pytest.raises(ValidationError):
        stft(AudioBuffer(np.zeros(100), 8000), 256, 64)
    with pytest.raises(ValidationError):
        stft(AudioBuffer(np.zeros(1000), 8000), 256, 100)
    with pytest.raises(ValidationError):
        stft(AudioBuffer(np.zeros(1000), 8000), 255, 5)


@pytest.mark.parametrize("n", [256, 512, 1024, 2000])
@pytest.mark.parametrize("divisor", [2, 4])
@pytest.mark.parametrize("center", [False, True])
def test_istft_round_trip(rng, n, divisor, center):
    x = AudioBuffer(rng.standard_normal(8 * n + 37), 16000)
    y = istft(stft(x, n, n // divisor, center=center))
    assert len(y) == len(x)
    interior = slice(n, len(x) - 2 * n)
    err = np.linalg.norm(y.samples[interior] - x.samples[interior]) / np.linalg.norm(x.samples[interior])
    assert err < 1e-10


def test_istft_center_reconstructs_edges(rng):
    x = AudioBuffer(rng.standard_normal(5000), 16000)
    y = istft(stft(x, 512, 128, center=True))
    np.testing.assert_allclose(y.samples, x.samples, atol=1e-10)


def test_istft_chirp_snr():
    sr = 16000
    t = np.arange(sr) / sr
    x = AudioBuffer(np.sin(2 * np.pi * (200 * t + 1500 * t**2)), sr)
    y = istft(stft(x, 512, 128, center=True))
    snr = 10 * np.log10(np.sum(x.samples**2) / np.sum((x.samples - y.samples) ** 2))
    assert snr > 100


def test_istft_zero_grid():
    grid = StftGrid(np.zeros((129, 10), dtype=complex), 256, 64, 8000, 832)
    assert not istft(grid).samples.any()


def test_stft_energy_scales_linearly(rng):
    x = rng.standard_normal(4096)
    energies = [np.sum(stft(AudioBuffer(a * x, 8000), 256, 64).magnitude ** 2) for a in (1.0, 2.0, 5.0)]
    ratios = np.array(energies) / np.array([1.0, 4.0, 25.0])
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)


def test_stft_to_points_small_grid():
    frames = np.array([[1, 2j], [3, -4], [0, 1 + 1j]], dtype=complex)
    grid = StftGrid(frames, 4, 2, 8, 8)
    points = stft_to_points(grid)
    assert len(points) == 6
    np.testing.assert_allclose(points.m, np.abs(frames).T.reshape(-1))
    assert points.source_tag == "stft:N=4,hop=2"


def test_cqt_bins():
    config = CqtConfig(55.0, 880.0, 12)
    freqs = config.frequencies
    assert len(freqs) == 49
    np.testing.assert_allclose(freqs[1:] / freqs[:-1], 2 ** (1 / 12), rtol=1e-15)


def test_cqt_tone_and_irregular_time():
    audio = sine(220.0, 8000)
    points = cqt_to_points(audio, CqtConfig(55.0, 880.0, 12))
    freqs = np.unique(points.f)
    mean_mag = np.array([points.m[points.f == f].mean() for f in freqs])
    assert abs(freqs[mean_mag.argmax()] - 220.0) < 1e-6
    counts = np.array([(points.f == f).sum() for f in freqs])
    assert counts[0] < counts[-1]


def test_cqt_above_nyquist():
    with pytest.raises(ValidationError):
        cqt_to_points(sine(220.0, 8000), CqtConfig(55.0, 5000.0, 12))


def test_sinusoidal_lone_tone():
    points = sinusoidal_model_points(sine(440.0), 1024, 256)
    frames = np.unique(points.t)
    assert len(points) == len(frames) == stft(sine(440.0), 1024, 256).num_frames
    assert np.abs(points.f - 440.0).max() < 16000 / 1024


def test_sinusoidal_silence():
    points = sinusoidal_model_points(AudioBuffer(np.zeros(4096), 16000), 512, 128)
    assert len(points) == 0


def test_sinusoidal_two_tones():
    sr = 16000
    audio = AudioBuffer(sine(440.0, sr).samples + 0.5 * sine(2000.0, sr).samples, sr)
    points = sinusoidal_model_points(audio, 1024, 256, peak_threshold_db=-40)
    per_frame = np.unique(points.t, return_counts=True)[1]
    assert (per_frame == 2).all()


def test_parabolic_peak_symmetric():
    offset, height = parabolic_peak(np.array([1.0]), np.array([2.0]), np.array([1.0]))
    assert offset[0] == 0.0 and height[0] == 2.0
    offset, _ = parabolic_peak(np.array([0.0]), np.array([1.0]), np.array([1.0]))
    assert offset[0] == 0.5


def test_parse_specs():
    (spec,) = parse_transform_spec("stft:256,64")
    assert spec.kind == TransformKind.STFT and spec.params == (256.0, 64.0) and spec.segment is None
    specs = parse_transform_spec("stft:256,64@0-0.5;cqt:55,7040,12@0.5-1.0")
    assert [s.kind for s in specs] == [TransformKind.STFT, TransformKind.CQT]
    assert specs[1].segment == (0.5, 1.0)


@pytest.mark.parametrize(
    "text",
    [
        "fft:256,64",
        "stft:256",
        "stft:a,b",
        "",
        "stft:256,64@0-0.6;cqt:55,880,12@0.5-1.0",
        "stft:256,64@0.5-1.0;cqt:55,880,12@0-0.5",
        "stft:256,64;cqt:55,880,12@0.5-1.0",
    ],
)
def test_parse_invalid_specs(text):
    with pytest.raises(SpecError):
        parse_transform_spec(text)


def test_hybrid_points():
    audio = sine(440.0, 16000)
    points = apply_transform_spec(audio, "stft:256,64@0-0.5;cqt:55,7040,12@0.5-1.0")
    assert points.t.min() >= 0 and points.t.max() < 1.0
    stft_part = points.t < 0.5
    assert stft_part.any() and (~stft_part).any()
    assert "stft" in points.source_tag and "cqt" in points.source_tag
    assert len(np.unique(points.f[stft_part])) == 129


def test_wav_round_trip(tmp_path, rng):
    audio = AudioBuffer(rng.uniform(-0.5, 0.5, 1000), 8000)
    write_wav(audio, tmp_path / "a.wav")
    loaded = read_wav(tmp_path / "a.wav")
    assert loaded.sample_rate_hz == 8000
    np.testing.assert_allclose(loaded.samples, audio.samples, atol=1e-7)


def test_mix_at_0db(rng):
    a = AudioBuffer(rng.standard_normal(1000), 8000)
    b = AudioBuffer(3 * rng.standard_normal(1000), 8000)
    mixture, ref1, ref2 = mix_at_0db(a, b)
    assert abs(ref1.rms / ref2.rms - 1.0) < 1e-9
    np.testing.assert_allclose(mixture.samples, ref1.samples + ref2.samples)


def test_split_train_holdout():
    audio = AudioBuffer(np.arange(100.0), 10)
    train, hold = split_train_holdout(audio)
    assert len(train) == 80 and len(hold) == 20
