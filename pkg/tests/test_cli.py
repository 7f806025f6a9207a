import csv

import numpy as np
import pytest
from typer.testing import CliRunner

from pointnmf.cli import app
from pointnmf.points import TFPointSet, load_points, save_points
from pointnmf.synth import harmonic_tone
from pointnmf.transforms import AudioBuffer, write_wav

runner = CliRunner()

SMALL_CONFIG = """
hidden_sizes = [8]
encoding_frequencies = 3
epochs = 2
batch_size = 512
optimizer = "adam"
learning_rate = 0.001
window_size = 256
hop = 64
"""


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


def rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "pointnmf.toml"
    path.write_text(SMALL_CONFIG)
    return path


@pytest.fixture
def wavs(tmp_path):
    low = AudioBuffer(harmonic_tone(220.0, 1.0), 8000)
    high = AudioBuffer(harmonic_tone(1100.0, 1.0), 8000)
    write_wav(low, tmp_path / "low.wav")
    write_wav(high, tmp_path / "high.wav")
    write_wav(low.with_samples(low.samples + high.samples), tmp_path / "mix.wav")
    return tmp_path


@pytest.fixture
def grid_points(tmp_path):
    freqs = np.linspace(0, 4000, 8)
    times = np.arange(10) * 0.1
    m = np.outer(1 + np.arange(10), 1 + np.arange(8)).reshape(-1)
    save_points(TFPointSet(np.repeat(times, 8), np.tile(freqs, 10), m), tmp_path / "grid.csv")
    return tmp_path / "grid.csv"


def test_transform(wavs):
    result = invoke("transform", "low.wav", "stft:256,64")
    assert result.exit_code == 0, result.output
    points = load_points(wavs / "points.csv")
    assert len(points) == 129 * (1 + (8000 - 256) // 64)


def test_transform_errors(wavs):
    assert invoke("transform", "low.wav", "fft:256,64").exit_code == 1
    assert invoke("transform", "missing.wav", "stft:256,64").exit_code == 1
    assert not (wavs / "points.csv").exists()


def test_transform_out_dir(wavs):
    result = invoke("--out-dir", "out", "transform", "low.wav", "cqt:55,3520,12", "-o", "cqt.csv")
    assert result.exit_code == 0, result.output
    assert len(load_points(wavs / "out" / "cqt.csv")) > 0


def test_fit_and_refit(grid_points, tmp_path, small_config):
    result = invoke("fit", grid_points, "-k", "2", "--epochs", "3")
    assert result.exit_code == 0, result.output
    assert (tmp_path / "model.json").is_file()
    curve = rows(tmp_path / "loss_curve.csv")
    assert curve[0] == ["epoch", "mean_kl"]
    assert len(curve) == 1 + 4

    assert invoke("refit", grid_points, "model.json").exit_code == 1
    result = invoke("refit", grid_points, "model.json", "--freeze-spectral")
    assert result.exit_code == 0, result.output
    assert (tmp_path / "refit_model.json").is_file()
    assert len(rows(tmp_path / "refit_loss_curve.csv")) == 1 + 3
    assert len(rows(tmp_path / "loss_curve.csv")) == 1 + 4


def test_fit_errors(grid_points, tmp_path, small_config):
    assert invoke("fit", grid_points, "-k", "0").exit_code == 1
    assert invoke("fit", "missing.csv", "-k", "1").exit_code == 1
    assert invoke("fit", grid_points, "-k", "1", "--optimizer", "rmsprop").exit_code == 1
    assert not (tmp_path / "model.json").exists()


def test_refit_corrupt_model(grid_points, tmp_path):
    (tmp_path / "model.json").write_text('{"format": "pointnmf-model"')
    assert invoke("refit", grid_points, "model.json", "--freeze-spectral").exit_code == 2


def test_baseline_wav(wavs):
    result = invoke("baseline", "low.wav", "-k", "2", "--iterations", "10", "-n", "256", "--hop", "64")
    assert result.exit_code == 0, result.output
    W = rows(wavs / "W.csv")
    assert len(W) == 129 and len(W[0]) == 2
    assert len(rows(wavs / "H.csv")) == 2
    assert len(rows(wavs / "loss_curve.csv")) == 1 + 11


def test_baseline_point_grid(grid_points, tmp_path):
    result = invoke("baseline", grid_points, "-k", "1", "--iterations", "5")
    assert result.exit_code == 0, result.output
    assert len(rows(tmp_path / "W.csv")) == 8
    irregular = load_points(grid_points)
    save_points(irregular.select(np.arange(len(irregular) - 1)), tmp_path / "holes.csv")
    assert invoke("baseline", "holes.csv", "-k", "1").exit_code == 1


def test_eval(wavs):
    result = invoke("eval", "low.wav", "low.wav", "high.wav")
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert "sdr_db,sir_db,sar_db" in lines
    assert "100.0,100.0,100.0" in lines


def test_eval_silent_reference(wavs):
    write_wav(AudioBuffer(np.zeros(8000), 8000), wavs / "silence.wav")
    assert invoke("eval", "low.wav", "silence.wav", "high.wav").exit_code == 2


def test_render(grid_points, tmp_path, small_config):
    assert invoke("fit", grid_points, "-k", "1").exit_code == 0
    result = invoke("render", "--grid", "0:0.9:10,0:4000:8", "--model", "model.json", "--points", grid_points)
    assert result.exit_code == 0, result.output
    rendered = rows(tmp_path / "render.csv")
    binned = rows(tmp_path / "binned.csv")
    assert rendered[0] == binned[0] == ["t", "f", "value"]
    assert len(rendered) == len(binned) == 1 + 80
    assert max(float(r[2]) for r in binned[1:]) == 80.0


def test_render_errors(grid_points):
    assert invoke("render", "--grid", "0:1:10,0:4000:8").exit_code == 1
    assert invoke("render", "--grid", "0:1:0,0:4000:8", "--points", grid_points).exit_code == 1
    assert invoke("render", "--grid", "nonsense", "--points", grid_points).exit_code == 1


def test_separate(wavs, small_config):
    for name in ("low", "high"):
        assert invoke("transform", f"{name}.wav", "stft:256,64", "-o", f"{name}.csv").exit_code == 0
        assert invoke("--out-dir", name, "fit", f"{name}.csv", "-k", "2", "--nyquist", "4000").exit_code == 0
    result = invoke(
        "separate", "mix.wav", "low/model.json", "high/model.json", "--reference1", "low.wav", "--reference2", "high.wav"
    )
    assert result.exit_code == 0, result.output
    assert (wavs / "source1.wav").is_file() and (wavs / "source2.wav").is_file()
    metrics = rows(wavs / "metrics.csv")
    assert metrics[0] == ["method", "window_size", "source", "sdr_db", "sir_db", "sar_db"]
    assert [r[:3] for r in metrics[1:]] == [["innmf", "256", "1"], ["innmf", "256", "2"]]


def test_separate_needs_both_references(wavs):
    assert invoke("separate", "mix.wav", "a.json", "b.json", "--reference1", "low.wav").exit_code == 1


def test_config_errors(grid_points, tmp_path):
    assert invoke("--config", "missing.toml", "fit", grid_points).exit_code == 1
    (tmp_path / "bad.toml").write_text("epochs = [")
    assert invoke("--config", "bad.toml", "fit", grid_points).exit_code == 1
    (tmp_path / "neg.toml").write_text("learning_rate = -1.0")
    assert invoke("--config", "neg.toml", "fit", grid_points, "-k", "1").exit_code == 1


def test_config_file_sets_defaults(grid_points, tmp_path, small_config):
    (tmp_path / "custom.toml").write_text(SMALL_CONFIG.replace("epochs = 2", "epochs = 4"))
    assert invoke("--config", "custom.toml", "fit", grid_points, "-k", "1").exit_code == 0
    assert len(rows(tmp_path / "loss_curve.csv")) == 1 + 5


def test_matrix_activation_model_loads_back(grid_points, tmp_path, small_config):
    assert invoke("fit", grid_points, "-k", "2", "--activation", "matrix").exit_code == 0
    result = invoke("render", "--grid", "0:0.9:10,0:4000:8", "--model", "model.json")
    assert result.exit_code == 0, result.output
    assert len(rows(tmp_path / "render.csv")) == 1 + 80
    result = invoke("refit", grid_points, "model.json", "--freeze-spectral", "--activation", "matrix")
    assert result.exit_code == 0, result.output


@pytest.mark.parametrize(
    "args",
    [
        ["fit"],
        ["frobnicate"],
        ["fit", "grid.csv", "--epochs", "many"],
        ["fit", "grid.csv", "--no-such-flag"],
    ],
)
def test_usage_errors_exit_with_validation_code(grid_points, args):
    assert invoke(*args).exit_code == 1


def test_experiment_command(grid_points, tmp_path, small_config):
    result = invoke("experiment", "reconstruction", "--epochs", "1", "-k", "2", "--iterations", "3")
    assert result.exit_code == 0, result.output
    table = rows(tmp_path / "reconstruction.csv")
    assert [r[0] for r in table[1:]] == ["256", "384", "512", "640"]
    assert invoke("experiment", "nope").exit_code == 1
