import csv
from collections import defaultdict

import numpy as np
import pytest

from pointnmf.errors import ValidationError
from pointnmf.experiments import FULL_BATCH, ExperimentSettings, desk_train_config, run_experiments
from pointnmf.factorize import OptimizerKind, TrainConfig


def tiny_settings(**kwargs):
    train = TrainConfig(
        learning_rate=1e-3,
        epochs=1,
        batch_size=2048,
        optimizer="adam",
        hidden_sizes=(8,),
        encoding_frequencies=3,
        log_every=0,
    )
    values = dict(train=train, rank=2, iterations=5, mixtures=1)
    values.update(kwargs)
    return ExperimentSettings(**values)


def read(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_unknown_experiment(tmp_path):
    with pytest.raises(ValidationError):
        run_experiments(["nope"], tiny_settings(), tmp_path)


def test_experiments_train_full_batch_adam():
    train = ExperimentSettings().train
    assert train.optimizer == OptimizerKind.ADAM
    assert train.batch_size == FULL_BATCH
    assert desk_train_config(epochs=3).epochs == 3


def test_settings_validation():
    with pytest.raises(ValidationError):
        tiny_settings(rank=0)
    with pytest.raises(ValidationError):
        tiny_settings(mixtures=0)


def test_reconstruction_table(tmp_path):
    written = run_experiments(["reconstruction"], tiny_settings(), tmp_path)
    table = read(written["reconstruction"])
    assert table[0] == ["window_size", "innmf_kl", "nmf_kl", "ratio"]
    assert [int(r[0]) for r in table[1:]] == [256, 384, 512, 640]
    assert all(float(r[1]) >= 0 and float(r[2]) >= 0 for r in table[1:])


@pytest.mark.slow
def test_experiments_are_reproducible(tmp_path):
    settings = tiny_settings()
    names = ["reconstruction", "hybrid", "cross", "separation"]
    first = run_experiments(names, settings, tmp_path / "a")
    second = run_experiments(names, settings, tmp_path / "b")
    for name in names:
        assert first[name].read_bytes() == second[name].read_bytes()
    assert len(read(first["cross"])) == 1 + 9
    assert len(read(first["hybrid"])) == 1 + 2
    metrics = read(first["separation"])
    assert {r[0] for r in metrics[1:]} == {"innmf", "nmf"}
    assert len(metrics) == 1 + 3 * 2 * 2


@pytest.mark.slow
def test_hybrid_components_follow_notes(tmp_path):
    written = run_experiments(["hybrid"], ExperimentSettings(), tmp_path)
    table = read(written["hybrid"])
    assert sorted(float(r[1]) for r in table[1:]) == [220.0, 330.0]
    assert all(float(r[2]) > 0.9 for r in table[1:])


@pytest.mark.slow
def test_refit_dictionary_matches_matrix_nmf_at_every_size(tmp_path):
    written = run_experiments(["reconstruction"], ExperimentSettings(), tmp_path)
    table = read(written["reconstruction"])
    assert [int(r[0]) for r in table[1:]] == [256, 384, 512, 640]
    for size, innmf_kl, nmf_kl, ratio in table[1:]:
        assert float(nmf_kl) > 0
        assert float(ratio) <= 1.3, f"N={size}: {innmf_kl} vs {nmf_kl}"


@pytest.mark.slow
def test_own_representation_fits_best(tmp_path):
    written = run_experiments(["cross"], ExperimentSettings(), tmp_path)
    kl = {(r[0], r[1]): float(r[2]) for r in read(written["cross"])[1:]}
    names = sorted({d for d, _ in kl})
    assert len(kl) == 9 and all(np.isfinite(v) for v in kl.values())
    for d in names:
        others = [kl[d, r] for r in names if r != d]
        assert kl[d, d] <= np.mean(others)


@pytest.mark.slow
def test_separation_parity_with_matrix_nmf(tmp_path):
    written = run_experiments(["separation"], ExperimentSettings(), tmp_path)
    sdr = defaultdict(list)
    for method, size, source, sdr_db, _, _ in read(written["separation"])[1:]:
        sdr[method, int(size), int(source)].append(float(sdr_db))
    assert len(sdr) == 2 * 3 * 2
    for size in (256, 512, 1024):
        for source in (1, 2):
            innmf = np.mean(sdr["innmf", size, source])
            nmf = np.mean(sdr["nmf", size, source])
            assert abs(innmf - nmf) <= 1.0, f"N={size} source {source}: {innmf:.2f} vs {nmf:.2f} dB"
    assert np.mean(sdr["innmf", 512, 1] + sdr["innmf", 512, 2]) > 10.0
