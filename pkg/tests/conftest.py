import numpy as np
import pytest

from pointnmf.config import config
from pointnmf.transforms import AudioBuffer


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="need --runslow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def default_config(monkeypatch, tmp_path):
    monkeypatch.delenv("POINTNMF_CONFIG", raising=False)
    monkeypatch.chdir(tmp_path)
    config.reset()
    yield
    config.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tone():
    """One second of a 440 Hz sine at 16 kHz."""
    sr = 16000
    t = np.arange(sr) / sr
    return AudioBuffer(np.sin(2 * np.pi * 440 * t), sr)
