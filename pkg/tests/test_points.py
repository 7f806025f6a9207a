import numpy as np
import pytest

from pointnmf.errors import ParseError, ValidationError
from pointnmf.points import (
    NormalizationInfo,
    TFPoint,
    TFPointSet,
    compute_normalization,
    load_points,
    save_points,
    to_matrix,
)


def write(path, text):
    path.write_text(text)
    return path


def test_load_two_rows(tmp_path):
    path = write(tmp_path / "p.csv", "t_sec,f_hz,mag\n0.0,440.0,1.5\n0.1,440.0,0.5\n")
    points = load_points(path)
    assert len(points) == 2
    assert points[0] == TFPoint(0.0, 440.0, 1.5)
    assert points[1] == TFPoint(0.1, 440.0, 0.5)
    assert points.source_tag == "csv:p.csv"


def test_load_empty(tmp_path):
    path = write(tmp_path / "p.csv", "t_sec,f_hz,mag\n")
    with pytest.raises(ParseError, match="empty point set"):
        load_points(path)


def test_load_negative_magnitude_names_line(tmp_path):
    path = write(tmp_path / "p.csv", "t_sec,f_hz,mag\n0.0,440.0,-1.0\n")
    with pytest.raises(ValidationError, match="line 2"):
        load_points(path)


def test_load_malformed_row(tmp_path):
    path = write(tmp_path / "p.csv", "t_sec,f_hz,mag\n0.0,440.0,1\n0.1,abc,1\n")
    with pytest.raises(ParseError) as e:
        load_points(path)
    assert e.value.line == 3


def test_load_bad_header(tmp_path):
    path = write(tmp_path / "p.csv", "t,f,m\n0,1,2\n")
    with pytest.raises(ParseError, match="header"):
        load_points(path)


def test_load_invalid_utf8(tmp_path):
    path = tmp_path / "p.csv"
    path.write_bytes(b"t_sec,f_hz,mag\n0.0,440.0,\xff\xfe1\n")
    with pytest.raises(ParseError, match="UTF-8"):
        load_points(path)


def test_round_trip(tmp_path, rng):
    points = TFPointSet(rng.uniform(0, 3, 100), rng.uniform(0, 8000, 100), rng.exponential(1.0, 100))
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    save_points(points, first)
    loaded = load_points(first)
    np.testing.assert_allclose(loaded.t, points.t, rtol=1e-9)
    np.testing.assert_allclose(loaded.f, points.f, rtol=1e-9)
    np.testing.assert_allclose(loaded.m, points.m, rtol=1e-9)
    save_points(loaded, second)
    assert first.read_bytes() == second.read_bytes()


def test_save_empty(tmp_path):
    with pytest.raises(ValidationError):
        save_points(TFPointSet(np.empty(0), np.empty(0), np.empty(0)), tmp_path / "x.csv")


def test_save_duplicates_keeps_order(tmp_path):
    points = TFPointSet([0.5, 0.5, 0.1], [100.0, 100.0, 50.0], [1.0, 2.0, 3.0])
    path = tmp_path / "dup.csv"
    save_points(points, path)
    lines = path.read_text().splitlines()
    assert lines == ["t_sec,f_hz,mag", "0.5,100.0,1.0", "0.5,100.0,2.0", "0.1,50.0,3.0"]


def test_invalid_points():
    with pytest.raises(ValidationError):
        TFPoint(0.0, 10.0, -1.0)
    with pytest.raises(ValidationError):
        TFPointSet([0.0], [np.nan], [1.0])
    with pytest.raises(ValidationError):
        TFPointSet([0.0, 1.0], [1.0], [1.0])


def test_normalization_arithmetic():
    norm = compute_normalization(TFPointSet([0.0, 2.0], [100.0, 200.0], [1.0, 3.0]), 8000)
    assert norm.t_span == (0.0, 2.0)
    assert norm.f_scale == 8000
    assert norm.m_scale == 2.0


def test_normalization_degenerate():
    norm = compute_normalization(TFPointSet([1.0], [10.0], [0.0]), 8000)
    t_min, t_max = norm.t_span
    assert t_min == 1.0 and t_max > 1.0
    assert t_max - t_min < 1e-12
    assert norm.m_scale == 1.0


def test_normalization_constant_magnitudes():
    norm = compute_normalization(TFPointSet([0.0, 1.0, 2.0], [1.0, 1.0, 1.0], [5.0, 5.0, 5.0]), 100)
    assert norm.m_scale == 5.0


def test_normalized_ranges(rng):
    points = TFPointSet(rng.uniform(0, 3, 500), rng.uniform(0, 4000, 500), rng.exponential(2.0, 500))
    norm = compute_normalization(points, 4000)
    t = norm.normalize_t(points.t)
    assert t.min() == 0.0 and t.max() == 1.0
    assert (norm.normalize_f(points.f) <= 1.0).all()
    assert abs(norm.normalize_m(points.m).mean() - 1.0) < 1e-12


def test_normalization_validation():
    with pytest.raises(ValidationError):
        NormalizationInfo((1.0, 1.0), 100.0)
    with pytest.raises(ValidationError):
        NormalizationInfo((0.0, 1.0), 0.0)


def test_to_matrix():
    V = np.arange(6, dtype=float).reshape(2, 3)
    t = np.repeat([0.0, 0.1, 0.2], 2)
    f = np.tile([0.0, 100.0], 3)
    points = TFPointSet(t, f, V.T.reshape(-1))
    matrix, freqs, times = to_matrix(points)
    np.testing.assert_array_equal(matrix, V)
    np.testing.assert_array_equal(freqs, [0.0, 100.0])
    np.testing.assert_array_equal(times, [0.0, 0.1, 0.2])
    with pytest.raises(ValidationError):
        to_matrix(points.select(np.arange(5)))
