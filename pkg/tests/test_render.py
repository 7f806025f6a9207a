import numpy as np
import pytest

from pointnmf.csvio import read_matrix, write_loss_curve, write_matrix
from pointnmf.errors import ValidationError
from pointnmf.factorize import InnmfModel
from pointnmf.points import TFPointSet
from pointnmf.render import GridSpec, bin_points, parse_grid_spec, raster_kl, render_model


def test_parse_grid_spec():
    spec = parse_grid_spec("0:3:100, 0:4000:128")
    assert spec == GridSpec((0.0, 3.0), (0.0, 4000.0), 100, 128)
    t, f = spec.mesh()
    assert len(t) == len(f) == 100 * 128
    assert t[0] == t[127] == 0.0 and f[128] == 0.0


@pytest.mark.parametrize("text", ["", "0:1:10", "0:1:10,a:b:3", "1:0:10,0:1:3", "0:1:10,0:1:0"])
def test_parse_grid_spec_invalid(text):
    with pytest.raises(ValidationError):
        parse_grid_spec(text)


def test_bin_points_takes_max_and_drops_outside():
    grid = GridSpec((0.0, 1.0), (0.0, 100.0), 2, 2)
    points = TFPointSet([0.0, 0.1, 0.9, 5.0], [0.0, 10.0, 100.0, 0.0], [1.0, 3.0, 2.0, 9.0])
    np.testing.assert_array_equal(bin_points(points, grid), [3.0, 0.0, 0.0, 2.0])


def test_render_matches_model_and_kl_is_zero_on_itself():
    W = np.array([[1.0], [2.0]])
    H = np.array([[1.0, 3.0]])
    model = InnmfModel.from_matrices(W, H, [0.0, 100.0], [0.0, 1.0])
    grid = GridSpec((0.0, 1.0), (0.0, 100.0), 2, 2)
    rendered = render_model(model, grid)
    np.testing.assert_allclose(rendered, [1.0, 2.0, 3.0, 6.0])
    assert raster_kl(rendered, rendered) == pytest.approx(0.0, abs=1e-15)


def test_matrix_csv_round_trip(tmp_path, rng):
    M = rng.uniform(0, 1, (4, 3))
    write_matrix(tmp_path / "m.csv", M)
    np.testing.assert_array_equal(read_matrix(tmp_path / "m.csv"), M)


def test_loss_curve_csv(tmp_path):
    write_loss_curve(tmp_path / "loss.csv", [0.5, 0.25])
    assert (tmp_path / "loss.csv").read_text() == "epoch,mean_kl\n0,0.5\n1,0.25\n"
