import numpy as np

from rkhs_behavior import plotting
from rkhs_behavior.interp import RepresenterReport
from rkhs_behavior.systems import Trajectory

PNG = b"\x89PNG"


def test_figures_written(tmp_path, rng):
    tr = Trajectory(rng.standard_normal((30, 2)), rng.standard_normal((30, 1)))
    paths = [
        plotting.plot_trajectory(tr, tmp_path / "t.png", title="run"),
        plotting.plot_singular_values([3.0, 1.0, 1e-15, 0.0], tmp_path / "s.png", order=2),
        plotting.plot_membership(tr.window(0, 6), tr.y[3:6], 3, tmp_path / "m.png"),
        plotting.plot_representer([], tmp_path / "empty.png"),
    ]
    rep = RepresenterReport(np.array([0.1]), np.array([0.2]), 0.3, 0.3, 0.0, "positive-definite",
                            prediction_error_sq=0.01)
    paths.append(plotting.plot_representer([rep, rep], tmp_path / "r.png"))
    for p in paths:
        assert p.read_bytes()[:4] == PNG


def test_figures_reproducible(tmp_path, rng):
    s = np.abs(rng.standard_normal(6))
    a = plotting.plot_singular_values(s, tmp_path / "a.png").read_bytes()
    b = plotting.plot_singular_values(s, tmp_path / "b.png").read_bytes()
    assert a == b
