import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rkhs_behavior.errors import ParseError
from rkhs_behavior.io import canonical, dumps, read_trajectory, write_matrix_csv, write_trajectory
from rkhs_behavior.systems import Trajectory

floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 8), st.data())
def test_csv_round_trip_is_bit_exact(tmp_path_factory, m, p, T, data):
    u = data.draw(arrays(np.float64, (T, m), elements=floats))
    y = data.draw(arrays(np.float64, (T, p), elements=floats))
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    write_trajectory(Trajectory(u, y), path)
    back = read_trajectory(path)
    assert back.u.tobytes() == u.tobytes() and back.y.tobytes() == y.tobytes()


def test_csv_layout(tmp_path):
    path = tmp_path / "t.csv"
    write_trajectory(Trajectory([[0.5, 1.0]], [[0.1]]), path)
    raw = path.read_bytes()
    assert raw == b"u0,u1,y0\n0.5,1,0.10000000000000001\n"


@pytest.mark.parametrize("text,row", [
    ("u0,y0\n1,2\n3\n", 3),
    ("u0,y0\n1,2\n3,abc\n", 3),
    ("u0,y0\n1,nan\n", 2),
    ("y0,u0\n1,2\n", 1),
    ("u0\n1\n", 1),
    ("", 1),
    ("u0,y0\n", 2),
])
def test_parse_errors_carry_row(tmp_path, text, row):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError) as exc:
        read_trajectory(path)
    assert exc.value.row == row


def test_empty_allowed(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("u0,y0\n")
    assert read_trajectory(path, allow_empty=True) is None


def test_canonical_json():
    obj = {"b": np.float64(0.1), "a": [np.int64(2), np.array([1.5, np.inf])], "c": np.bool_(True), "d": None}
    text = dumps(obj)
    assert json.loads(text) == {"a": [2, [1.5, None]], "b": 0.1, "c": True, "d": None}
    assert text.index('"a"') < text.index('"b"')
    assert canonical((1, 2)) == [1, 2]
    x = 0.1 + 0.2
    assert json.loads(dumps({"x": x}))["x"] == x


def test_matrix_csv(tmp_path):
    path = tmp_path / "m.csv"
    write_matrix_csv(np.array([[1.0, 2.5], [3.0, 4.0]]), path)
    assert path.read_text() == "1,2.5\n3,4\n"
