import io
import json

import numpy as np
import pytest

from rkhs_behavior import cli, linalg
from rkhs_behavior.catalog import build_model
from rkhs_behavior.interp import build_regressors, fit_min_norm, regression_kernel, representer_check
from rkhs_behavior.io import canonical, dumps, read_trajectory, write_trajectory
from rkhs_behavior.kernels import GaussianKernel, RankOneFeature, feature_map
from rkhs_behavior.subspace import build_past_future, membership_test, recover_states
from rkhs_behavior.systems import Trajectory, simulate_ss, uniform_inputs


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("simulate", "--model", "hammerstein-tanh", "--T", 150, "--seed", 7, "--out", d / "off.csv")[0] == 0
    assert run("simulate", "--model", "hammerstein-tanh", "--T", 12, "--seed", 8, "--out", d / "on.csv")[0] == 0
    return d


# -- simulate


def test_simulate_deterministic(tmp_path):
    for name in ("a", "b"):
        assert run("simulate", "--model", "lti-n2", "--T", 100, "--seed", 7, "--out", tmp_path / f"{name}.csv")[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    side = json.loads((tmp_path / "a.json").read_text())
    assert side["config"]["seed"] == 7 and side["config"]["model"] == "lti-n2" and side["T"] == 100


def test_simulate_matches_library(data):
    model = build_model("hammerstein-tanh")
    ref, _ = simulate_ss(model, uniform_inputs(150, 1, np.random.default_rng(7)))
    got = read_trajectory(data / "off.csv")
    assert got.u.tobytes() == ref.u.tobytes() and got.y.tobytes() == ref.y.tobytes()


def test_simulate_ar_catalog_and_plot(tmp_path):
    assert run("simulate", "--model", "volterra-ar", "--T", 40, "--seed", 1, "--out", tmp_path / "v.csv",
               "--plot")[0] == 0
    assert (tmp_path / "v.png").read_bytes()[:4] == b"\x89PNG"


@pytest.mark.parametrize("args", [
    ("--model", "lti-n2", "--T", 2, "--L", 2, "--seed", 1),
    ("--model", "nope", "--T", 20, "--seed", 1),
    ("--model", "lti-n2", "--T", 20),
    ("--model", "{bad json", "--T", 20, "--seed", 1),
])
def test_simulate_config_errors(tmp_path, args):
    code, _, err = run("simulate", *args, "--out", tmp_path / "x.csv")
    assert code == 2 and err.startswith("error:")


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "lti-n1", "T": 30, "seed": 3}))
    assert run("simulate", "--config", cfg, "--T", 25, "--out", tmp_path / "c.csv")[0] == 0
    assert read_trajectory(tmp_path / "c.csv").T == 25
    cfg.write_text(json.dumps({"model": "lti-n1", "bogus": 1}))
    assert run("simulate", "--config", cfg, "--out", tmp_path / "c.csv")[0] == 2


def test_inline_model_and_catalog_file(tmp_path):
    spec = {"A": [[0.5]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]], "phi": "tanh"}
    assert run("simulate", "--model", json.dumps(spec), "--T", 10, "--seed", 0, "--out", tmp_path / "i.csv")[0] == 0
    cat = tmp_path / "cat.json"
    cat.write_text(json.dumps({"mine": spec}))
    assert run("simulate", "--model", "mine", "--catalog", cat, "--T", 10, "--seed", 0,
               "--out", tmp_path / "j.csv")[0] == 0
    assert (tmp_path / "i.csv").read_bytes() == (tmp_path / "j.csv").read_bytes()


# -- predict-interp


def test_predict_interp_parity(data, tmp_path):
    spec = {"kind": "gaussian", "sigma": 0.7}
    code, out, _ = run("predict-interp", data / "off.csv", data / "on.csv", "--L", 2, "--kernel", json.dumps(spec))
    assert code == 0
    reports = json.loads(out)["reports"]
    off, on = read_trajectory(data / "off.csv"), read_trajectory(data / "on.csv")
    k = regression_kernel(GaussianKernel(0.7), 1, 1, 2)
    S = build_regressors(off, 2)
    base = fit_min_norm(S, k)
    ref = [representer_check(S, s, k, base=base).to_dict() for s in build_regressors(on, 2)]
    assert dumps(reports) == dumps(canonical(ref))
    assert len(reports) == 10


def test_predict_interp_empty_online(data, tmp_path):
    (tmp_path / "e.csv").write_text("u0,y0\n")
    code, out, _ = run("predict-interp", data / "off.csv", tmp_path / "e.csv")
    assert code == 0 and json.loads(out)["reports"] == []


def test_predict_interp_dimension_mismatch(data, tmp_path):
    write_trajectory(Trajectory(np.zeros((5, 1)), np.zeros((5, 2))), tmp_path / "p2.csv")
    assert run("predict-interp", data / "off.csv", tmp_path / "p2.csv")[0] == 2


def test_predict_interp_parse_error_reports_row(data, tmp_path):
    (tmp_path / "bad.csv").write_text("u0,y0\n1,2\n3,x\n")
    code, _, err = run("predict-interp", data / "off.csv", tmp_path / "bad.csv")
    assert code == 2 and ":3:" in err


def test_predict_interp_files_and_plot(data, tmp_path):
    assert run("predict-interp", data / "off.csv", data / "on.csv", "--out", tmp_path / "r.json", "--plot")[0] == 0
    assert (tmp_path / "r.png").exists() and json.loads((tmp_path / "r.json").read_text())["reports"]


# -- identify-subspace


def test_identify_parity_and_outputs(data, tmp_path):
    kspec = '{"kind": "feature", "map": "tanh"}'
    code = run("identify-subspace", data / "off.csv", "--L", 3, "--kernel", kspec, "--out", tmp_path / "id.json",
               "--plot", "--dump-csv")[0]
    assert code == 0
    got = json.loads((tmp_path / "id.json").read_text())["result"]
    d = build_past_future(read_trajectory(data / "off.csv"), 3, RankOneFeature(feature_map("tanh", 1)))
    assert dumps(got) == dumps(recover_states(d).to_dict())
    assert got["order"] == 2 and got["input_rank_satisfied"]
    for suffix in (".png", "_pi.csv", "_states.csv"):
        assert (tmp_path / f"id{suffix}").exists()


def test_identify_order_override_and_route(data):
    code, out, _ = run("identify-subspace", data / "off.csv", "--L", 3, "--order", 1, "--route", "eigen")
    res = json.loads(out)["result"]
    assert code == 0 and res["order"] == 1 and res["route"] == "eigen"


def test_identify_zero_trajectory_is_degenerate(tmp_path):
    write_trajectory(Trajectory(np.zeros(40), np.zeros(40)), tmp_path / "z.csv")
    code, _, err = run("identify-subspace", tmp_path / "z.csv", "--L", 2)
    assert code == 1 and "zero" in err


def test_identify_needs_feature_kernel_and_length(data, tmp_path):
    assert run("identify-subspace", data / "off.csv", "--kernel", '{"kind": "gaussian"}')[0] == 2
    write_trajectory(Trajectory(np.ones(4), np.ones(4)), tmp_path / "s.csv")
    assert run("identify-subspace", tmp_path / "s.csv", "--L", 2)[0] == 2


# -- validate


def test_validate_self_membership_and_parity(data, tmp_path):
    off = read_trajectory(data / "off.csv")
    write_trajectory(off.window(20, 6), tmp_path / "c.csv")
    code, out, _ = run("validate", data / "off.csv", tmp_path / "c.csv", "--L", 3,
                       "--kernel", '{"kind": "feature", "map": "tanh"}')
    assert code == 0
    d = build_past_future(off, 3, RankOneFeature(feature_map("tanh", 1)))
    ref = membership_test(d, off.window(20, 6)).to_dict()
    assert dumps(json.loads(out)["verdict"]) == dumps(ref)


def test_validate_perturbed_rejected(data, tmp_path):
    off = read_trajectory(data / "off.csv")
    c = off.window(20, 6)
    y = c.y.copy()
    y[-1] += 1.0
    write_trajectory(Trajectory(c.u, y), tmp_path / "c.csv")
    code, out, _ = run("validate", data / "off.csv", tmp_path / "c.csv", "--L", 3,
                       "--kernel", '{"kind": "feature", "map": "tanh"}', "--out", tmp_path / "v.json", "--plot")
    assert code == 1
    assert not json.loads((tmp_path / "v.json").read_text())["verdict"]["feasible"]
    assert (tmp_path / "v.png").exists()


def test_validate_wrong_length(data, tmp_path):
    write_trajectory(read_trajectory(data / "off.csv").window(0, 5), tmp_path / "c.csv")
    code, _, err = run("validate", data / "off.csv", tmp_path / "c.csv", "--L", 3)
    assert code == 2 and "length" in err


def test_plot_without_out_is_config_error(data):
    assert run("identify-subspace", data / "off.csv", "--plot")[0] == 2


def test_bad_arguments_exit_2():
    assert run("simulate", "--T", "abc")[0] == 2
    assert run("frobnicate")[0] == 2


# -- check


@pytest.fixture(scope="module")
def check_summary(tmp_path_factory):
    d = tmp_path_factory.mktemp("check")
    code = run("check", "--seed", 0, "--out", d / "s.json")[0]
    return code, (d / "s.json").read_bytes()


def test_check_passes_and_lists_counts(check_summary):
    code, raw = check_summary
    summary = json.loads(raw)
    assert code == 0 and summary["ok"]
    names = [c["name"] for c in summary["checks"]]
    assert len(names) == len(set(names)) == 10
    for c in summary["checks"]:
        assert c["passed"] == c["total"] > 0


def test_check_injected_fault_fails(monkeypatch):
    real = linalg.pinv

    def broken(M, policy=linalg.DEFAULT_POLICY):
        P = real(M, policy)
        return P * (1 + 1e-3)   # a slightly wrong pseudoinverse

    for mod in ("rkhs_behavior.linalg", "rkhs_behavior.interp", "rkhs_behavior.subspace", "rkhs_behavior.systems"):
        monkeypatch.setattr(f"{mod}.pinv", broken)
    code, out, _ = run("check", "--seed", 0)
    summary = json.loads(out)
    assert code == 1 and not summary["ok"]
    assert any(not c["ok"] for c in summary["checks"])
