import numpy as np
import pytest

from rkhs_behavior.catalog import CATALOG, build_model, catalog_names, parse_kernel, parse_scalar_kernel
from rkhs_behavior.errors import ConfigError
from rkhs_behavior.kernels import DirectSum, FockKernel, RankOneFeature, ScalarLift
from rkhs_behavior.systems import ARModel, StateSpaceModel, realization


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_models_build(name):
    model = build_model(name)
    assert isinstance(model, (ARModel, StateSpaceModel))
    if isinstance(model, StateSpaceModel):
        R = realization(model, model.n)
        assert R.observability_rank == model.n
        assert np.linalg.matrix_rank(R.controllability) == model.n
        assert np.max(np.abs(np.linalg.eigvals(model.A))) < 1


def test_catalog_names_sorted():
    assert catalog_names() == sorted(CATALOG)


def test_dual_nonlinearity_entry():
    m = build_model("hammerstein-dual")
    assert m.psi1.name == "tanh" and m.psi2.name == "identity"


def test_inline_and_extra_catalog():
    spec = {"A": [[0.5]], "B": [[1.0, 0.2]], "C": [[1.0]], "D": [[0.0, 0.0]], "phi": {"map": "poly", "degree": 2}}
    m = build_model(spec)
    assert (m.m, m.q) == (1, 2)
    assert build_model("mine", {"mine": spec}).q == 2
    ar = build_model({"type": "lti-ar", "A": [[[0.1]]], "B": [[[1.0]], [[0.5]]]})
    assert isinstance(ar, ARModel) and ar.lag == 1


@pytest.mark.parametrize("spec,key", [
    ("nope", "model"),
    ({"A": [[0.5]], "B": [[1.0]], "C": [[1.0]]}, "D"),
    ({"A": [[0.5]], "B": [[1.0]], "C": [[1.0]], "D": [["x"]]}, "D"),
    ({"type": "weird"}, "type"),
    ({"A": [[0.5]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]], "phi": "sin"}, "phi"),
    (3, "model"),
])
def test_model_spec_errors_name_the_key(spec, key):
    with pytest.raises(ConfigError) as exc:
        build_model(spec)
    assert exc.value.key == key


def test_kernel_specs():
    k = parse_kernel({"kind": "fock", "rho": [1, 1, 1, 1], "K": 3, "p": 2})
    assert isinstance(k, ScalarLift) and k.out_dim == 2 and isinstance(k.scalar, FockKernel)
    assert isinstance(parse_kernel({"kind": "feature", "map": "tanh"}, m=2), RankOneFeature)
    ds = parse_kernel({"kind": "direct-sum", "split": 2, "input": {"kind": "gaussian"},
                       "output": {"kind": "linear"}}, p=1)
    assert isinstance(ds, DirectSum)
    for bad in ({"kind": "rbf"}, {"kind": "fock", "K": 3, "rho": [1, 1]}, "gaussian",
                {"kind": "direct-sum", "input": {"kind": "linear"}, "output": {"kind": "linear"}}):
        with pytest.raises(ConfigError):
            parse_kernel(bad, m=1)
    with pytest.raises(ConfigError):
        parse_kernel({"kind": "feature", "map": "tanh"})
    assert parse_scalar_kernel({"kind": "polynomial", "degree": 3}).degree == 3
