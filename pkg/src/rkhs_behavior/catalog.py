"""Named reference models and the model / kernel specification grammar.

Model specs are plain dicts, either ``{"catalog": "<name>"}`` or an inline
state-space description::

    {"A": [[...]], "B": [[...]], "C": [[...]], "D": [[...]],
     "phi": "tanh", "x0": [...]}

with ``"psi1"``/``"psi2"`` in place of ``"phi"`` for two nonlinearities, or
an autoregressive description ``{"type": "lti-ar", "A": [...], "B": [...]}``.
Nonlinearity names are those of :func:`rkhs_behavior.kernels.feature_map`,
optionally as ``{"map": "poly", "degree": 3}``.

Kernel specs look like ``{"kind": "fock", "rho": [1, 1, 1, 1], "K": 3, "p": 2}``.
"""
import numpy as np

from .errors import ConfigError
from .kernels import (
    DirectSum,
    FockKernel,
    GaussianKernel,
    LinearKernel,
    PolynomialKernel,
    RankOneFeature,
    ScalarLift,
    feature_map,
)
from .systems import ARModel, StateSpaceModel, VolterraFunction, make_lti_ar

__all__ = ["CATALOG", "catalog_names", "build_model", "parse_feature_map",
           "parse_scalar_kernel", "parse_kernel", "model_dims"]


def _lti(n):
    if n == 1:
        return dict(A=[[0.7]], B=[[1.0]], C=[[1.0]], D=[[0.5]])
    if n == 2:
        return dict(A=[[0.6, 0.4], [-0.3, 0.5]], B=[[1.0], [0.5]], C=[[1.0, -0.7]], D=[[0.2]])
    return dict(
        A=[[0.5, 0.3, 0.0], [-0.2, 0.4, 0.3], [0.1, 0.0, 0.6]],
        B=[[1.0], [0.0], [0.5]],
        C=[[1.0, 0.5, -0.4]],
        D=[[0.0]],
    )


def _volterra_ar():
    # y[t+2] = 0.5 y[t+1] - 0.1 y[t] + g(u[t..t+2]), g a quadratic Volterra series
    h1 = np.array([0.2, 0.5, 1.0])
    h2 = np.array([[0.1, 0.0, 0.05], [0.0, 0.3, 0.0], [0.05, 0.0, -0.2]])
    v = VolterraFunction(0.0, [h1, h2])
    return {"type": "ar", "A": [[[-0.5]], [[0.1]]], "volterra": v}


CATALOG = {
    "lti-n1": dict(_lti(1), phi="identity"),
    "lti-n2": dict(_lti(2), phi="identity"),
    "lti-n3": dict(_lti(3), phi="identity"),
    "hammerstein-tanh": dict(_lti(2), phi="tanh"),
    "hammerstein-poly": dict(
        A=[[0.6, 0.4], [-0.3, 0.5]], B=[[1.0, 0.3], [0.5, -0.4]], C=[[1.0, -0.7]],
        D=[[0.2, 0.1]], phi={"map": "poly", "degree": 2},
    ),
    "hammerstein-dual": dict(_lti(2), psi1="tanh", psi2="identity"),
    "volterra-ar": "volterra-ar",
}


def catalog_names():
    return sorted(CATALOG)


def parse_feature_map(spec, m: int):
    if isinstance(spec, str):
        spec = {"map": spec}
    if not isinstance(spec, dict) or "map" not in spec:
        raise ConfigError(f"bad feature map spec {spec!r}", key="phi")
    try:
        return feature_map(spec["map"], m, int(spec.get("degree", 2)))
    except ValueError as exc:
        raise ConfigError(str(exc), key="phi") from None


def _mat(spec, key):
    try:
        M = np.atleast_2d(np.asarray(spec[key], dtype=float))
    except KeyError:
        raise ConfigError(f"model spec is missing {key!r}", key=key) from None
    except (TypeError, ValueError):
        raise ConfigError(f"model entry {key!r} is not a numeric matrix", key=key) from None
    return M


def build_model(spec, catalog=None):
    """Model object (:class:`StateSpaceModel` or :class:`ARModel`) for a spec.

    ``catalog`` maps extra names to inline specs and is consulted before the
    built-in catalog.
    """
    if isinstance(spec, str):
        spec = {"catalog": spec}
    if not isinstance(spec, dict):
        raise ConfigError(f"model spec must be a name or a mapping, got {spec!r}", key="model")
    if "catalog" in spec:
        name = spec["catalog"]
        table = dict(CATALOG)
        if catalog:
            table.update(catalog)
        if name not in table:
            raise ConfigError(f"unknown model {name!r}", key="model")
        entry = table[name]
        if entry == "volterra-ar":
            entry = _volterra_ar()
        return build_model(entry, catalog)
    kind = spec.get("type", "ss")
    if kind == "ar":
        A = np.asarray(spec["A"], float)
        v = spec["volterra"]
        return ARModel(A, v, 1)
    if kind == "lti-ar":
        return make_lti_ar(spec["A"], spec["B"])
    if kind != "ss":
        raise ConfigError(f"unknown model type {kind!r}", key="type")
    A, B, C, D = (_mat(spec, k) for k in "ABCD")
    m = int(spec.get("m", 0)) or None
    if "psi1" in spec:
        psi1_spec, psi2_spec = spec["psi1"], spec.get("psi2", spec["psi1"])
    else:
        psi1_spec = psi2_spec = spec.get("phi", "identity")
    if m is None:
        # invert q = m (identity/tanh) or q = m * degree (poly)
        q = B.shape[1]
        probe = psi1_spec if isinstance(psi1_spec, dict) else {"map": psi1_spec}
        deg = int(probe.get("degree", 2)) if probe.get("map") == "poly" else 1
        if q % deg:
            raise ConfigError("input width of B does not match the feature map", key="B")
        m = q // deg
    psi1 = parse_feature_map(psi1_spec, m)
    psi2 = psi1 if psi2_spec == psi1_spec else parse_feature_map(psi2_spec, m)
    try:
        return StateSpaceModel(A, B, C, D, psi1, psi2, x0=spec.get("x0"))
    except ValueError as exc:
        raise ConfigError(str(exc), key="model") from None


def model_dims(model):
    """``(m, p)`` of a model object."""
    return model.m, model.p


def parse_scalar_kernel(spec):
    kind = spec.get("kind")
    try:
        if kind == "linear":
            return LinearKernel()
        if kind == "gaussian":
            return GaussianKernel(float(spec.get("sigma", 1.0)))
        if kind == "fock":
            K = int(spec.get("K", 6))
            rho = spec.get("rho", [1.0] * (K + 1))
            return FockKernel(tuple(rho), K)
        if kind == "polynomial":
            return PolynomialKernel(int(spec.get("degree", 2)))
    except ValueError as exc:
        raise ConfigError(str(exc), key="kernel") from None
    raise ConfigError(f"unknown kernel kind {kind!r}", key="kernel")


def parse_kernel(spec, m=None, p=None):
    """Operator kernel for a spec.

    ``feature`` kinds need the input dimension ``m``; scalar kinds are lifted
    to ``p`` outputs (``spec["p"]`` wins when given).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"kernel spec needs a 'kind': {spec!r}", key="kernel")
    kind = spec["kind"]
    if kind == "feature":
        if m is None:
            raise ConfigError("feature kernel needs the input dimension", key="kernel")
        return RankOneFeature(parse_feature_map(spec, m))
    if kind == "direct-sum":
        if "split" not in spec:
            raise ConfigError("direct-sum kernel needs 'split'", key="kernel")
        return DirectSum(parse_kernel(spec["input"], m, p), parse_kernel(spec["output"], m, p),
                         int(spec["split"]))
    pp = int(spec.get("p", p or 1))
    return ScalarLift(parse_scalar_kernel(spec), pp)
