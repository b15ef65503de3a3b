"""Command line: ``rkhs-behavior {simulate,predict-interp,identify-subspace,validate,check}``.

Settings come from an optional JSON config file whose keys are the
:class:`RunConfig` field names; command-line flags override it.  Exit codes
are 0 on success, 1 on a feasibility, invariant or degenerate-data failure
and 2 on configuration, parse or shape errors.
"""
import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import plotting
from .catalog import build_model, parse_kernel, parse_scalar_kernel
from .checks import run_checks
from .errors import BehaviorError, ConfigError, ContractError, DegenerateDataError, ObservabilityError, ShapeError
from .interp import EPS_SIGMA, build_regressors, fit_min_norm, regression_kernel, representer_check
from .io import dumps, read_trajectory, write_json, write_matrix_csv, write_trajectory
from .kernels import DirectSum
from .linalg import RankPolicy
from .subspace import MEMBERSHIP_TOL, build_past_future, membership_test, recover_states
from .systems import ARModel, simulate_ar, simulate_ss, uniform_inputs

__all__ = ["RunConfig", "main", "cmd_simulate", "cmd_predict_interp", "cmd_identify_subspace",
           "cmd_validate", "cmd_check", "interp_kernel", "subspace_kernel"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass
class RunConfig:
    model: Any = None
    catalog: Optional[dict] = None
    kernel: Optional[dict] = None
    L: int = 2
    T: int = 200
    seed: Optional[int] = None
    rel_tol: float = 1e-10
    fixed_rank: Optional[int] = None
    eps_sigma: float = EPS_SIGMA
    membership_tol: float = MEMBERSHIP_TOL
    f_star_norm_sq: Optional[float] = None
    order: Optional[int] = None
    route: str = "svd"
    out: Optional[str] = None
    plot: bool = False
    dump_csv: bool = False

    @property
    def policy(self) -> RankPolicy:
        if self.fixed_rank is not None:
            return RankPolicy("fixed", fixed_rank=int(self.fixed_rank))
        return RankPolicy("relative", rel_tol=float(self.rel_tol))

    def validate(self):
        if not isinstance(self.L, int) or self.L < 1:
            raise ConfigError(f"L must be a positive integer, got {self.L!r}", key="L")
        if self.route not in ("svd", "eigen"):
            raise ConfigError(f"route must be 'svd' or 'eigen', got {self.route!r}", key="route")
        if self.order is not None and int(self.order) < 1:
            raise ConfigError("order must be >= 1", key="order")
        return self


def _load_json(text, key):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{key}: invalid JSON ({exc.msg})", key=key) from None


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = _load_json(fh.read(), "config")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}", key="config") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object", key="config")
    known = {f.name for f in fields(RunConfig)}
    for k in cfg:
        if k not in known:
            raise ConfigError(f"unknown config key {k!r}", key=k)
    return cfg


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else {}
    if getattr(args, "model", None) is not None:
        m = args.model.strip()
        cfg["model"] = _load_json(m, "model") if m.startswith("{") else m
    if getattr(args, "catalog", None) is not None:
        try:
            cfg["catalog"] = _load_json(Path(args.catalog).read_text(), "catalog")
        except OSError as exc:
            raise ConfigError(f"cannot read catalog {args.catalog}: {exc.strerror}", key="catalog") from None
    if getattr(args, "kernel", None) is not None:
        cfg["kernel"] = _load_json(args.kernel, "kernel")
    for name in ("L", "T", "seed", "rel_tol", "fixed_rank", "eps_sigma", "membership_tol", "order", "route",
                 "out", "f_star_norm_sq"):
        v = getattr(args, name, None)
        if v is not None:
            cfg[name] = v
    for name in ("plot", "dump_csv"):
        if getattr(args, name, False):
            cfg[name] = True
    return RunConfig(**cfg).validate()


def _out_path(cfg: RunConfig, suffix: str) -> Optional[Path]:
    if cfg.out is None:
        return None
    p = Path(cfg.out)
    return p.with_name(p.stem + suffix)


def _emit(obj, cfg: RunConfig, stdout):
    if cfg.out is None:
        stdout.write(dumps(obj))
    else:
        write_json(obj, cfg.out)


def _need_plot_target(cfg):
    if cfg.plot and cfg.out is None:
        raise ConfigError("--plot needs --out to place the figure", key="plot")


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg: RunConfig, stdout=sys.stdout) -> int:
    if cfg.model is None:
        raise ConfigError("simulate needs a model", key="model")
    if cfg.seed is None:
        raise ConfigError("simulate draws random inputs and needs a seed", key="seed")
    if cfg.out is None:
        raise ConfigError("simulate needs --out for the trajectory CSV", key="out")
    model = build_model(cfg.model, cfg.catalog)
    L = model.lag if isinstance(model, ARModel) else cfg.L
    if cfg.T <= L:
        raise ConfigError(f"T={cfg.T} must exceed L={L}", key="T")
    rng = np.random.default_rng(cfg.seed)
    u = uniform_inputs(cfg.T, model.m, rng)
    if isinstance(model, ARModel):
        traj = simulate_ar(model, u, np.zeros((L, model.p)))
    else:
        traj, _ = simulate_ss(model, u)
    write_trajectory(traj, cfg.out)
    write_json({"config": asdict(cfg), "m": traj.m, "p": traj.p, "T": traj.T}, _out_path(cfg, ".json"))
    if cfg.plot:
        plotting.plot_trajectory(traj, _out_path(cfg, ".png"))
    return EXIT_OK


def interp_kernel(spec, m, p, L):
    """Regression-vector kernel: scalar kinds act on the input window and are
    combined with the linear kernel on past outputs; ``direct-sum`` specs
    are taken as given."""
    spec = {"kind": "gaussian", "sigma": 1.0} if spec is None else spec
    if not isinstance(spec, dict):
        raise ConfigError("kernel spec must be a JSON object", key="kernel")
    if spec.get("kind") == "direct-sum":
        k = parse_kernel(spec, m * (L + 1), p)
        if not isinstance(k, DirectSum) or k.split != m * (L + 1) or k.out_dim != p:
            raise ConfigError(f"direct-sum kernel must split at m(L+1)={m * (L + 1)} with p={p} outputs",
                              key="kernel")
        return DirectSum(k.input_kernel, k.output_kernel, k.split, m * (L + 1) + p * L)
    return regression_kernel(parse_scalar_kernel(spec), m, p, L)


def subspace_kernel(spec, m):
    spec = {"kind": "feature", "map": "identity"} if spec is None else spec
    if not isinstance(spec, dict) or spec.get("kind") != "feature":
        raise ConfigError("subspace commands need a feature kernel, e.g. "
                          '{"kind": "feature", "map": "tanh"}', key="kernel")
    return parse_kernel(spec, m)


def _check_dims(a, b, what):
    if a.m != b.m:
        raise ConfigError(f"{what}: input dimension {b.m} differs from offline data ({a.m})", key="m")
    if a.p != b.p:
        raise ConfigError(f"{what}: output dimension {b.p} differs from offline data ({a.p})", key="p")


def predict_interp_reports(offline, online, cfg: RunConfig):
    """Library-level pipeline behind ``predict-interp``: every online window
    is checked against the offline interpolant."""
    kernel = interp_kernel(cfg.kernel, offline.m, offline.p, cfg.L)
    samples = build_regressors(offline, cfg.L)
    base = fit_min_norm(samples, kernel, cfg.policy)
    if online is None or online.T <= cfg.L:
        return []
    return [
        representer_check(samples, s, kernel, cfg.f_star_norm_sq, cfg.policy, cfg.eps_sigma, base=base)
        for s in build_regressors(online, cfg.L)
    ]


def cmd_predict_interp(cfg: RunConfig, offline_path, online_path, stdout=sys.stdout) -> int:
    _need_plot_target(cfg)
    offline = read_trajectory(offline_path)
    online = read_trajectory(online_path, allow_empty=True)
    if online is not None:
        _check_dims(offline, online, "online file")
    if offline.T <= cfg.L:
        raise ConfigError(f"offline data need T > L={cfg.L}", key="L")
    reports = predict_interp_reports(offline, online, cfg)
    _emit({"config": asdict(cfg), "reports": [r.to_dict() for r in reports]}, cfg, stdout)
    if cfg.plot:
        plotting.plot_representer(reports, _out_path(cfg, ".png"))
    return EXIT_OK


def _past_future(offline, cfg):
    if offline.T <= 2 * cfg.L:
        raise ConfigError(f"subspace commands need T > 2L = {2 * cfg.L}, got T={offline.T}", key="T")
    return build_past_future(offline, cfg.L, subspace_kernel(cfg.kernel, offline.m), cfg.policy)


def cmd_identify_subspace(cfg: RunConfig, offline_path, stdout=sys.stdout) -> int:
    _need_plot_target(cfg)
    offline = read_trajectory(offline_path)
    data = _past_future(offline, cfg)
    res = recover_states(data, cfg.order, cfg.route)
    _emit({"config": asdict(cfg), "result": res.to_dict()}, cfg, stdout)
    if cfg.dump_csv and cfg.out is not None:
        write_matrix_csv(res.pi, _out_path(cfg, "_pi.csv"))
        write_matrix_csv(res.states, _out_path(cfg, "_states.csv"))
    if cfg.plot:
        plotting.plot_singular_values(res.singular_values, _out_path(cfg, ".png"), res.order)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, offline_path, candidate_path, stdout=sys.stdout) -> int:
    _need_plot_target(cfg)
    offline = read_trajectory(offline_path)
    cand = read_trajectory(candidate_path)
    _check_dims(offline, cand, "candidate file")
    data = _past_future(offline, cfg)
    verdict = membership_test(data, cand, tol=cfg.membership_tol)
    _emit({"config": asdict(cfg), "verdict": verdict.to_dict()}, cfg, stdout)
    if cfg.plot:
        plotting.plot_membership(cand, verdict.predicted, cfg.L, _out_path(cfg, ".png"))
    return EXIT_OK if verdict.feasible else EXIT_FAIL


def cmd_check(cfg: RunConfig, stdout=sys.stdout) -> int:
    seed = 0 if cfg.seed is None else cfg.seed
    summary = run_checks(seed)
    _emit(summary, cfg, stdout)
    return EXIT_OK if summary["ok"] else EXIT_FAIL


# ---------------------------------------------------------------- parser


def _add_common(p, *, io=True):
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (JSON reports default to stdout)")
    if not io:
        return
    p.add_argument("--model", help="catalog name or inline JSON model spec")
    p.add_argument("--catalog", help="JSON file with extra named model specs")
    p.add_argument("--kernel", help='JSON kernel spec, e.g. \'{"kind": "gaussian", "sigma": 0.5}\'')
    p.add_argument("--L", type=int, help="lag / past-future window length")
    p.add_argument("--T", type=int, help="trajectory length for simulate")
    p.add_argument("--rel-tol", type=float, dest="rel_tol", help="relative singular value cutoff")
    p.add_argument("--fixed-rank", type=int, dest="fixed_rank", help="use a fixed rank instead of rel-tol")
    p.add_argument("--plot", action="store_true", help="write a PNG figure next to --out")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rkhs-behavior", description="Kernel behavioral models of nonlinear systems from input/output data.",
                                 epilog="exit codes: 0 ok, 1 infeasible or degenerate data, 2 bad configuration or input")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a catalog or inline model under uniform random inputs")
    _add_common(p)

    p = sub.add_parser("predict-interp", help="minimum-norm interpolation with certificates per online window")
    _add_common(p)
    p.add_argument("offline")
    p.add_argument("online")
    p.add_argument("--eps-sigma", type=float, dest="eps_sigma")
    p.add_argument("--f-star-norm-sq", type=float, dest="f_star_norm_sq",
                   help="known ||f_star||^2 for the bound slack")

    p = sub.add_parser("identify-subspace", help="oblique projection, order and state sequence")
    _add_common(p)
    p.add_argument("offline")
    p.add_argument("--order", type=int, help="override the estimated order n")
    p.add_argument("--route", choices=("svd", "eigen"))
    p.add_argument("--dump-csv", action="store_true", dest="dump_csv", help="also write Pi and X_f as CSV")

    p = sub.add_parser("validate", help="membership test for a length-2L candidate trajectory")
    _add_common(p)
    p.add_argument("offline")
    p.add_argument("candidate")
    p.add_argument("--membership-tol", type=float, dest="membership_tol")

    p = sub.add_parser("check", help="run the seeded invariant suite")
    _add_common(p, io=False)
    return ap


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg, stdout)
        if args.command == "predict-interp":
            return cmd_predict_interp(cfg, args.offline, args.online, stdout)
        if args.command == "identify-subspace":
            return cmd_identify_subspace(cfg, args.offline, stdout)
        if args.command == "validate":
            return cmd_validate(cfg, args.offline, args.candidate, stdout)
        return cmd_check(cfg, stdout)
    except (DegenerateDataError, ObservabilityError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_FAIL
    except (ConfigError, ShapeError, ContractError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except BehaviorError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
