"""Seeded invariant suite behind ``rkhs-behavior check``.

Every check builds its own scenarios from a seed, compares the library
against an independent route, usually simulator ground truth or an
explicit least-squares computation, and reports pass counts plus the worst
observed metric.  The summary is plain data so identical seeds serialize to
identical bytes.
"""
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.linalg import subspace_angles

from .interp import (
    RegressionSample,
    build_regressors,
    fit_min_norm,
    regression_kernel,
    representer_check,
    sigma_certificate,
)
from .kernels import (
    DirectSum,
    FockKernel,
    GaussianKernel,
    KernelExpansion,
    LinearKernel,
    PolynomialKernel,
    RankOneFeature,
    ScalarLift,
    feature_map,
    tabulate,
    trace_inner,
)
from .linalg import colspace_residual, hankel, is_pe, numerical_rank
from .subspace import (
    build_past_future,
    input_gram,
    input_rank_check,
    membership_test,
    recover_states,
    shifted_gram,
    subspace_predict,
)
from .systems import (
    StateSpaceModel,
    Trajectory,
    make_lti_ar,
    random_ss,
    realization,
    simulate_ar,
    simulate_ss,
    ss_to_ar,
    uniform_inputs,
)

__all__ = ["CheckResult", "CHECKS", "run_checks"]


@dataclass
class CheckResult:
    name: str
    passed: int
    total: int
    worst: float
    tolerance: float
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.total > 0 and self.passed == self.total


def _rng(seed, tag):
    return np.random.default_rng([seed, tag])


# ---------------------------------------------------------------- interpolation


def _random_lti_ar(rng, m, p, L):
    A = 0.4 / L * rng.standard_normal((L, p, p))
    B = rng.standard_normal((L + 1, p, m))
    return make_lti_ar(A, B)


def linear_oracle(seed=0, systems=20, queries=50, tol=1e-8) -> CheckResult:
    """Kernel predictor with the linear kernel vs least-norm linear regression."""
    rng = _rng(seed, 1)
    passed, worst = 0, 0.0
    for _ in range(systems):
        m, p, L = (int(x) for x in rng.integers(1, 4, size=3))
        T = int(rng.integers(60, 201))
        model = _random_lti_ar(rng, m, p, L)
        traj = simulate_ar(model, uniform_inputs(T, m, rng), rng.standard_normal((L, p)))
        samples = build_regressors(traj, L)
        kernel = regression_kernel(LinearKernel(), m, p, L)
        f = fit_min_norm(samples, kernel)
        Z = np.array([s.z for s in samples])
        Y = np.array([s.y_plus for s in samples])
        W = np.linalg.lstsq(Z, Y, rcond=None)[0]          # (d, p), least-norm
        Q = rng.standard_normal((queries, Z.shape[1]))
        pred = f.evaluate(Q)
        ref = Q @ W
        err = np.linalg.norm(pred - ref, axis=1) / np.maximum(np.linalg.norm(ref, axis=1), 1e-300)
        worst = max(worst, float(err.max()))
        passed += int(np.all(err < tol))
    return CheckResult("linear-oracle", passed, systems, worst, tol)


def _interp_kernel(rng, d, p, L, split):
    kind = int(rng.integers(0, 5))
    if kind == 0:
        return ScalarLift(GaussianKernel(float(rng.uniform(0.7, 2.0))), p, d)
    if kind == 1:
        K = int(rng.integers(2, 5))
        return ScalarLift(FockKernel(tuple(rng.uniform(0.5, 2.0, K + 1)), K), p, d)
    if kind == 2:
        return ScalarLift(PolynomialKernel(int(rng.integers(2, 4))), p, d)
    if kind == 3:
        return DirectSum(ScalarLift(GaussianKernel(1.0), p), ScalarLift(LinearKernel(), p), split, d)
    # genuinely matrix-valued: Gaussian on inputs plus rank-one tanh features of the outputs
    return DirectSum(ScalarLift(GaussianKernel(1.2), p), RankOneFeature(feature_map("tanh", p)), split, d)


def _in_class_data(rng, kernel, d, n_centers, n_samples, scale=1.0):
    centers = scale * rng.standard_normal((n_centers, d))
    coefs = rng.standard_normal((n_centers, kernel.out_dim)) / np.sqrt(n_centers)
    f_star = KernelExpansion(kernel, centers, coefs)
    Z = scale * rng.standard_normal((n_samples, d))
    Y = f_star.evaluate(Z)
    return f_star, [RegressionSample(z, y, t) for t, (z, y) in enumerate(zip(Z, Y))]


def sigma_suite(seed=0, triples=200, psd_tol=1e-10, identity_tol=1e-7, zero_tol=1e-6) -> CheckResult:
    """Sigma is symmetric PSD; the norm-increment identity holds when it is
    positive definite; predictions are exact when it is zero."""
    rng = _rng(seed, 2)
    passed, worst = 0, 0.0
    classes = {"zero": 0, "positive-definite": 0, "singular-nonzero": 0}
    for i in range(triples):
        m = int(rng.integers(1, 3))
        L = 1
        split = m * (L + 1)
        N = int(rng.integers(2, 10))
        if i % 8 == 1:
            # linear on inputs, rank-one on outputs: a query whose input part is
            # in the data span leaves a rank-deficient nonzero Sigma
            p = 2
            d = split + p * L
            kernel = DirectSum(ScalarLift(LinearKernel(), p), RankOneFeature(feature_map("tanh", p)), split, d)
            f_star, samples = _in_class_data(rng, kernel, d, int(rng.integers(2, 8)), N, scale=0.8)
            z = 0.8 * rng.standard_normal(d)
            z[:split] = rng.standard_normal(N) @ np.array([s.z[:split] for s in samples])
        else:
            p = int(rng.integers(1, 3))
            d = split + p * L
            kernel = _interp_kernel(rng, d, p, L, split)
            f_star, samples = _in_class_data(rng, kernel, d, int(rng.integers(2, 8)), N, scale=0.8)
            if i % 4 == 0:
                # a query on the data: Sigma vanishes
                z = samples[int(rng.integers(0, N))].z
            else:
                z = 0.8 * rng.standard_normal(d)
        online = RegressionSample(z, f_star(z))
        rep = representer_check(samples, online, kernel)
        classes[rep.classification] += 1
        f = fit_min_norm(samples, kernel)
        cert = sigma_certificate(f, z)
        lam = np.linalg.eigvalsh(cert.sigma)
        asym = float(np.max(np.abs(cert.sigma - cert.sigma.T)))
        ok = lam[0] >= -psd_tol * max(lam[-1], 0.0) and asym == 0.0
        metric = 0.0
        if rep.classification == "positive-definite":
            norm_next = f.norm_squared + rep.norm_increment
            metric = rep.identity_residual / (1.0 + norm_next)
            ok = ok and metric < identity_tol
        elif rep.classification == "zero":
            y = online.y_plus
            metric = float(np.linalg.norm(y - rep.predicted) / (1.0 + np.linalg.norm(y)))
            ok = ok and metric < zero_tol
        worst = max(worst, metric)
        passed += int(ok)
    detail = ", ".join(f"{k}={v}" for k, v in classes.items())
    return CheckResult("sigma-certificate", passed, triples, worst, identity_tol, detail)


def _regression_system(rng, m, p, L, kernel_u, n_centers):
    """Random element ``f_star`` of the regression RKHS, scaled so that the
    recursion ``y[t+L] = f_star(z_t)`` stays bounded."""
    d = m * (L + 1) + p * L
    kernel = regression_kernel(kernel_u, m, p, L)
    centers = rng.uniform(-1, 1, (n_centers, d))
    coefs = rng.standard_normal((n_centers, p))
    # linear part acting on past outputs: sum_j v_j ybar_j^T
    ylin = coefs.T @ centers[:, m * (L + 1):]
    gain = np.linalg.norm(ylin, 2)
    if gain > 0.5:
        coefs *= 0.5 / gain
    return KernelExpansion(kernel, centers, coefs), kernel


def _simulate_regression(f, u, y0, L):
    T, m = u.shape
    p = f.kernel.out_dim
    y = np.zeros((T, p))
    y[:L] = y0
    for t in range(T - L):
        z = np.concatenate([u[t:t + L + 1].ravel(), y[t:t + L].ravel()])
        y[t + L] = f(z)
    return Trajectory(u, y)


def representer_bound(seed=0, scenarios=50, tol=1e-8) -> CheckResult:
    """``||f_{T+1}||^2 - ||f_T||^2 <= ||f_star||^2 - ||f_T||^2`` for explicit ``f_star``."""
    rng = _rng(seed, 3)
    passed, worst = 0, -np.inf
    for i in range(scenarios):
        m, p = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        L = int(rng.integers(1, 3))
        ku = GaussianKernel(1.0) if i % 2 == 0 else FockKernel((1.0,) * 4, 3)
        f_star, kernel = _regression_system(rng, m, p, L, ku, int(rng.integers(3, 10)))
        T = int(rng.integers(L + 5, L + 30))
        traj = _simulate_regression(f_star, rng.uniform(-1, 1, (T + 1, m)), rng.uniform(-1, 1, (L, p)), L)
        samples = build_regressors(traj, L)
        offline, online = samples[:-1], samples[-1]
        rep = representer_check(offline, online, kernel, f_star.norm_sq())
        excess = rep.norm_increment - rep.bound_slack
        worst = max(worst, excess)
        passed += int(excess <= tol)
    return CheckResult("representer-bound", passed, scenarios, float(worst), tol)


# ---------------------------------------------------------------- systems


def _observable_hammerstein(rng, n):
    m, p = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    psi2 = feature_map("identity", m) if rng.random() < 0.5 else feature_map("poly", m, 1)
    while True:
        mdl = random_ss(n, m, p, rng, phi=feature_map("tanh", m), x0_scale=1.0)
        mdl = StateSpaceModel(mdl.A, mdl.B, mdl.C, mdl.D, mdl.psi1, psi2, mdl.x0)
        if realization(mdl, n).observability_rank == n:
            return mdl


def ss_ar_conversion(seed=0, models=10, T=200, tol=1e-8) -> CheckResult:
    rng = _rng(seed, 4)
    passed, worst = 0, 0.0
    for i in range(models):
        n = 1 + i % 3
        mdl = _observable_hammerstein(rng, n)
        L = n + int(rng.integers(0, 2))
        ar = ss_to_ar(mdl, L)
        u = uniform_inputs(T, mdl.m, rng)
        ref, _ = simulate_ss(mdl, u)
        out = simulate_ar(ar, u, ref.y[:L])
        err = float(np.max(np.abs(out.y[L:] - ref.y[L:])))
        worst = max(worst, err)
        passed += int(err < tol)
    return CheckResult("ss-to-ar", passed, models, worst, tol)


# ---------------------------------------------------------------- subspace


def _trace_route_gram(kernel, U):
    # pairwise Tr kernel(u_i, u_j), one evaluation at a time
    T = U.shape[0]
    G = np.empty((T, T))
    for i in range(T):
        for j in range(T):
            G[i, j] = trace_inner(kernel, U[i], U[j])
    return G


def trace_identity(seed=0, T=40, L=3, n=2, tol=1e-12) -> CheckResult:
    """Gram matrices from ``Tr kernel`` equal explicit feature products."""
    rng = _rng(seed, 5)
    maps = []
    for m in (1, 2):
        maps += [feature_map("identity", m), feature_map("tanh", m), feature_map("poly", m, 2),
                 feature_map("poly", m, 3)]
    passed, worst = 0, 0.0
    for fm in maps:
        u = uniform_inputs(T, fm.in_dim, rng)
        for fmap in (fm, tabulate(fm, u)):
            kernel = RankOneFeature(fmap)
            traj = Trajectory(u, rng.standard_normal((T, 1)))
            data = build_past_future(traj, L, kernel)
            Hphi = hankel(fm(u), 2 * L)
            nc = data.ncols
            qL = fm.out_dim * L
            Up, Uf = Hphi[:qL, :nc], Hphi[qL:, :nc]
            G = _trace_route_gram(kernel, u)
            errs = [
                np.max(np.abs(data.Kpu - Up.T @ Up)),
                np.max(np.abs(data.Kfu - Uf.T @ Uf)),
                np.max(np.abs(shifted_gram(G, L, nc, 0) - Up.T @ Up)),
                np.max(np.abs(shifted_gram(G, L, nc, L) - Uf.T @ Uf)),
            ]
            H = hankel(fm(u), 2 * L + n)
            errs.append(np.max(np.abs(input_gram(traj, 2 * L + n, kernel) - H.T @ H)))
            e = float(max(errs))
            worst = max(worst, e)
            passed += int(e <= tol)
    return CheckResult("trace-identity", passed, 2 * len(maps), worst, tol)


def _well_posed_ss(rng, n, m, p, phi_name):
    """Random stable model whose L-step controllability/observability are
    not nearly singular."""
    while True:
        mdl = random_ss(n, m, p, rng, phi=feature_map(phi_name, m), x0_scale=1.0)
        R = realization(mdl, n + 1)
        sc = np.linalg.svd(R.controllability, compute_uv=False)
        so = np.linalg.svd(R.observability, compute_uv=False)
        if sc[n - 1] / sc[0] > 1e-2 and so[n - 1] / so[0] > 1e-2:
            return mdl


def subspace_scenarios(seed=0, T=300):
    """LTI and tabulated-tanh Hammerstein systems with ``n = 1, 2, 3``."""
    rng = _rng(seed, 6)
    out = []
    for phi_name in ("identity", "tanh"):
        for n in (1, 2, 3):
            m, p = (1, 1) if n < 3 else (2, 1)
            mdl = _well_posed_ss(rng, n, m, p, phi_name)
            L = n + 1
            u = uniform_inputs(T, m, rng)
            traj, X = simulate_ss(mdl, u)
            fmap = feature_map(phi_name, m)
            kernel = RankOneFeature(fmap if phi_name == "identity" else tabulate(fmap, u))
            out.append(dict(name=f"{phi_name}-n{n}", model=mdl, L=L, n=n, traj=traj, states=X,
                            kernel=kernel, live_kernel=RankOneFeature(fmap), rng=rng))
    return out


def state_factorization(seed=0, tol=1e-6, scenarios=None) -> CheckResult:
    scenarios = subspace_scenarios(seed) if scenarios is None else scenarios
    passed, worst = 0, 0.0
    for sc in scenarios:
        L, n, traj = sc["L"], sc["n"], sc["traj"]
        rank, ok_rank = input_rank_check(traj, L, n, sc["kernel"])
        data = build_past_future(traj, L, sc["kernel"])
        res = recover_states(data, order=n)
        Xf = sc["states"][L:traj.T - L + 1].T
        O = realization(sc["model"], L).observability
        fac = float(np.linalg.norm(res.pi - O @ Xf) / np.linalg.norm(res.pi))
        Tsim = np.linalg.lstsq(res.states.T, Xf.T, rcond=None)[0].T
        sim = float(np.linalg.norm(Xf - Tsim @ res.states) / np.linalg.norm(Xf))
        rk = numerical_rank(res.pi)
        worst = max(worst, fac, sim)
        passed += int(ok_rank and rk == n and fac < tol and sim < tol)
    return CheckResult("state-factorization", passed, len(scenarios), worst, tol)


def route_equivalence(seed=0, tol=1e-6, scenarios=None) -> CheckResult:
    scenarios = subspace_scenarios(seed) if scenarios is None else scenarios
    passed, worst = 0, 0.0
    for sc in scenarios:
        data = build_past_future(sc["traj"], sc["L"], sc["kernel"])
        a = recover_states(data, order=sc["n"], route="svd", rank_check=False)
        b = recover_states(data, order=sc["n"], route="eigen", rank_check=False)
        ang = float(np.max(subspace_angles(a.observability, b.observability)))
        worst = max(worst, ang)
        passed += int(ang < tol)
    return CheckResult("route-equivalence", passed, len(scenarios), worst, tol)


def membership(seed=0, valid=100, perturbed=100, tol=1e-6, pred_tol=1e-6, scenarios=None) -> CheckResult:
    """Valid candidates accepted, output-perturbed ones rejected, predictor exact."""
    scenarios = subspace_scenarios(seed) if scenarios is None else scenarios
    rng = _rng(seed, 7)
    datas = [build_past_future(sc["traj"], sc["L"], sc["live_kernel"]) for sc in scenarios]
    acc = rej = good_pred = 0
    worst = 0.0
    for i in range(valid):
        k = i % len(scenarios)
        sc, data = scenarios[k], datas[k]
        mdl, L = sc["model"], sc["L"]
        fresh = StateSpaceModel(mdl.A, mdl.B, mdl.C, mdl.D, mdl.psi1, mdl.psi2, rng.standard_normal(mdl.n))
        cand, _ = simulate_ss(fresh, uniform_inputs(2 * L, mdl.m, rng))
        v = membership_test(data, cand)
        worst = max(worst, v.past_residual, v.future_residual)
        acc += int(v.feasible)
        pr = subspace_predict(data, cand.window(0, L), cand.u[L:])
        good_pred += int(np.max(np.abs(pr.y_hat - cand.y[L:])) < pred_tol)
    for i in range(perturbed):
        k = i % len(scenarios)
        sc, data = scenarios[k], datas[k]
        mdl, L = sc["model"], sc["L"]
        fresh = StateSpaceModel(mdl.A, mdl.B, mdl.C, mdl.D, mdl.psi1, mdl.psi2, rng.standard_normal(mdl.n))
        cand, _ = simulate_ss(fresh, uniform_inputs(2 * L, mdl.m, rng))
        rms = float(np.sqrt(np.mean(sc["traj"].y ** 2)))
        y = cand.y.copy()
        t, j = int(rng.integers(0, 2 * L)), int(rng.integers(0, mdl.p))
        y[t, j] += (1e-2 * rms) * (1 if rng.random() < 0.5 else -1)
        v = membership_test(data, Trajectory(cand.u, y))
        rej += int(not v.feasible)
    total = valid + perturbed + valid
    detail = f"accepted={acc}/{valid}, rejected={rej}/{perturbed}, predictions={good_pred}/{valid}"
    return CheckResult("membership", acc + rej + good_pred, total, worst, tol, detail)


def fundamental_lemma(seed=0, systems=6, tol_in=1e-8, tol_out=1e-2) -> CheckResult:
    """Depth-L Hankel columns of fresh LTI trajectories lie in the data
    Hankel's column space; random vectors do not."""
    rng = _rng(seed, 8)
    passed, worst = 0, 0.0
    for i in range(systems):
        n = 2 + i % 2
        m, p = 1 + i % 2, 1 + (i // 2) % 2
        L = n + int(rng.integers(2, 4))
        mdl = _well_posed_ss(rng, n, m, p, "identity")
        T = 250
        while True:
            u = uniform_inputs(T, m, rng)
            if is_pe(u, L + n):
                break
        data, _ = simulate_ss(mdl, u)
        H = hankel(data.w, L)
        fresh_mdl = StateSpaceModel(mdl.A, mdl.B, mdl.C, mdl.D, mdl.psi1, x0=rng.standard_normal(n))
        fresh, _ = simulate_ss(fresh_mdl, uniform_inputs(40, m, rng))
        r_in = float(np.max(colspace_residual(H, hankel(fresh.w, L))))
        r_out = colspace_residual(H, rng.standard_normal(L * (m + p)))
        worst = max(worst, r_in)
        passed += int(r_in < tol_in and r_out > tol_out)
    return CheckResult("fundamental-lemma", passed, systems, worst, tol_in)


def determinism(seed=0) -> CheckResult:
    from .io import dumps
    a = dumps(asdict(linear_oracle(seed, systems=3)))
    b = dumps(asdict(linear_oracle(seed, systems=3)))
    return CheckResult("determinism", int(a == b), 1, 0.0, 0.0)


CHECKS: Dict[str, Callable[..., CheckResult]] = {
    "linear-oracle": linear_oracle,
    "sigma-certificate": sigma_suite,
    "representer-bound": representer_bound,
    "ss-to-ar": ss_ar_conversion,
    "trace-identity": trace_identity,
    "state-factorization": state_factorization,
    "route-equivalence": route_equivalence,
    "membership": membership,
    "fundamental-lemma": fundamental_lemma,
    "determinism": determinism,
}


def run_checks(seed: int = 0, only: Optional[List[str]] = None) -> dict:
    """Run the suite; returns a JSON-ready summary with an overall ``ok`` flag."""
    names = list(CHECKS) if not only else only
    results = []
    for name in names:
        if name not in CHECKS:
            raise KeyError(name)
        results.append(CHECKS[name](seed))
    return {
        "seed": seed,
        "ok": all(r.ok for r in results),
        "checks": [dict(asdict(r), ok=r.ok) for r in results],
    }
