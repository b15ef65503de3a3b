"""Kernelized subspace identification for Hammerstein systems
``x+ = A x + B phi(u)``, ``y = C x + D phi(u)``.

Input data only ever enter through Gram matrices of the rank-one feature
kernel ``phi(u) phi(u')^T``, via ``Tr kernel(u, u') = <phi(u), phi(u')>``.
Outputs enter through the Hankel blocks ``Y_p`` and ``Y_f`` directly.
"""
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import ContractError, DegenerateDataError, InsufficientDataError, ShapeError
from .kernels import OperatorKernel, RankOneFeature
from .linalg import DEFAULT_POLICY, RankPolicy, eig_sym, hankel, numerical_rank, pinv, svd_trunc
from .systems import Trajectory

__all__ = [
    "PastFutureData",
    "SubspaceResult",
    "MembershipVerdict",
    "SubspacePrediction",
    "shifted_gram",
    "build_past_future",
    "input_gram",
    "input_rank_check",
    "oblique_pi",
    "estimate_order",
    "recover_states",
    "membership_test",
    "subspace_predict",
]

MEMBERSHIP_TOL = 1e-6
ORDER_GAP = 1e-4


def _require_rank_one(kernel):
    if not isinstance(kernel, RankOneFeature):
        raise ContractError("subspace identification needs a rank-one feature kernel")


def shifted_gram(G: np.ndarray, depth: int, ncols: int, offset: int = 0,
                 offset2: Optional[int] = None) -> np.ndarray:
    """``K[i, j] = sum_{k<depth} G[offset+i+k, offset2+j+k]`` for ``i, j < ncols``.

    With ``G`` the pairwise trace-kernel matrix this is the Gram matrix of a
    depth-``depth`` block Hankel of features.
    """
    offset2 = offset if offset2 is None else offset2
    K = np.zeros((ncols, ncols))
    for k in range(depth):
        K += G[offset + k: offset + k + ncols, offset2 + k: offset2 + k + ncols]
    return K


@dataclass
class PastFutureData:
    """Past/future Hankel blocks and Gram matrices of an offline trajectory."""

    traj: Trajectory
    L: int
    kernel: RankOneFeature
    Yp: np.ndarray
    Yf: np.ndarray
    Kpu: np.ndarray
    Kfu: np.ndarray
    Kpy: np.ndarray
    Kfy: np.ndarray
    policy: RankPolicy = DEFAULT_POLICY

    @property
    def ncols(self) -> int:
        return self.Yp.shape[1]

    @property
    def Kbar_p(self) -> np.ndarray:
        return self.Kpu + self.Kpy

    @property
    def Kbar_pf(self) -> np.ndarray:
        return self.Kpu + self.Kpy + self.Kfu

    # both pseudoinverses depend on the offline data only; cached for repeated queries
    @cached_property
    def stacked(self) -> np.ndarray:
        return np.vstack([self.Kpu, self.Kpy, self.Kfu])

    @cached_property
    def stacked_pinv(self) -> np.ndarray:
        return pinv(self.stacked, self.policy)

    @cached_property
    def readout(self) -> np.ndarray:
        return pinv(self.Yf.T, self.policy)


def build_past_future(traj: Trajectory, L: int, kernel: OperatorKernel,
                      policy: RankPolicy = DEFAULT_POLICY) -> PastFutureData:
    _require_rank_one(kernel)
    if L < 1:
        raise InsufficientDataError("L must be >= 1")
    T = traj.T
    if T < 2 * L + 1:
        raise InsufficientDataError(f"need T >= 2L+1 = {2 * L + 1}, got {T}")
    if traj.m != kernel.in_dim:
        raise ShapeError(f"kernel acts on inputs of dimension {kernel.in_dim}, data has {traj.m}")
    nc = T - 2 * L + 1
    G = kernel.trace_gram(traj.u)
    Yh = hankel(traj.y, 2 * L)[:, :nc]
    pL = traj.p * L
    Yp, Yf = Yh[:pL], Yh[pL:]
    return PastFutureData(
        traj=traj, L=L, kernel=kernel, Yp=Yp, Yf=Yf,
        Kpu=shifted_gram(G, L, nc, 0),
        Kfu=shifted_gram(G, L, nc, L),
        Kpy=Yp.T @ Yp,
        Kfy=Yf.T @ Yf,
        policy=policy,
    )


def input_gram(traj: Trajectory, depth: int, kernel: OperatorKernel) -> np.ndarray:
    """Gram matrix of the depth-``depth`` Hankel of ``phi(u)`` via trace kernels."""
    _require_rank_one(kernel)
    if traj.T < depth:
        raise InsufficientDataError(f"need T >= {depth}, got {traj.T}")
    G = kernel.trace_gram(traj.u)
    return shifted_gram(G, depth, traj.T - depth + 1, 0)


def input_rank_check(traj: Trajectory, L: int, n: int, kernel: OperatorKernel,
                     policy: RankPolicy = DEFAULT_POLICY) -> Tuple[int, bool]:
    """Numerical rank of the depth-``(2L+n)`` input Gram and whether it
    equals ``(2L+n) q``."""
    depth = 2 * L + n
    if traj.T < depth:
        raise InsufficientDataError(f"need T >= 2L+n = {depth}, got {traj.T}")
    q = kernel.out_dim
    ncols = traj.T - depth + 1
    if depth * q > ncols:
        warnings.warn(
            f"rank {depth * q} is unreachable with {ncols} Hankel columns; "
            f"a longer trajectory is needed", RuntimeWarning, stacklevel=2,
        )
    Ku = input_gram(traj, depth, kernel)
    r = numerical_rank(Ku, policy)
    return r, r == depth * q


def oblique_pi(data: PastFutureData) -> np.ndarray:
    """``Pi = Y_f pinv(Kbar_pf) Kbar_p``: oblique projection of ``Y_f`` onto
    the past along the future inputs."""
    return data.Yf @ pinv(data.Kbar_pf, data.policy) @ data.Kbar_p


@dataclass
class SubspaceResult:
    pi: np.ndarray
    order: int
    observability: np.ndarray     # (pL, order)
    states: np.ndarray            # (order, ncols)
    singular_values: np.ndarray   # full spectrum of pi, descending
    route: str = "svd"
    input_rank: Optional[int] = None
    input_rank_required: Optional[int] = None

    @property
    def input_rank_satisfied(self) -> Optional[bool]:
        if self.input_rank is None:
            return None
        return self.input_rank == self.input_rank_required

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "route": self.route,
            "singular_values": [float(s) for s in self.singular_values],
            "observability": self.observability.tolist(),
            "input_rank": self.input_rank,
            "input_rank_required": self.input_rank_required,
            "input_rank_satisfied": self.input_rank_satisfied,
            "pi_shape": list(self.pi.shape),
            "factor_residual": float(
                np.linalg.norm(self.pi - self.observability @ self.states)
                / max(np.linalg.norm(self.pi), np.finfo(float).tiny)
            ),
        }


def estimate_order(s: np.ndarray, policy: RankPolicy = DEFAULT_POLICY, gap: float = ORDER_GAP) -> int:
    """Order from the largest drop in log singular values.

    Only drops with ``s[k+1] / s[k] < gap`` count; without one the
    numerical rank under ``policy`` is returned.
    """
    s = np.asarray(s, float)
    r = policy.rank(s) if s.size else 0
    if r == 0:
        return 0
    ratios = np.empty(s.size - 1) if s.size > 1 else np.empty(0)
    for k in range(s.size - 1):
        ratios[k] = s[k + 1] / s[k] if s[k] > 0 else 1.0
    cand = np.flatnonzero(ratios < gap)
    if cand.size == 0:
        return r
    k = cand[np.argmin(ratios[cand])]
    return int(k + 1)


def recover_states(data: PastFutureData, order: Optional[int] = None, route: str = "svd",
                   rank_check: bool = True) -> SubspaceResult:
    """Observability matrix and future state sequence, up to similarity.

    ``route="svd"`` factors ``Pi`` directly; ``route="eigen"`` goes through
    the eigendecompositions of ``Pi' Pi`` and ``Gamma K_f^y`` built from Gram
    matrices only.
    """
    pol = data.policy
    Pi = oblique_pi(data)
    s_all = np.linalg.svd(Pi, compute_uv=False)
    if s_all.size == 0 or s_all[0] <= 0 or pol.rank(s_all) == 0:
        raise DegenerateDataError("oblique projection is zero; the data carry no state information")
    n = estimate_order(s_all, pol) if order is None else int(order)
    if n < 1:
        raise DegenerateDataError("estimated order is 0")
    if n > pol.rank(s_all):
        raise DegenerateDataError(f"requested order {n} exceeds the numerical rank of Pi")

    if route == "svd":
        U1, s1, V1 = svd_trunc(Pi, RankPolicy("fixed", fixed_rank=n))
        sq = np.sqrt(s1)
        O = U1 * sq
        X = (V1 * sq).T
    elif route == "eigen":
        O, X = _eigen_route(data, n)
    else:
        raise ContractError(f"unknown route {route!r}")

    rank = required = None
    if rank_check:
        q = data.kernel.out_dim
        depth = 2 * data.L + n
        if data.traj.T >= depth and depth * q <= data.traj.T - depth + 1:
            rank, _ = input_rank_check(data.traj, data.L, n, data.kernel, pol)
            required = depth * q
    return SubspaceResult(Pi, n, O, X, s_all, route, rank, required)


def _eigen_route(data: PastFutureData, n: int):
    pol = data.policy
    Kpf_inv = pinv(data.Kbar_pf, pol)
    Kp = data.Kbar_p
    PtP = Kp.T @ Kpf_inv @ data.Kfy @ Kpf_inv @ Kp
    lam, V = eig_sym(PtP)
    lam, V = lam[:n], V[:, :n]
    if np.any(lam <= 0):
        raise DegenerateDataError("non-positive eigenvalue among the leading n")
    sigma = np.sqrt(lam)
    Gamma = Kpf_inv @ Kp @ Kp.T @ Kpf_inv
    mu, Xi = np.linalg.eig(Gamma @ data.Kfy)
    idx = np.argsort(-mu.real, kind="stable")[:n]
    Xi = Xi[:, idx].real
    U = data.Yf @ Xi
    U /= np.linalg.norm(U, axis=0)
    # the two eigenproblems fix u_i and v_i only up to sign; align with Pi
    Pi = data.Yf @ Kpf_inv @ Kp
    signs = np.sign(np.einsum("ij,ij->j", U, Pi @ V))
    signs[signs == 0] = 1.0
    U *= signs
    sq = np.sqrt(sigma)
    return U * sq, (V * sq).T


@dataclass
class MembershipVerdict:
    feasible: bool
    xi: np.ndarray
    past_residual: float
    future_residual: float
    predicted: np.ndarray    # (L, p)
    threshold: float = MEMBERSHIP_TOL

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "past_residual": self.past_residual,
            "future_residual": self.future_residual,
            "threshold": self.threshold,
            "predicted": self.predicted.tolist(),
            "xi": [float(v) for v in self.xi],
        }


class SubspacePrediction(NamedTuple):
    y_hat: np.ndarray      # (L, p)
    residual: float        # relative residual of the stacked past/future-input system
    xi: np.ndarray


def _kernel_vectors(data: PastFutureData, u_c: np.ndarray, kernel):
    L, nc = data.L, data.ncols
    G = kernel.trace_gram(data.traj.u, u_c)     # (T, 2L)
    kpu = np.zeros(nc)
    kfu = np.zeros(nc)
    for r in range(L):
        kpu += G[r:r + nc, r]
        kfu += G[L + r:L + r + nc, L + r]
    return kpu, kfu


def _rel(res, ref):
    ref = float(np.linalg.norm(ref))
    res = float(np.linalg.norm(res))
    return res / ref if ref > 0 else res


def _solve_stacked(data: PastFutureData, kpu, kpy, kfu):
    b = np.concatenate([kpu, kpy, kfu])
    xi = data.stacked_pinv @ b
    return xi, _rel(data.stacked @ xi - b, b)


def _predict_future(data: PastFutureData, xi):
    y = data.readout @ (data.Kfy @ xi)
    return y.reshape(data.L, data.traj.p)


def membership_test(data: PastFutureData, candidate: Trajectory,
                    kernel: Optional[OperatorKernel] = None,
                    tol: float = MEMBERSHIP_TOL) -> MembershipVerdict:
    """Decide whether a length-``2L`` trajectory belongs to the system that
    generated the offline data."""
    kernel = data.kernel if kernel is None else kernel
    _require_rank_one(kernel)
    L = data.L
    if candidate.T != 2 * L:
        raise ShapeError(f"candidate must have length 2L={2 * L}, got {candidate.T}")
    if candidate.m != data.traj.m or candidate.p != data.traj.p:
        raise ShapeError("candidate dimensions differ from the offline data")
    kpu, kfu = _kernel_vectors(data, candidate.u, kernel)
    kpy = data.Yp.T @ candidate.y[:L].ravel()
    kfy = data.Yf.T @ candidate.y[L:].ravel()
    xi, past = _solve_stacked(data, kpu, kpy, kfu)
    future = _rel(data.Kfy @ xi - kfy, kfy)
    return MembershipVerdict(
        feasible=bool(past <= tol and future <= tol),
        xi=xi, past_residual=past, future_residual=future,
        predicted=_predict_future(data, xi), threshold=tol,
    )


def subspace_predict(data: PastFutureData, past: Trajectory, future_u,
                     kernel: Optional[OperatorKernel] = None) -> SubspacePrediction:
    """Predict ``y[L..2L-1]`` from a length-``L`` past and the future inputs."""
    kernel = data.kernel if kernel is None else kernel
    _require_rank_one(kernel)
    L = data.L
    future_u = np.asarray(future_u, float).reshape(-1, data.traj.m)
    if past.T != L or future_u.shape[0] != L:
        raise ShapeError(f"past and future segments must both have length L={L}")
    if past.m != data.traj.m or past.p != data.traj.p:
        raise ShapeError("past segment dimensions differ from the offline data")
    u_c = np.vstack([past.u, future_u])
    kpu, kfu = _kernel_vectors(data, u_c, kernel)
    kpy = data.Yp.T @ past.y.ravel()
    xi, res = _solve_stacked(data, kpu, kpy, kfu)
    return SubspacePrediction(_predict_future(data, xi), res, xi)
