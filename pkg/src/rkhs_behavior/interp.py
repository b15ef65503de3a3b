"""Minimum-norm interpolation in a vector-valued RKHS.

Given regression samples ``(z_j, y_j)`` the interpolator is
``f_N = sum_j kernel(., z_j) v_j`` with ``v = pinv(K_N) Y_N``.  The matrix
``Sigma_N(z) = kernel(z, z) - k_N(z) pinv(K_N) k_N(z)^T`` certifies whether
a new regression vector can be predicted exactly (``Sigma == 0``) and, when
it is positive definite, links the weighted prediction error to the growth
of the interpolator norm.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, ShapeError
from .kernels import DirectSum, KernelExpansion, LinearKernel, OperatorKernel, ScalarKernel, ScalarLift
from .linalg import DEFAULT_POLICY, RankPolicy, eig_sym, pinv
from .systems import Trajectory

__all__ = [
    "RegressionSample",
    "Interpolator",
    "SigmaCertificate",
    "RepresenterReport",
    "regression_kernel",
    "build_regressors",
    "stack_samples",
    "fit_min_norm",
    "predict",
    "sigma_certificate",
    "representer_check",
    "interp_norm_sq",
]

EPS_SIGMA = 1e-8
FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class RegressionSample:
    z: np.ndarray
    y_plus: np.ndarray
    t: int = 0


def regression_kernel(input_kernel, m: int, p: int, L: int,
                      output_kernel: Optional[OperatorKernel] = None) -> DirectSum:
    """Kernel on regression vectors: ``input_kernel`` on the input window
    plus (by default) the linear kernel on the past outputs, both lifted to
    ``R^p``."""
    if isinstance(input_kernel, ScalarKernel):
        input_kernel = ScalarLift(input_kernel, p)
    if output_kernel is None:
        output_kernel = ScalarLift(LinearKernel(), p)
    d = m * (L + 1) + p * L
    return DirectSum(input_kernel, output_kernel, split=m * (L + 1), in_dim=d)


def build_regressors(traj: Trajectory, L: int) -> List[RegressionSample]:
    """Samples ``z_t = [u_t..u_{t+L}, y_t..y_{t+L-1}]`` with target ``y_{t+L}``."""
    if L < 1:
        raise InsufficientDataError("lag L must be >= 1")
    if traj.T <= L:
        raise InsufficientDataError(f"need T > L, got T={traj.T}, L={L}")
    out = []
    for t in range(traj.T - L):
        z = np.concatenate([traj.u[t:t + L + 1].ravel(), traj.y[t:t + L].ravel()])
        out.append(RegressionSample(z, traj.y[t + L].copy(), traj.t0 + t))
    return out


def stack_samples(samples: Sequence[RegressionSample]):
    Z = np.array([s.z for s in samples], dtype=float)
    Y = np.array([np.atleast_1d(s.y_plus) for s in samples], dtype=float)
    return Z, Y


@dataclass
class Interpolator(KernelExpansion):
    """Minimum-norm interpolant with cached Gram data.

    ``targets`` are the training outputs ``(N, p)``; ``residual`` is the
    relative training residual ``||K v - Y|| / ||Y||`` and ``feasible`` is
    False when it exceeds the feasibility tolerance, meaning the targets are
    not reachable by any RKHS element under the active rank policy.
    """

    gram: np.ndarray = field(default=None, repr=False)
    gram_pinv: np.ndarray = field(default=None, repr=False)
    targets: np.ndarray = field(default=None, repr=False)
    residual: float = 0.0
    feasible: bool = True
    norm_squared: float = 0.0
    policy: RankPolicy = DEFAULT_POLICY

    @property
    def condition_number(self) -> float:
        s = np.linalg.svd(self.gram, compute_uv=False)
        return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def fit_min_norm(samples: Sequence[RegressionSample], kernel: OperatorKernel,
                 policy: RankPolicy = DEFAULT_POLICY, tol: float = FEASIBILITY_TOL) -> Interpolator:
    if len(samples) == 0:
        raise InsufficientDataError("need at least one sample")
    Z, Y = stack_samples(samples)
    if Y.shape[1] != kernel.out_dim:
        raise ShapeError(f"targets have dimension {Y.shape[1]}, kernel outputs {kernel.out_dim}")
    K = kernel.gram(Z)
    Kp = pinv(K, policy)
    yv = Y.ravel()
    v = Kp @ yv
    ny = np.linalg.norm(yv)
    res = np.linalg.norm(K @ v - yv)
    rel = float(res / ny) if ny > 0 else float(res)
    return Interpolator(
        kernel, Z, v.reshape(Y.shape),
        gram=K, gram_pinv=Kp, targets=Y,
        residual=rel, feasible=rel <= tol,
        norm_squared=max(float(v @ K @ v), 0.0),
        policy=policy,
    )


def predict(interp: Interpolator, z) -> np.ndarray:
    """``k_N(z) pinv(K_N) Y_N``."""
    return interp(z)


def interp_norm_sq(interp: KernelExpansion) -> float:
    """Squared RKHS norm ``v' K v`` clamped at zero."""
    return interp.norm_sq()


@dataclass
class SigmaCertificate:
    sigma: np.ndarray
    classification: str        # "zero" | "positive-definite" | "singular-nonzero"
    eig_min: float
    eig_max: float

    @property
    def is_zero(self) -> bool:
        return self.classification == "zero"


def _classify(sigma: np.ndarray, scale: float, eps: float):
    lam, _ = eig_sym(sigma)
    lmax, lmin = float(lam[0]), float(lam[-1])
    if lmax <= eps * scale or scale <= 0:
        cls = "zero"
    elif lmin > eps * lmax:
        cls = "positive-definite"
    else:
        cls = "singular-nonzero"
    return cls, lmin, lmax


def sigma_certificate(interp: Interpolator, z, eps: float = EPS_SIGMA) -> SigmaCertificate:
    """``Sigma_N(z) = kernel(z, z) - k_N(z) pinv(K_N) k_N(z)'`` and its
    zero / positive-definite / singular classification.

    ``Sigma`` is the Schur complement of the augmented Gram matrix of the
    centers and ``z``.  It is evaluated from a factor ``R R'`` of that
    matrix as the squared residual of ``z``'s rows after projection onto
    the centers' rows, which keeps it symmetric PSD even when ``K_N`` is
    badly conditioned.  The rank cut of ``pinv(K_N)`` carries over through
    the squared singular values of the centers' factor.

    ``Sigma`` counts as zero when its largest eigenvalue is at most ``eps``
    times the largest eigenvalue of ``kernel(z, z)``.
    """
    kzz = interp.kernel(z, z)
    k = interp.kernel.row(z, interp.centers)
    M = np.block([[interp.gram, k.T], [k, kzz]])
    lam, V = np.linalg.eigh(0.5 * (M + M.T))
    R = V * np.sqrt(np.clip(lam, 0.0, None))
    n = interp.gram.shape[0]
    Rk, Rz = R[:n], R[n:]
    _, s, Wt = np.linalg.svd(Rk, full_matrices=False)
    r = interp.policy.rank(s ** 2)
    W1 = Wt[:r].T
    E = Rz.T - W1 @ (W1.T @ Rz.T)
    sigma = E.T @ E
    scale = float(np.max(np.linalg.eigvalsh(0.5 * (kzz + kzz.T))))
    cls, lmin, lmax = _classify(sigma, scale, eps)
    return SigmaCertificate(sigma, cls, lmin, lmax)


@dataclass
class RepresenterReport:
    """Outcome of checking one online sample against offline data.

    ``weighted_error_sq`` is ``||Sigma^{-1/2}(y - y_hat)||^2`` (with
    ``pinv(Sigma)`` for singular ``Sigma``), ``norm_increment`` is
    ``||f_{N+1}||^2 - ||f_N||^2`` and ``identity_residual`` the absolute
    gap between them.  ``bound_slack`` is ``||f_star||^2 - ||f_N||^2`` when
    the ground-truth norm is known; the bound holds when
    ``norm_increment <= bound_slack`` up to tolerance.
    """

    predicted: np.ndarray
    actual: Optional[np.ndarray]
    weighted_error_sq: Optional[float]
    norm_increment: Optional[float]
    identity_residual: Optional[float]
    classification: str
    bound_slack: Optional[float] = None
    prediction_error_sq: Optional[float] = None
    kernel_component_sq: Optional[float] = None
    feasible: bool = True
    extension: bool = False
    gram_condition: Optional[float] = None
    sigma_eigs: tuple = ()

    def to_dict(self) -> dict:
        def arr(x):
            return None if x is None else [float(v) for v in np.ravel(x)]
        return {
            "predicted": arr(self.predicted),
            "actual": arr(self.actual),
            "weighted_error_sq": self.weighted_error_sq,
            "norm_increment": self.norm_increment,
            "identity_residual": self.identity_residual,
            "classification": self.classification,
            "bound_slack": self.bound_slack,
            "prediction_error_sq": self.prediction_error_sq,
            "kernel_component_sq": self.kernel_component_sq,
            "feasible": self.feasible,
            "extension": self.extension,
            "gram_condition": self.gram_condition,
            "sigma_eig_min": self.sigma_eigs[0] if self.sigma_eigs else None,
            "sigma_eig_max": self.sigma_eigs[1] if self.sigma_eigs else None,
        }


def representer_check(offline: Sequence[RegressionSample], online: RegressionSample,
                      kernel: OperatorKernel, f_star_norm_sq: Optional[float] = None,
                      policy: RankPolicy = DEFAULT_POLICY, eps: float = EPS_SIGMA,
                      tol: float = FEASIBILITY_TOL, base: Optional[Interpolator] = None,
                      ) -> RepresenterReport:
    """Predict ``online`` from ``offline`` and evaluate the error certificate.

    ``base`` may carry an interpolator already fitted on ``offline``.
    """
    if len(offline) == 0:
        raise InsufficientDataError("offline data must be nonempty")
    f_N = fit_min_norm(offline, kernel, policy, tol) if base is None else base
    f_N1 = fit_min_norm(list(offline) + [online], kernel, policy, tol)
    cert = sigma_certificate(f_N, online.z, eps)
    y_hat = f_N(online.z)
    y = np.atleast_1d(np.asarray(online.y_plus, float))
    r = y - y_hat
    inc = f_N1.norm_squared - f_N.norm_squared

    if cert.classification == "zero":
        weighted = 0.0
        kernel_part = float(r @ r)
    elif cert.classification == "positive-definite":
        weighted = float(r @ np.linalg.solve(cert.sigma, r))
        kernel_part = 0.0
    else:
        # outside the two cases of the theory: Moore-Penrose weighting plus
        # the component of the error in the null space of Sigma
        lam, V = eig_sym(cert.sigma)
        keep = lam > eps * max(lam[0], 0.0)
        c = V.T @ r
        weighted = float(np.sum(c[keep] ** 2 / lam[keep]))
        kernel_part = float(np.sum(c[~keep] ** 2))

    return RepresenterReport(
        predicted=y_hat,
        actual=y,
        weighted_error_sq=weighted,
        norm_increment=float(inc),
        identity_residual=abs(float(inc) - weighted),
        classification=cert.classification,
        bound_slack=None if f_star_norm_sq is None else float(f_star_norm_sq - f_N.norm_squared),
        prediction_error_sq=float(r @ r),
        kernel_component_sq=kernel_part,
        feasible=bool(f_N.feasible and f_N1.feasible),
        extension=cert.classification == "singular-nonzero",
        gram_condition=f_N.condition_number,
        sigma_eigs=(cert.eig_min, cert.eig_max),
    )
