"""Reference simulators and exact model conversions.

Two model families are covered:

* autoregressive models ``y[t+L] + sum_k A_k y[t+L-k] = g(u[t:t+L+1])``
  (:class:`ARModel`), where ``g`` acts on the flattened input window
  ``[u_t; ...; u_{t+L}]``;
* Hammerstein state-space models ``x+ = A x + B psi1(u)``,
  ``y = C x + D psi2(u)`` (:class:`StateSpaceModel`).

:func:`ss_to_ar` turns an observable instance of the second family into an
equivalent member of the first.
"""
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, DimensionError, InsufficientDataError, ObservabilityError, ShapeError
from .kernels import FeatureMap, LinearKernel, ScalarLift, feature_map
from .linalg import DEFAULT_POLICY, RankPolicy, as_sequence, numerical_rank, pinv

__all__ = [
    "Trajectory",
    "ARModel",
    "StateSpaceModel",
    "RealizationMatrices",
    "VolterraFunction",
    "simulate_ar",
    "simulate_ss",
    "eval_volterra",
    "realization",
    "ss_to_ar",
    "make_lti_ar",
    "uniform_inputs",
    "random_ss",
]


@dataclass
class Trajectory:
    """Input/output samples ``u[0..T-1]`` (``(T, m)``) and ``y[0..T-1]`` (``(T, p)``)."""

    u: np.ndarray
    y: np.ndarray
    t0: int = 0

    def __post_init__(self):
        self.u = as_sequence(self.u)
        self.y = as_sequence(self.y)
        if self.u.shape[0] != self.y.shape[0]:
            raise ShapeError(
                f"input and output lengths differ ({self.u.shape[0]} vs {self.y.shape[0]})"
            )
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.y))):
            raise ContractError("trajectory contains non-finite values")

    @property
    def T(self) -> int:
        return self.u.shape[0]

    @property
    def m(self) -> int:
        return self.u.shape[1]

    @property
    def p(self) -> int:
        return self.y.shape[1]

    def __len__(self):
        return self.T

    def window(self, start: int, length: int) -> "Trajectory":
        if start < 0 or start + length > self.T:
            raise DimensionError(f"window [{start}, {start + length}) outside [0, {self.T})")
        return Trajectory(self.u[start:start + length], self.y[start:start + length], self.t0 + start)

    @property
    def w(self) -> np.ndarray:
        """Stacked signal ``w_t = [u_t; y_t]``."""
        return np.hstack([self.u, self.y])


@dataclass
class ARModel:
    """Autoregressive model ``y[t+L] = -sum_k A_k y[t+L-k] + g(u[t..t+L])``.

    ``A`` has shape ``(L, p, p)`` with ``A[k-1] = A_k``.  ``g`` maps the
    flattened window of ``L + 1`` inputs (oldest first) to ``R^p``.
    """

    A: np.ndarray
    g: Callable[[np.ndarray], np.ndarray]
    m: int
    kernel: Optional[object] = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 1:
            A = A[:, None, None]
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ShapeError(f"A must be (L, p, p), got {A.shape}")
        if A.shape[0] < 1:
            raise ContractError("lag L must be >= 1")
        self.A = A

    @property
    def lag(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[1]

    def forcing(self, u_window) -> np.ndarray:
        return np.asarray(self.g(np.asarray(u_window, float).ravel()), dtype=float).reshape(self.p)


@dataclass
class StateSpaceModel:
    """Hammerstein state-space model.

    ``psi2`` defaults to ``psi1``, which gives the single-nonlinearity form
    ``x+ = A x + B phi(u)``, ``y = C x + D phi(u)``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    psi1: FeatureMap
    psi2: Optional[FeatureMap] = None
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, float))
        self.B = np.atleast_2d(np.asarray(self.B, float))
        self.C = np.atleast_2d(np.asarray(self.C, float))
        self.D = np.atleast_2d(np.asarray(self.D, float))
        if self.psi2 is None:
            self.psi2 = self.psi1
        n = self.A.shape[0]
        if n < 1 or self.A.shape != (n, n):
            raise ShapeError(f"A must be square with n >= 1, got {self.A.shape}")
        q = self.B.shape[1]
        p = self.C.shape[0]
        if self.B.shape[0] != n or self.C.shape[1] != n or self.D.shape != (p, q):
            raise ShapeError(
                f"incompatible shapes A{self.A.shape} B{self.B.shape} C{self.C.shape} D{self.D.shape}"
            )
        for psi in (self.psi1, self.psi2):
            if psi.out_dim != q:
                raise ShapeError(f"feature map {psi.name} has output dim {psi.out_dim}, B expects {q}")
        if self.psi1.in_dim != self.psi2.in_dim:
            raise ShapeError("psi1 and psi2 must share the input dimension")
        self.x0 = np.zeros(n) if self.x0 is None else np.asarray(self.x0, float).reshape(n)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.psi1.in_dim

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def phi(self) -> FeatureMap:
        if self.psi2 is not self.psi1:
            raise ContractError("model has two distinct nonlinearities")
        return self.psi1


@dataclass
class RealizationMatrices:
    controllability: np.ndarray      # [B, AB, ..., A^{L-1}B]
    observability: np.ndarray        # [C; CA; ...; CA^{L-1}]
    reversed_controllability: np.ndarray  # [A^{L-1}B, ..., AB, B]
    toeplitz_strict: np.ndarray      # block lower triangular, zero diagonal
    toeplitz: np.ndarray             # toeplitz_strict + I_L kron D
    markov: List[np.ndarray]         # M_j = C A^j B, j < L
    observability_rank: int


# ---------------------------------------------------------------- simulation


def uniform_inputs(T: int, m: int, rng) -> np.ndarray:
    """I.i.d. uniform inputs on ``[-1, 1]^m``."""
    return rng.uniform(-1.0, 1.0, size=(T, m))


def simulate_ar(model: ARModel, u, y_init) -> Trajectory:
    """Run the AR recursion from the ``L`` initial outputs ``y_init``."""
    u = as_sequence(u)
    L, p = model.lag, model.p
    y_init = as_sequence(y_init).reshape(-1, p)
    T = u.shape[0]
    if u.shape[1] != model.m:
        raise ShapeError(f"model takes {model.m} inputs, got {u.shape[1]}")
    if T < L + 1:
        raise InsufficientDataError(f"need at least L+1={L + 1} input samples, got {T}")
    if y_init.shape[0] != L:
        raise DimensionError(f"y_init must hold L={L} outputs, got {y_init.shape[0]}")
    y = np.zeros((T, p))
    y[:L] = y_init
    for t in range(T - L):
        acc = model.forcing(u[t:t + L + 1])
        for k in range(1, L + 1):
            acc = acc - model.A[k - 1] @ y[t + L - k]
        y[t + L] = acc
    return Trajectory(u, y)


def simulate_ss(model: StateSpaceModel, u) -> Tuple[Trajectory, np.ndarray]:
    """Simulate from ``model.x0``; returns the trajectory and states ``x[0..T-1]``."""
    u = as_sequence(u)
    if u.shape[1] != model.m:
        raise ShapeError(f"model takes {model.m} inputs, got {u.shape[1]}")
    T = u.shape[0]
    E = model.psi1(u).reshape(T, model.q)
    F = E if model.psi2 is model.psi1 else model.psi2(u).reshape(T, model.q)
    X = np.zeros((T, model.n))
    Y = np.zeros((T, model.p))
    x = model.x0.copy()
    for t in range(T):
        X[t] = x
        Y[t] = model.C @ x + model.D @ F[t]
        x = model.A @ x + model.B @ E[t]
    return Trajectory(u, Y), X


# ---------------------------------------------------------------- Volterra


@dataclass
class VolterraFunction:
    """Truncated Volterra series on a flattened input window.

    ``kernels[k-1]`` is the order-``k`` coefficient tensor of shape
    ``(d,) * k`` where ``d`` is the window length.
    """

    h0: float
    kernels: List[np.ndarray] = field(default_factory=list)
    allow_large: bool = False

    def __post_init__(self):
        self.kernels = [np.asarray(h, float) for h in self.kernels]
        if self.order > 3 and not self.allow_large:
            raise ContractError("Volterra order above 3 needs allow_large=True")
        dims = {s for k, h in enumerate(self.kernels, 1) for s in h.shape}
        for k, h in enumerate(self.kernels, 1):
            if h.ndim != k:
                raise ShapeError(f"order-{k} tensor has {h.ndim} axes")
        if len(dims) > 1:
            raise ShapeError(f"Volterra tensors disagree on window length: {sorted(dims)}")

    @property
    def order(self) -> int:
        return len(self.kernels)

    @property
    def window(self) -> Optional[int]:
        return self.kernels[0].shape[0] if self.kernels else None

    def weighted_norm_sq(self, rho: Sequence[float]) -> float:
        """``sum_k rho_k / k! * ||h_k||^2`` over the stored orders."""
        total = rho[0] * self.h0 ** 2
        for k, h in enumerate(self.kernels, 1):
            total += rho[k] / factorial(k) * float(np.sum(h ** 2))
        return float(total)

    def __call__(self, u_window) -> np.ndarray:
        return np.array([eval_volterra(self, u_window)])


def eval_volterra(v: VolterraFunction, u_window) -> float:
    u = np.asarray(u_window, float).ravel()
    if v.window is not None and u.size != v.window:
        raise ContractError(f"window has length {u.size}, Volterra tensors expect {v.window}")
    total = float(v.h0)
    for h in v.kernels:
        term = h
        for _ in range(h.ndim):
            term = term @ u
        total += float(term)
    return total


# ---------------------------------------------------------------- realization


def realization(model: StateSpaceModel, L: int, policy: RankPolicy = DEFAULT_POLICY) -> RealizationMatrices:
    if L < 1:
        raise ContractError("L must be >= 1")
    A, B, C, D = model.A, model.B, model.C, model.D
    n, q, p = model.n, model.q, model.p
    powers = [np.eye(n)]
    for _ in range(L):
        powers.append(A @ powers[-1])
    ctrb = np.hstack([powers[j] @ B for j in range(L)])
    rctrb = np.hstack([powers[L - 1 - j] @ B for j in range(L)])
    obsv = np.vstack([C @ powers[j] for j in range(L)])
    markov = [C @ powers[j] @ B for j in range(L)]
    Tt = np.zeros((p * L, q * L))
    for r in range(L):
        for c in range(r):
            Tt[r * p:(r + 1) * p, c * q:(c + 1) * q] = markov[r - c - 1]
    return RealizationMatrices(
        controllability=ctrb,
        observability=obsv,
        reversed_controllability=rctrb,
        toeplitz_strict=Tt,
        toeplitz=Tt + np.kron(np.eye(L), D),
        markov=markov,
        observability_rank=numerical_rank(obsv, policy),
    )


class _HammersteinForcing:
    """``g(u[t-L..t]) = S [E_t; F_t; psi2(u_t)]`` for :func:`ss_to_ar`."""

    def __init__(self, S, psi1, psi2, L):
        self.S = S
        self.psi1 = psi1
        self.psi2 = psi2
        self.L = L

    def __call__(self, u_window):
        m = self.psi1.in_dim
        U = np.asarray(u_window, float).reshape(self.L + 1, m)
        E = self.psi1(U[:-1]).ravel()
        F = self.psi2(U[:-1]).ravel()
        last = self.psi2(U[-1:]).ravel()
        return self.S @ np.concatenate([E, F, last])


def ss_to_ar(model: StateSpaceModel, L: int, policy: RankPolicy = DEFAULT_POLICY) -> ARModel:
    """Equivalent AR model of lag ``L`` for an observable Hammerstein model.

    With ``Q = C A^L pinv(O_L)`` partitioned into ``p x p`` blocks, the block
    acting on ``y[t-k]`` becomes ``-A_k``.  The forcing is
    ``S psi(u[t-L..t])`` with ``S = [M - Q T~_L, -Q (I_L kron D), D]``.
    """
    if L < model.n:
        raise ContractError(f"L={L} must be at least the state dimension n={model.n}")
    R = realization(model, L, policy)
    if R.observability_rank != model.n:
        raise ObservabilityError(
            f"rank(O_L)={R.observability_rank} < n={model.n}; model is not observable at L={L}"
        )
    p = model.p
    AL = np.linalg.matrix_power(model.A, L)
    Q = model.C @ AL @ pinv(R.observability, policy)
    # Q's block i multiplies y[t-L+i], i.e. y[t-k] with k = L - i
    A_ar = np.stack([-Q[:, (L - k) * p:(L - k + 1) * p] for k in range(1, L + 1)])
    M = np.hstack(R.markov[::-1])
    S = np.hstack([M - Q @ R.toeplitz_strict, -Q @ np.kron(np.eye(L), model.D), model.D])
    g = _HammersteinForcing(S, model.psi1, model.psi2, L)
    return ARModel(A_ar, g, model.m)


class _LinearForcing:
    def __init__(self, B):
        self.B = B   # (L+1, p, m), B[l] multiplies u[t+L-l]

    def __call__(self, u_window):
        Lp1, p, m = self.B.shape
        U = np.asarray(u_window, float).reshape(Lp1, m)
        return sum(self.B[l] @ U[Lp1 - 1 - l] for l in range(Lp1))


def make_lti_ar(A_list, B_list) -> ARModel:
    """LTI autoregressive model ``y[t+L] + sum A_k y[t+L-k] = sum_l B_l u[t+L-l]``.

    The linear kernel lifted to ``R^p`` is attached as ``model.kernel``.
    """
    A = np.asarray(A_list, float)
    if A.size == 0 or (A.ndim >= 1 and A.shape[0] == 0):
        raise ContractError("lag L must be >= 1")
    if A.ndim == 1:
        A = A[:, None, None]
    B = np.asarray(B_list, float)
    if B.ndim == 1:
        B = B[:, None, None]
    L, p = A.shape[0], A.shape[1]
    if B.shape[0] != L + 1 or B.shape[1] != p:
        raise ShapeError(f"expected {L + 1} input matrices of height {p}, got {B.shape}")
    return ARModel(A, _LinearForcing(B), B.shape[2], kernel=ScalarLift(LinearKernel(), p))


# ---------------------------------------------------------------- random models


def random_ss(n: int, m: int, p: int, rng, phi: Optional[FeatureMap] = None,
              radius: float = 0.8, feedthrough: bool = True, x0_scale: float = 0.0) -> StateSpaceModel:
    """Random stable model with spectral radius ``radius``.

    Controllability and observability hold with probability one; callers
    that need them should still check.
    """
    phi = feature_map("identity", m) if phi is None else phi
    q = phi.out_dim
    A = rng.standard_normal((n, n))
    A *= radius / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)
    B = rng.standard_normal((n, q))
    C = rng.standard_normal((p, n))
    D = rng.standard_normal((p, q)) if feedthrough else np.zeros((p, q))
    x0 = x0_scale * rng.standard_normal(n)
    return StateSpaceModel(A, B, C, D, phi, x0=x0)
