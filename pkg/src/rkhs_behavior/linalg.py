"""Dense linear algebra primitives: Hankel matrices, rank-controlled
pseudoinverse, oblique projection, symmetric eigendecomposition and
truncated SVD.

Every routine that has to decide on a numerical rank takes a
:class:`RankPolicy`.  The default cuts singular values below
``1e-10 * sigma_max``.
"""
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ContractError, DimensionError, ShapeError

__all__ = [
    "RankPolicy",
    "DEFAULT_POLICY",
    "as_sequence",
    "hankel",
    "numerical_rank",
    "is_pe",
    "pinv",
    "oblique_project",
    "eig_sym",
    "svd_trunc",
    "colspace_residual",
]

SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class RankPolicy:
    """How to pick the numerical rank of a matrix.

    Parameters
    ----------
    mode : {"relative", "fixed"}
        ``"relative"`` keeps singular values ``>= rel_tol * sigma_max``;
        ``"fixed"`` keeps the leading ``fixed_rank`` of them.
    rel_tol : float
        Relative cut used in ``"relative"`` mode.
    fixed_rank : int, optional
        Number of singular values kept in ``"fixed"`` mode.
    """

    mode: str = "relative"
    rel_tol: float = 1e-10
    fixed_rank: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("relative", "fixed"):
            raise ContractError(f"unknown rank policy mode {self.mode!r}")
        if not self.rel_tol > 0:
            raise ContractError("rel_tol must be positive")
        if self.mode == "fixed":
            if self.fixed_rank is None or self.fixed_rank < 0:
                raise ContractError("fixed mode needs a non-negative fixed_rank")

    def rank(self, s: np.ndarray) -> int:
        """Number of singular values kept from the descending array ``s``."""
        if s.size == 0:
            return 0
        if self.mode == "fixed":
            if self.fixed_rank > s.size:
                raise ContractError(
                    f"fixed_rank={self.fixed_rank} exceeds min(rows, cols)={s.size}"
                )
            return int(self.fixed_rank)
        smax = s[0]
        if smax <= 0:
            return 0
        return int(np.count_nonzero(s >= self.rel_tol * smax))


DEFAULT_POLICY = RankPolicy()


def as_sequence(w) -> np.ndarray:
    """Coerce a signal to a ``(T, q)`` float array.

    A 1-d input is read as a scalar sequence.  Ragged nested lists raise
    :class:`ShapeError`.
    """
    try:
        arr = np.asarray(w, dtype=float)
    except ValueError as exc:
        raise ShapeError(f"ragged sequence: {exc}") from None
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"expected a sequence of vectors, got shape {arr.shape}")
    return arr


def hankel(w, depth: int) -> np.ndarray:
    """Block Hankel matrix of depth ``depth``.

    Block ``(i, j)`` is ``w[i + j]``; the result has shape
    ``(depth * q, T - depth + 1)``.
    """
    w = as_sequence(w)
    T, q = w.shape
    if depth < 1 or depth > T:
        raise DimensionError(f"depth must satisfy 1 <= depth <= T={T}, got {depth}")
    ncols = T - depth + 1
    H = np.empty((depth * q, ncols))
    for i in range(depth):
        H[i * q:(i + 1) * q, :] = w[i:i + ncols].T
    return H


def _svd(M: np.ndarray):
    return np.linalg.svd(M, full_matrices=False)


def numerical_rank(M, policy: RankPolicy = DEFAULT_POLICY) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    return policy.rank(np.linalg.svd(M, compute_uv=False))


def is_pe(w, order: int, policy: RankPolicy = DEFAULT_POLICY) -> bool:
    """True if ``w`` is persistently exciting of the given order."""
    H = hankel(w, order)
    return numerical_rank(H, policy) == H.shape[0]


def pinv(M, policy: RankPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Moore-Penrose pseudoinverse with the rank chosen by ``policy``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ShapeError(f"pinv expects a matrix, got shape {M.shape}")
    if M.size == 0:
        return np.zeros(M.shape[::-1])
    U, s, Vt = _svd(M)
    r = policy.rank(s)
    if r == 0:
        return np.zeros(M.shape[::-1])
    return (Vt[:r].T / s[:r]) @ U[:, :r].T


def oblique_project(A, B, C, policy: RankPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Oblique projection of the row space of ``A`` onto the row space of
    ``C`` along the row space of ``B``.

    Evaluates ``A [C' B'] (pinv([[CC', CB'], [BC', BB']]))[:, :r] C`` with
    ``r = rows(C)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    B = np.asarray(B, dtype=float)
    B = np.zeros((0, C.shape[1])) if B.size == 0 else np.atleast_2d(B)
    k = A.shape[1]
    if B.shape[1] != k or C.shape[1] != k:
        raise ShapeError(
            f"column counts differ: A has {k}, B has {B.shape[1]}, C has {C.shape[1]}"
        )
    r = C.shape[0]
    CB = np.vstack([C, B])
    G = CB @ CB.T
    return A @ CB.T @ pinv(G, policy)[:, :r] @ C


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is positive."""
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def eig_sym(M) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric
    matrix.

    Inputs that are symmetric only up to rounding (``max|M - M'|`` below
    ``1e-8 * max|M|``) are symmetrized first; anything worse is rejected.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"eig_sym expects a square matrix, got {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > SYMMETRY_TOL * scale:
        raise ContractError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    lam, V = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(lam, kind="stable")[::-1]
    return lam[order], _fix_signs(V[:, order])


def svd_trunc(
    M, policy: RankPolicy = DEFAULT_POLICY
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated SVD ``M ~ U1 @ diag(s1) @ V1.T``.

    ``s1`` holds only strictly positive singular values; a zero matrix
    gives empty factors.  Left singular vectors follow the sign rule of
    :func:`eig_sym` and the right ones are flipped to match.
    """
    M = np.asarray(M, dtype=float)
    rows, cols = M.shape
    if M.size == 0:
        return np.zeros((rows, 0)), np.zeros(0), np.zeros((cols, 0))
    U, s, Vt = _svd(M)
    r = policy.rank(s)
    r = min(r, int(np.count_nonzero(s > 0)))
    U1 = U[:, :r]
    V1 = Vt[:r].T
    U1f = _fix_signs(U1)
    flip = np.sign(np.sum(U1f * U1, axis=0)) if r else np.zeros(0)
    return U1f, s[:r].copy(), V1 * flip


def colspace_residual(M, v, policy: RankPolicy = DEFAULT_POLICY) -> Union[float, np.ndarray]:
    """Relative distance of ``v`` (vector or columns) from the column space of ``M``.

    Returns ``||v - M pinv(M) v|| / ||v||`` per column; zero columns give 0.
    """
    M = np.asarray(M, dtype=float)
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    V = v[:, None] if single else v
    U1, _, _ = svd_trunc(M, policy)
    R = V - U1 @ (U1.T @ V)
    nv = np.linalg.norm(V, axis=0)
    res = np.where(nv > 0, np.linalg.norm(R, axis=0) / np.where(nv > 0, nv, 1.0), 0.0)
    return float(res[0]) if single else res
