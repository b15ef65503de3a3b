"""Scalar and operator-valued kernels, feature maps, and block Gram assembly.

Block layout convention: for ``N`` centers and an operator kernel with
output dimension ``p``, the Gram matrix is ``(p*N, p*N)`` and block
``(i, j)`` (rows ``i*p:(i+1)*p``, columns ``j*p:(j+1)*p``) equals
``kernel(z_i, z_j)``.  A coefficient set ``v_0..v_{N-1}`` is stored as an
``(N, p)`` array and flattened row-major to match.
"""
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, ShapeError

__all__ = [
    "ScalarKernel",
    "LinearKernel",
    "GaussianKernel",
    "FockKernel",
    "PolynomialKernel",
    "FeatureMap",
    "TabulatedFeatureMap",
    "feature_map",
    "tabulate",
    "OperatorKernel",
    "ScalarLift",
    "DirectSum",
    "RankOneFeature",
    "KernelExpansion",
    "eval_operator_kernel",
    "gram_block",
    "kernel_row",
    "trace_inner",
]


def _points(X, dim: Optional[int] = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if dim == 1 else X[None, :]
    if X.ndim != 2:
        raise ShapeError(f"expected a list of points, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise ShapeError(f"points have dimension {X.shape[1]}, expected {dim}")
    return X


def _vector(x, dim: Optional[int] = None) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ShapeError(f"expected a vector, got shape {x.shape}")
    if dim is not None and x.size != dim:
        raise ShapeError(f"vector has dimension {x.size}, expected {dim}")
    return x


# ---------------------------------------------------------------- scalar kernels


class ScalarKernel:
    """Real-valued kernel of positive type on ``R^d``.

    Subclasses implement :meth:`matrix`; single evaluations go through it so
    that the pairwise and batched paths cannot drift apart.
    """

    def matrix(self, X, Y) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x, y) -> float:
        return float(self.matrix(_vector(x)[None, :], _vector(y)[None, :])[0, 0])

    def to_spec(self) -> dict:
        raise NotImplementedError


class LinearKernel(ScalarKernel):
    def matrix(self, X, Y):
        return np.asarray(X, float) @ np.asarray(Y, float).T

    def to_spec(self):
        return {"kind": "linear"}

    def __repr__(self):
        return "LinearKernel()"


@dataclass(frozen=True)
class GaussianKernel(ScalarKernel):
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ContractError("gaussian bandwidth must be positive")

    def matrix(self, X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        d2 = np.sum((X[:, None, :] - Y[None, :, :]) ** 2, axis=-1)
        return np.exp(-d2 / (2.0 * self.sigma ** 2))

    def to_spec(self):
        return {"kind": "gaussian", "sigma": self.sigma}


@dataclass(frozen=True)
class FockKernel(ScalarKernel):
    """Truncated weighted Fock kernel ``sum_{k<=K} <x,y>^k / (k! rho_k)``.

    Every term is a positive multiple of a power of the linear kernel, so
    the truncated sum stays of positive type.
    """

    rho: tuple = (1.0,) * 7
    order: int = 6

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        object.__setattr__(self, "rho", rho)
        if self.order < 0:
            raise ContractError("Fock truncation order must be >= 0")
        if len(rho) < self.order + 1:
            raise ContractError(
                f"need {self.order + 1} Fock weights for order {self.order}, got {len(rho)}"
            )
        if any(not (r > 0 and np.isfinite(r)) for r in rho[: self.order + 1]):
            raise ContractError("Fock weights must be finite and positive")

    @property
    def coefficients(self) -> np.ndarray:
        return np.array(
            [1.0 / (factorial(k) * self.rho[k]) for k in range(self.order + 1)]
        )

    def series(self, lam):
        """Evaluate the truncated series at inner-product values ``lam``."""
        lam = np.asarray(lam, float)
        out = np.zeros_like(lam)
        # Horner, highest power first
        for c in self.coefficients[::-1]:
            out = out * lam + c
        return out

    def matrix(self, X, Y):
        return self.series(np.asarray(X, float) @ np.asarray(Y, float).T)

    def to_spec(self):
        return {"kind": "fock", "rho": list(self.rho[: self.order + 1]), "K": self.order}


@dataclass(frozen=True)
class PolynomialKernel(ScalarKernel):
    degree: int = 2

    def __post_init__(self):
        if self.degree < 1:
            raise ContractError("polynomial degree must be >= 1")

    def matrix(self, X, Y):
        return (1.0 + np.asarray(X, float) @ np.asarray(Y, float).T) ** self.degree

    def to_spec(self):
        return {"kind": "polynomial", "degree": self.degree}


# ---------------------------------------------------------------- feature maps


@dataclass(frozen=True)
class FeatureMap:
    """Deterministic map ``R^m -> R^q`` applied row-wise."""

    name: str
    in_dim: int
    out_dim: int
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    params: tuple = ()

    def __call__(self, u) -> np.ndarray:
        # a 1-d argument is one point unless the map is scalar-input
        u = np.asarray(u, dtype=float)
        single = u.ndim == 0 or (u.ndim == 1 and (self.in_dim != 1 or u.size == 1))
        U = u.reshape(1, -1) if single else _points(u, self.in_dim)
        if U.shape[1] != self.in_dim:
            raise ShapeError(f"feature map {self.name} expects dimension {self.in_dim}, got {U.shape[1]}")
        F = np.asarray(self.func(U), dtype=float).reshape(U.shape[0], self.out_dim)
        return F[0] if single else F

    def to_spec(self) -> dict:
        spec = {"map": self.name}
        spec.update(dict(self.params))
        return spec


def _identity(U):
    return U.copy()


def _poly_features(degree):
    def f(U):
        return np.hstack([U ** d for d in range(1, degree + 1)])
    return f


def feature_map(name: str, m: int, degree: int = 2) -> FeatureMap:
    """Built-in feature maps: ``identity``, ``tanh`` and ``poly``.

    ``poly`` stacks componentwise powers ``[u, u**2, ..., u**degree]`` so
    ``q = m * degree``.  All catalog maps send 0 to 0.
    """
    if m < 1:
        raise ContractError("input dimension must be >= 1")
    if name == "identity":
        return FeatureMap("identity", m, m, _identity)
    if name == "tanh":
        return FeatureMap("tanh", m, m, np.tanh)
    if name == "poly":
        if degree < 1:
            raise ContractError("poly feature degree must be >= 1")
        return FeatureMap("poly", m, m * degree, _poly_features(degree), (("degree", degree),))
    raise ContractError(f"unknown feature map {name!r}")


class TabulatedFeatureMap(FeatureMap):
    """Feature map given by an explicit table of ``(input, feature)`` rows.

    Lookup is exact on the input bytes; querying an input that is not in the
    table raises :class:`ContractError`.
    """

    def __init__(self, inputs, features, name="tabulated"):
        inputs = _points(inputs)
        features = _points(features)
        if inputs.shape[0] != features.shape[0]:
            raise ShapeError("table inputs and features differ in length")
        table = {}
        for x, f in zip(inputs, features):
            table[x.tobytes()] = f.copy()
        super().__init__(name, inputs.shape[1], features.shape[1], self._lookup)
        object.__setattr__(self, "_table", table)

    def _lookup(self, U):
        out = np.empty((U.shape[0], self.out_dim))
        for i, u in enumerate(np.ascontiguousarray(U)):
            try:
                out[i] = self._table[u.tobytes()]
            except KeyError:
                raise ContractError(f"input {u} is not in the feature table") from None
        return out

    def __len__(self):
        return len(self._table)


def tabulate(fmap: FeatureMap, inputs) -> TabulatedFeatureMap:
    """Freeze ``fmap`` on the given inputs into a lookup table."""
    inputs = _points(inputs, fmap.in_dim)
    return TabulatedFeatureMap(inputs, fmap(inputs), name=f"tabulated-{fmap.name}")


# ---------------------------------------------------------------- operator kernels


class OperatorKernel:
    """Matrix-valued kernel of positive type.

    ``out_dim`` is the size of the square matrices returned by evaluation and
    ``in_dim`` the dimension of the points it acts on (``None`` if any).
    """

    out_dim: int
    in_dim: Optional[int] = None

    def gram(self, X, Y=None) -> np.ndarray:
        """Block matrix with block ``(i, j) = kernel(X[i], Y[j])``."""
        raise NotImplementedError

    def __call__(self, z1, z2) -> np.ndarray:
        z1 = _vector(z1, self.in_dim)
        z2 = _vector(z2, self.in_dim)
        return self.gram(z1[None, :], z2[None, :])

    def row(self, z, centers) -> np.ndarray:
        return self.gram(_vector(z, self.in_dim)[None, :], centers)

    def trace_gram(self, X, Y=None) -> np.ndarray:
        """Matrix of ``Tr kernel(X[i], Y[j])``."""
        X = _points(X, self.in_dim)
        Y = X if Y is None else _points(Y, self.in_dim)
        p = self.out_dim
        G = self.gram(X, Y)
        blocks = G.reshape(X.shape[0], p, Y.shape[0], p)
        return np.einsum("iaja->ij", blocks)

    def to_spec(self) -> dict:
        raise NotImplementedError


class ScalarLift(OperatorKernel):
    """``kernel(z, z') = k_s(z, z') * I_p``."""

    def __init__(self, scalar: ScalarKernel, p: int = 1, in_dim: Optional[int] = None):
        if p < 1:
            raise ContractError("output dimension must be >= 1")
        self.scalar = scalar
        self.out_dim = int(p)
        self.in_dim = in_dim

    def scalar_gram(self, X, Y=None) -> np.ndarray:
        X = _points(X, self.in_dim)
        Y = X if Y is None else _points(Y, self.in_dim)
        return self.scalar.matrix(X, Y)

    def gram(self, X, Y=None):
        return np.kron(self.scalar_gram(X, Y), np.eye(self.out_dim))

    def to_spec(self):
        spec = self.scalar.to_spec()
        spec["p"] = self.out_dim
        return spec

    def __repr__(self):
        return f"ScalarLift({self.scalar!r}, p={self.out_dim})"


class DirectSum(OperatorKernel):
    """``kernel(z, z') = k_U(z[:split], z'[:split]) + k_Y(z[split:], z'[split:])``.

    This is the kernel of the direct sum of two RKHSs of ``R^p``-valued
    functions, one acting on the input window and one on the output window.
    """

    def __init__(self, input_kernel: OperatorKernel, output_kernel: OperatorKernel, split: int,
                 in_dim: Optional[int] = None):
        if input_kernel.out_dim != output_kernel.out_dim:
            raise ContractError("direct-sum parts must share the output dimension")
        if split < 0:
            raise ContractError("split index must be >= 0")
        self.input_kernel = input_kernel
        self.output_kernel = output_kernel
        self.split = int(split)
        self.out_dim = input_kernel.out_dim
        self.in_dim = in_dim

    def gram(self, X, Y=None):
        X = _points(X, self.in_dim)
        Y = X if Y is None else _points(Y, self.in_dim)
        s = self.split
        if X.shape[1] < s:
            raise ShapeError(f"points of dimension {X.shape[1]} are shorter than split {s}")
        return self.input_kernel.gram(X[:, :s], Y[:, :s]) + self.output_kernel.gram(
            X[:, s:], Y[:, s:]
        )

    def to_spec(self):
        return {
            "kind": "direct-sum",
            "input": self.input_kernel.to_spec(),
            "output": self.output_kernel.to_spec(),
            "split": self.split,
        }


class RankOneFeature(OperatorKernel):
    """``kernel(u, u') = phi(u) phi(u')^T`` for a feature map ``phi``."""

    def __init__(self, fmap: FeatureMap):
        self.fmap = fmap
        self.out_dim = fmap.out_dim
        self.in_dim = fmap.in_dim

    def features(self, U) -> np.ndarray:
        return self.fmap(_points(U, self.in_dim))

    def gram(self, X, Y=None):
        FX = self.features(X)
        FY = FX if Y is None else self.features(Y)
        return np.outer(FX.ravel(), FY.ravel())

    def trace_gram(self, X, Y=None):
        # Tr(phi(u) phi(u')^T) == <phi(u), phi(u')>
        FX = self.features(X)
        FY = FX if Y is None else self.features(Y)
        return FX @ FY.T

    def to_spec(self):
        spec = {"kind": "feature"}
        spec.update(self.fmap.to_spec())
        return spec

    def __repr__(self):
        return f"RankOneFeature({self.fmap.name}, m={self.in_dim}, q={self.out_dim})"


# ---------------------------------------------------------------- expansions


@dataclass
class KernelExpansion:
    """Function ``f(z) = sum_j kernel(z, z_j) v_j`` with centers ``z_j`` and
    coefficient vectors ``v_j`` (rows of ``coefs``)."""

    kernel: OperatorKernel
    centers: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        self.centers = _points(self.centers, self.kernel.in_dim)
        self.coefs = np.asarray(self.coefs, dtype=float).reshape(
            self.centers.shape[0], self.kernel.out_dim
        )

    def __call__(self, z) -> np.ndarray:
        return self.kernel.row(z, self.centers) @ self.coefs.ravel()

    def evaluate(self, Z) -> np.ndarray:
        """Values at many points, shape ``(len(Z), p)``."""
        Z = _points(Z, self.kernel.in_dim)
        vals = self.kernel.gram(Z, self.centers) @ self.coefs.ravel()
        return vals.reshape(Z.shape[0], self.kernel.out_dim)

    def norm_sq(self) -> float:
        v = self.coefs.ravel()
        return max(float(v @ self.kernel.gram(self.centers) @ v), 0.0)


# ---------------------------------------------------------------- functional API


def eval_operator_kernel(kernel: OperatorKernel, z1, z2) -> np.ndarray:
    return kernel(z1, z2)


def gram_block(kernel: OperatorKernel, centers) -> np.ndarray:
    centers = np.asarray(centers, dtype=float)
    if centers.size == 0:
        raise ContractError("gram_block needs at least one center")
    if centers.ndim == 1:
        centers = centers[:, None] if kernel.in_dim in (None, 1) else centers[None, :]
    return kernel.gram(centers)


def kernel_row(kernel: OperatorKernel, z, centers) -> np.ndarray:
    centers = np.asarray(centers, dtype=float)
    if centers.size == 0:
        raise ContractError("kernel_row needs at least one center")
    if centers.ndim == 1:
        centers = centers[:, None] if kernel.in_dim in (None, 1) else centers[None, :]
    return kernel.row(z, centers)


def trace_inner(kernel: OperatorKernel, u, u2) -> float:
    """``Tr kernel(u, u2)`` for a rank-one feature kernel."""
    if not isinstance(kernel, RankOneFeature):
        raise ContractError("trace_inner requires a rank-one feature kernel")
    return float(np.trace(kernel(u, u2)))
