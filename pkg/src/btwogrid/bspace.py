"""Geometry of a B-inner product <x, y>_B = y^H B x.

Every routine accepts ``B`` either as a raw array or as an :class:`HpdMatrix`;
raw arrays are validated on each call, so callers doing many evaluations
against the same ``B`` should wrap it once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, NonFiniteEntries, NotHpd

__all__ = [
    "ToleranceProfile",
    "DEFAULT_TOL",
    "HpdMatrix",
    "as_matrix",
    "as_hpd",
    "b_inner",
    "b_vec_norm",
    "b_mat_norm",
    "b_adjoint",
    "b_similar",
    "is_b_unitary",
    "is_b_normal",
    "is_b_orthogonal_matrix",
]


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical thresholds. All are relative unless noted.

    herm   -- Hermitian test, ||B - B^H||_F <= herm * ||B||_F
    recon  -- reconstruction of square-root factors
    eq     -- matrix-equality predicates (relative Frobenius residual)
    eig    -- eigenvalue comparisons
    rank   -- sigma_min / sigma_max cutoff
    group  -- clustering of equal eigenvalues
    kappa_max -- eigenvector condition above which a matrix counts as defective
    angle  -- largest principal angle (radians) for subspace equality
    opt    -- absolute slack when certifying optimality sweeps
    """

    herm: float = 1e-10
    recon: float = 1e-12
    eq: float = 1e-10
    eig: float = 1e-8
    rank: float = 1e-12
    group: float = 1e-8
    kappa_max: float = 1e12
    angle: float = 1e-8
    opt: float = 1e-8

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be strictly positive, got {value!r}")

    def replace(self, **overrides) -> "ToleranceProfile":
        values = dict(self.__dict__)
        unknown = set(overrides) - set(values)
        if unknown:
            raise ValueError(f"unknown tolerance fields: {sorted(unknown)}")
        values.update(overrides)
        return ToleranceProfile(**values)


DEFAULT_TOL = ToleranceProfile()


def as_matrix(a, name="matrix", square=False) -> np.ndarray:
    """Promote to a finite complex 2-D array."""
    arr = np.asarray(a)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or min(arr.shape) < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    arr = arr.astype(complex, copy=False)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntries(f"{name} contains NaN or Inf")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class HpdMatrix:
    """A certified Hermitian positive definite matrix with cached factors.

    Use :meth:`from_array` to construct; the dataclass fields are the cache.
    """

    b: np.ndarray
    q: np.ndarray
    d: np.ndarray
    sqrt: np.ndarray
    inv_sqrt: np.ndarray
    _chol: tuple = field(repr=False)

    @classmethod
    def from_array(cls, b, tol: ToleranceProfile = DEFAULT_TOL) -> "HpdMatrix":
        b = as_matrix(b, "B", square=True)
        norm_b = np.linalg.norm(b)
        if np.linalg.norm(b - b.conj().T) > tol.herm * norm_b:
            raise NotHpd("B is not Hermitian")
        b = (b + b.conj().T) / 2
        d, q = np.linalg.eigh(b)
        if d[0] <= tol.rank * d[-1] or d[-1] <= 0:
            raise NotHpd(f"B is not positive definite (eigenvalues in [{d[0]:.3e}, {d[-1]:.3e}])")
        sqrt = (q * np.sqrt(d)) @ q.conj().T
        inv_sqrt = (q / np.sqrt(d)) @ q.conj().T
        n = b.shape[0]
        if np.linalg.norm(sqrt @ sqrt - b) > tol.recon * max(n, 1) * norm_b:
            raise NotHpd("B^(1/2) B^(1/2) does not reconstruct B")
        # forming B^(1/2) B^(-1/2) loses about sqrt(cond(B)) digits
        slack = tol.recon * n * np.sqrt(d[-1] / d[0])
        if np.linalg.norm(sqrt @ inv_sqrt - np.eye(n)) > slack * np.sqrt(n):
            raise NotHpd("B^(1/2) B^(-1/2) does not reconstruct I")
        chol = sla.cho_factor(b, lower=True)
        return cls(b=b, q=q, d=d, sqrt=sqrt, inv_sqrt=inv_sqrt, _chol=chol)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def cond(self) -> float:
        return float(self.d[-1] / self.d[0])

    def solve(self, x) -> np.ndarray:
        """B^{-1} x via the cached Cholesky factor."""
        return sla.cho_solve(self._chol, x)

    def inv(self) -> np.ndarray:
        return self.solve(np.eye(self.n, dtype=complex))


def as_hpd(b, tol: ToleranceProfile = DEFAULT_TOL) -> HpdMatrix:
    return b if isinstance(b, HpdMatrix) else HpdMatrix.from_array(b, tol)


def _vec(x, n, name):
    x = np.asarray(x).astype(complex, copy=False).reshape(-1)
    if x.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {x.shape[0]}, expected {n}")
    return x


def _square_like(a, bm: HpdMatrix, name="A"):
    a = as_matrix(a, name, square=True)
    if a.shape[0] != bm.n:
        raise DimensionMismatch(f"{name} is {a.shape[0]}x{a.shape[0]} but B is {bm.n}x{bm.n}")
    return a


def b_inner(x, y, B) -> complex:
    """<x, y>_B = y^H B x."""
    bm = as_hpd(B)
    x = _vec(x, bm.n, "x")
    y = _vec(y, bm.n, "y")
    return complex(y.conj() @ (bm.b @ x))


def b_vec_norm(x, B) -> float:
    bm = as_hpd(B)
    x = _vec(x, bm.n, "x")
    return float(np.linalg.norm(bm.sqrt @ x))


def b_similar(C, B) -> np.ndarray:
    """B^{1/2} C B^{-1/2}: the matrix whose 2-norm geometry is C's B-geometry."""
    bm = as_hpd(B)
    c = _square_like(C, bm, "C")
    return bm.sqrt @ c @ bm.inv_sqrt


def b_mat_norm(C, B) -> float:
    """Operator norm induced by ||.||_B."""
    return float(np.linalg.norm(b_similar(C, B), 2))


def b_adjoint(A, B) -> np.ndarray:
    """A^+ = B^{-1} A^H B, by a Hermitian solve."""
    bm = as_hpd(B)
    a = _square_like(A, bm)
    return bm.solve(a.conj().T @ bm.b)


def is_b_unitary(U, B, tol: float = DEFAULT_TOL.eq):
    """Columns of U are B-orthonormal: ||U^H B U - I_k||_F <= tol * k."""
    bm = as_hpd(B)
    u = as_matrix(U, "U")
    n, k = u.shape
    if n != bm.n or k > n:
        raise DimensionMismatch(f"U has shape {u.shape}, need n x k with n = {bm.n}, k <= n")
    residual = float(np.linalg.norm(u.conj().T @ bm.b @ u - np.eye(k)))
    return residual <= tol * k, residual


def is_b_normal(A, B, tol: float = DEFAULT_TOL.eq):
    """Commutator test A A^+ = A^+ A, measured after the similarity B^{1/2}(.)B^{-1/2}.

    The residual is ||T T^H - T^H T||_F / ||T||_F^2 with T = B^{1/2} A B^{-1/2},
    which is the B-weighted commutator and is invariant to scaling A.
    """
    t = b_similar(A, B)
    scale = np.linalg.norm(t) ** 2
    if scale == 0:
        return True, 0.0
    residual = float(np.linalg.norm(t @ t.conj().T - t.conj().T @ t) / scale)
    return residual <= tol, residual


def is_b_orthogonal_matrix(A, B, tol: float = DEFAULT_TOL.eq):
    """A^+ = A, checked in the equivalent form A^H B = B A."""
    bm = as_hpd(B)
    a = _square_like(A, bm)
    ba = bm.b @ a
    scale = np.linalg.norm(ba)
    if scale == 0:
        return True, 0.0
    residual = float(np.linalg.norm(a.conj().T @ bm.b - ba) / scale)
    return residual <= tol, residual
