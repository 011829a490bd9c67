"""Coarse-grid correction Pi_A(P, R) = P (R^H A P)^{-1} R^H A and compatible transfers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .bspace import DEFAULT_TOL, ToleranceProfile, as_hpd, as_matrix, b_adjoint, b_mat_norm
from .errors import (
    DimensionMismatch,
    NearSingularA,
    NumericalInconsistency,
    RankDeficient,
    SingularCoarseMatrix,
    TrivialProjection,
)

__all__ = [
    "TransferPair",
    "Projection",
    "make_transfer_pair",
    "coarse_grid_projection",
    "check_projection_b_orthogonality",
    "p_star",
    "r_star",
    "projection_b_norm",
    "range_basis",
    "null_basis",
    "same_subspace",
]


def _full_rank(x, tol):
    s = np.linalg.svd(x, compute_uv=False)
    return s[-1] > tol * s[0], s


@dataclass(frozen=True, eq=False)
class TransferPair:
    """Interpolation P and restriction R, both n x n_c with full column rank."""

    P: np.ndarray
    R: np.ndarray

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def n_c(self) -> int:
        return self.P.shape[1]

    def coarse_matrix(self, A) -> np.ndarray:
        return self.R.conj().T @ as_matrix(A, "A", square=True) @ self.P


def make_transfer_pair(P, R, A=None, tol: ToleranceProfile = DEFAULT_TOL) -> TransferPair:
    """Validate shapes and ranks; with ``A`` also certify R^H A P nonsingular."""
    p = as_matrix(P, "P")
    r = as_matrix(R, "R")
    if p.shape != r.shape:
        raise DimensionMismatch(f"P {p.shape} and R {r.shape} differ in shape")
    n, n_c = p.shape
    if not 1 <= n_c < n:
        raise DimensionMismatch(f"need 1 <= n_c < n, got n_c={n_c}, n={n}")
    for name, x in (("P", p), ("R", r)):
        if not _full_rank(x, tol.rank)[0]:
            raise RankDeficient(f"{name} does not have full column rank")
    tp = TransferPair(p, r)
    if A is not None:
        a_c = tp.coarse_matrix(A)
        if not _full_rank(a_c, tol.rank)[0]:
            raise SingularCoarseMatrix("R^H A P is singular")
    return tp


@dataclass(frozen=True, eq=False)
class Projection:
    pi: np.ndarray

    def idempotency_residual(self) -> float:
        return float(np.linalg.norm(self.pi @ self.pi - self.pi))


def coarse_grid_projection(A, tp: TransferPair, tol: ToleranceProfile = DEFAULT_TOL) -> Projection:
    """Projection onto range(P) along null(R^H A)."""
    a = as_matrix(A, "A", square=True)
    if a.shape[0] != tp.n:
        raise DimensionMismatch("A and transfer operators have different n")
    rha = tp.R.conj().T @ a
    a_c = rha @ tp.P
    if not _full_rank(a_c, tol.rank)[0]:
        raise SingularCoarseMatrix("R^H A P is singular")
    pi = tp.P @ np.linalg.solve(a_c, rha)
    proj = Projection(pi)
    if proj.idempotency_residual() > tol.eq * (1 + np.linalg.norm(pi)) * max(1.0, np.linalg.cond(a_c)):
        raise NumericalInconsistency("computed coarse-grid correction is not idempotent")
    return proj


def range_basis(x, tol: float = DEFAULT_TOL.rank) -> np.ndarray:
    u, s, _ = np.linalg.svd(x)
    k = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return u[:, :k]


def null_basis(x, tol: float = DEFAULT_TOL.rank) -> np.ndarray:
    """Orthonormal basis of null(x) from the full SVD."""
    _, s, vh = np.linalg.svd(x)
    k = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return vh[k:].conj().T


def same_subspace(x, y, tol: float = DEFAULT_TOL.angle):
    """Equal column spaces, judged by the largest principal angle."""
    if x.shape[1] != y.shape[1] or x.shape[1] == 0:
        return x.shape[1] == y.shape[1], (0.0 if x.shape[1] == y.shape[1] else np.pi / 2)
    angle = float(np.max(sla.subspace_angles(x, y)))
    return angle <= tol, angle


def p_star(A, R, B, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Interpolation B^{-1} A^H R that makes Pi_A(P*, R) B-orthogonal."""
    bm = as_hpd(B, tol)
    a = as_matrix(A, "A", square=True)
    r = as_matrix(R, "R")
    p = bm.solve(a.conj().T @ r)
    if not _full_rank(p, tol.rank)[0]:
        raise RankDeficient("B^{-1} A^H R lost rank")
    return p


def r_star(A, P, B, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Restriction A^{-H} B P that makes Pi_A(P, R*) B-orthogonal."""
    bm = as_hpd(B, tol)
    a = as_matrix(A, "A", square=True)
    ok, s = _full_rank(a, tol.rank)
    if not ok:
        raise NearSingularA(f"sigma_min(A)/sigma_max(A) = {s[-1] / s[0]:.3e}")
    return np.linalg.solve(a.conj().T, bm.b @ as_matrix(P, "P"))


def projection_b_norm(pi, B, tol: ToleranceProfile = DEFAULT_TOL) -> float:
    """||Pi||_B for a nontrivial projection; cross-checked against ||I - Pi||_B."""
    pi = pi.pi if isinstance(pi, Projection) else as_matrix(pi, "Pi", square=True)
    n = pi.shape[0]
    scale = max(np.linalg.norm(pi), 1.0)
    if np.linalg.norm(pi) <= tol.eq or np.linalg.norm(np.eye(n) - pi) <= tol.eq * scale:
        raise TrivialProjection("projection is 0 or I")
    bm = as_hpd(B, tol)
    norm = b_mat_norm(pi, bm)
    other = b_mat_norm(np.eye(n) - pi, bm)
    if abs(norm - other) > tol.eig * norm * np.sqrt(bm.cond) or norm < 1 - tol.eig:
        raise NumericalInconsistency(f"||Pi||_B = {norm!r} but ||I - Pi||_B = {other!r}")
    return norm


def check_projection_b_orthogonality(A, tp: TransferPair, B, tol: ToleranceProfile = DEFAULT_TOL) -> dict:
    """Evaluate the seven equivalent conditions for Pi_A(P, R) to be B-orthogonal.

    Returns a dict with ``verdicts`` (condition -> bool), ``residuals``
    (condition -> float) and ``b_norm`` (||Pi||_B).
    """
    bm = as_hpd(B, tol)
    a = as_matrix(A, "A", square=True)
    pi = coarse_grid_projection(a, tp, tol).pi
    n = pi.shape[0]
    eye = np.eye(n)
    res = {}

    # (1) Pi = B^{-1} Pi^H B, written without B^{-1}
    b_pi = bm.b @ pi
    res["b_orthogonal"] = np.linalg.norm(b_pi - pi.conj().T @ bm.b) / np.linalg.norm(b_pi)
    # (2) B-adjoint
    res["self_adjoint"] = np.linalg.norm(b_adjoint(pi, bm) - pi) / np.linalg.norm(pi)
    # (3) largest B-cosine between bases of range(Pi) and null(Pi), both directions
    ran = range_basis(pi, tol.rank * 1e4)
    nul = null_basis(pi, tol.rank * 1e4)
    ran_b = bm.sqrt @ ran
    nul_b = bm.sqrt @ nul
    ran_b = np.linalg.qr(ran_b)[0]
    nul_b = np.linalg.qr(nul_b)[0]
    res["complement"] = max(
        np.linalg.norm(nul_b.conj().T @ ran_b, 2), np.linalg.norm(ran_b.conj().T @ nul_b, 2)
    )
    # (4)
    norm_pi = b_mat_norm(pi, bm)
    norm_cpi = b_mat_norm(eye - pi, bm)
    res["unit_norm"] = max(abs(norm_pi - 1), abs(norm_cpi - 1))
    # (5)-(7) subspace identities
    ahr = a.conj().T @ tp.R
    res["range_BP_eq_range_AHR"] = same_subspace(bm.b @ tp.P, ahr, tol.angle)[1]
    res["range_P_eq_range_Pstar"] = same_subspace(tp.P, bm.solve(ahr), tol.angle)[1]
    res["null_RHA_eq_null_PHB"] = same_subspace(
        null_basis(ahr.conj().T), null_basis((bm.b @ tp.P).conj().T), tol.angle
    )[1]

    limits = {
        "b_orthogonal": tol.eig,
        "self_adjoint": tol.eig,
        "complement": tol.angle,
        "unit_norm": tol.eig,
        "range_BP_eq_range_AHR": tol.angle,
        "range_P_eq_range_Pstar": tol.angle,
        "null_RHA_eq_null_PHB": tol.angle,
    }
    verdicts = {k: bool(res[k] <= limits[k]) for k in limits}
    return {
        "verdicts": verdicts,
        "residuals": {k: float(v) for k, v in res.items()},
        "tolerances": limits,
        "b_norm": float(norm_pi),
    }
