"""Symmetrized smoothers and the smoothing assumption ||I - M^{-1}A||_B < 1.

The smoother is always supplied as its action ``M_inv``; M is never formed.
With K = M^{-1}A and K^+ its B-adjoint,

    I - M_tilde^{-1} B = (I - K)^+ (I - K)
    I - M_hat^{-1} B   = (I - K)(I - K)^+
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bnormal import b_unitary_diagonalize
from .bspace import DEFAULT_TOL, ToleranceProfile, as_hpd, as_matrix, b_mat_norm, b_vec_norm, is_b_normal
from .errors import DimensionMismatch, NotBNormal, SingularSmoother

__all__ = [
    "SmootherBundle",
    "SmoothingSpectrum",
    "build_smoother_bundle",
    "smoothing_assumption_report",
    "smoothing_spectrum",
    "eigenvalue_map_check",
    "eigenvalue_map",
]

# absolute slack on the interval (0, 1] for spectra of M^{-1}B
SPECTRUM_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class SmootherBundle:
    m_inv: np.ndarray
    m_tilde_inv: np.ndarray
    m_hat_inv: np.ndarray
    smoothing_norm: float


@dataclass(frozen=True, eq=False)
class SmoothingSpectrum:
    """Ascending eigenvalues of M_hat^{-1} B with B-orthonormal eigenvectors."""

    mus: np.ndarray
    V: np.ndarray


def _herm(x):
    return (x + x.conj().T) / 2


def build_smoother_bundle(A, M_inv, B, tol: ToleranceProfile = DEFAULT_TOL) -> SmootherBundle:
    bm = as_hpd(B, tol)
    a = as_matrix(A, "A", square=True)
    m_inv = as_matrix(M_inv, "M_inv", square=True)
    if a.shape != m_inv.shape or a.shape[0] != bm.n:
        raise DimensionMismatch("A, M_inv and B must have the same size")
    s = np.linalg.svd(m_inv, compute_uv=False)
    if s[-1] <= tol.rank * s[0]:
        raise SingularSmoother("M^{-1} is singular")
    k = m_inv @ a
    k_binv = bm.solve(k.conj().T).conj().T  # K B^{-1}
    binv_kh = k_binv.conj().T  # B^{-1} K^H
    m_tilde = k_binv + binv_kh - binv_kh @ bm.b @ k_binv
    m_hat = k_binv + binv_kh - k_binv @ k.conj().T
    n = a.shape[0]
    return SmootherBundle(
        m_inv=m_inv,
        m_tilde_inv=m_tilde,
        m_hat_inv=m_hat,
        smoothing_norm=b_mat_norm(np.eye(n) - k, bm),
    )


def _is_hpd(x, tol):
    w = np.linalg.eigvalsh(_herm(x))
    return bool(w[0] > -tol * abs(w[-1])), w


def _in_unit_interval(x_b, bm):
    # x_b = X B with X Hermitian: its spectrum equals that of B^{1/2} X B^{1/2}
    w = np.linalg.eigvalsh(_herm(bm.sqrt @ x_b @ bm.inv_sqrt))
    return bool(w[0] > -SPECTRUM_SLACK and w[-1] <= 1 + SPECTRUM_SLACK), w


def smoothing_assumption_report(bundle: SmootherBundle, A, M_inv, B, tol: ToleranceProfile = DEFAULT_TOL) -> dict:
    """Five equivalent forms of the smoothing assumption.

    ``verdicts`` maps each form to a bool; ``data`` holds the smoothing norm
    and the relevant spectra (so offending eigenvalues can be read off).
    """
    bm = as_hpd(B, tol)
    tilde_hpd, w_tilde = _is_hpd(bundle.m_tilde_inv, tol.eig)
    hat_hpd, w_hat = _is_hpd(bundle.m_hat_inv, tol.eig)
    tilde_unit, s_tilde = _in_unit_interval(bundle.m_tilde_inv @ bm.b, bm)
    hat_unit, s_hat = _in_unit_interval(bundle.m_hat_inv @ bm.b, bm)
    verdicts = {
        "norm_below_one": bool(bundle.smoothing_norm < 1),
        "m_tilde_hpd": tilde_hpd,
        "spectrum_m_tilde_b_in_unit": tilde_unit,
        "m_hat_hpd": hat_hpd,
        "spectrum_m_hat_b_in_unit": hat_unit,
    }
    data = {
        "smoothing_norm": bundle.smoothing_norm,
        "eig_m_tilde_inv": w_tilde,
        "eig_m_hat_inv": w_hat,
        "spectrum_m_tilde_b": s_tilde,
        "spectrum_m_hat_b": s_hat,
    }
    return {"verdicts": verdicts, "data": data, "consistent": len(set(verdicts.values())) == 1}


def smoothing_spectrum(bundle: SmootherBundle, B, tol: ToleranceProfile = DEFAULT_TOL) -> SmoothingSpectrum:
    bm = as_hpd(B, tol)
    mus, q = np.linalg.eigh(_herm(bm.sqrt @ bundle.m_hat_inv @ bm.sqrt))
    return SmoothingSpectrum(mus=mus, V=bm.inv_sqrt @ q)


def eigenvalue_map(lam):
    """mu = 1 - |lam - 1|^2."""
    return 1 - np.abs(np.asarray(lam) - 1) ** 2


def eigenvalue_map_check(A, M_inv, B, tol: ToleranceProfile = DEFAULT_TOL, bundle=None) -> dict:
    """For B-normal M^{-1}A, every eigenpair (lam, z) gives M_hat^{-1}B z = (1 - |lam-1|^2) z.

    Returns the eigenvalues, mapped values and the largest relative residual
    ||M_hat^{-1}B z - mu z||_B / ||z||_B.  Raises NotBNormal.
    """
    bm = as_hpd(B, tol)
    k = as_matrix(M_inv, "M_inv", square=True) @ as_matrix(A, "A", square=True)
    ok, resid = is_b_normal(k, bm, tol.eq)
    if not ok:
        raise NotBNormal(resid)
    bundle = bundle or build_smoother_bundle(A, M_inv, bm, tol)
    u, lam = b_unitary_diagonalize(k, bm, tol.eq)
    mu = eigenvalue_map(lam)
    mhb = bundle.m_hat_inv @ bm.b
    devs = [b_vec_norm(mhb @ z - m * z, bm) / b_vec_norm(z, bm) for z, m in zip(u.T, mu)]
    return {"lambdas": lam, "mus": mu, "max_deviation": float(max(devs))}
