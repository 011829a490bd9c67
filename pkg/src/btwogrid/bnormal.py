"""B-normality: the five equivalent characterizations and the set of admissible B.

A is B-normal iff T = B^{1/2} A B^{-1/2} is normal.  Each characterization is
tested through a different computation so that their verdicts can be compared
against one another:

1. commutator       -- :func:`btwogrid.bspace.is_b_normal`
2. polynomial       -- :func:`adjoint_polynomial_check`
3. B-unitary diag.  -- :func:`b_unitary_diagonalize` (complex Schur form)
4. eigenvectors     -- :func:`eigenvector_sharing_check`
5. structure of B   -- :func:`b_structure_check`
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .bspace import DEFAULT_TOL, HpdMatrix, ToleranceProfile, as_hpd, as_matrix, b_similar, is_b_normal
from .errors import Defective, DimensionMismatch, NotBNormal

__all__ = [
    "EigenStructure",
    "AdmissibleB",
    "group_eigenvalues",
    "diagonalize",
    "eigenstructure_from",
    "conjugating_polynomial",
    "admissible_b",
    "sample_admissible_b",
    "random_hpd_block",
    "b_unitary_diagonalize",
    "adjoint_polynomial_check",
    "eigenvector_sharing_check",
    "b_structure_check",
    "characterize_b_normality",
]


@dataclass(frozen=True, eq=False)
class EigenStructure:
    """Eigendecomposition with equal eigenvalues gathered into contiguous groups.

    Columns of ``W`` have unit 2-norm.  ``groups`` is a tuple of index tuples
    covering ``range(n)`` in order.
    """

    W: np.ndarray
    lambdas: np.ndarray
    groups: tuple
    cond_w: float

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def representatives(self) -> np.ndarray:
        return np.array([self.lambdas[list(g)].mean() for g in self.groups])

    @property
    def block_sizes(self) -> list:
        return [len(g) for g in self.groups]

    def permuted(self, order) -> "EigenStructure":
        """Reorder eigenpairs; ``order`` must keep every group contiguous."""
        order = np.asarray(order)
        pos = np.empty_like(order)
        pos[order] = np.arange(len(order))
        groups = sorted((tuple(sorted(int(pos[i]) for i in g)) for g in self.groups), key=lambda g: g[0])
        for g in groups:
            if g[-1] - g[0] != len(g) - 1:
                raise ValueError("permutation splits an eigenvalue group")
        return EigenStructure(self.W[:, order], self.lambdas[order], tuple(groups), self.cond_w)

    def split(self, boundary: int) -> "EigenStructure":
        """Refine the grouping so that no group straddles ``boundary``."""
        groups = []
        for g in self.groups:
            left = tuple(i for i in g if i < boundary)
            right = tuple(i for i in g if i >= boundary)
            groups.extend(part for part in (left, right) if part)
        return EigenStructure(self.W, self.lambdas, tuple(groups), self.cond_w)


def group_eigenvalues(lambdas, tol: float = DEFAULT_TOL.group):
    """Single-linkage clusters of eigenvalues, |a - b| <= tol * (1 + max(|a|, |b|))."""
    lambdas = np.asarray(lambdas)
    n = len(lambdas)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            a, b = lambdas[i], lambdas[j]
            if abs(a - b) <= tol * (1 + max(abs(a), abs(b))):
                parent[find(j)] = find(i)
    clusters = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    return sorted((tuple(c) for c in clusters.values()), key=lambda c: c[0])


def _from_eig(a, lambdas, w, tol: ToleranceProfile) -> EigenStructure:
    w = w / np.linalg.norm(w, axis=0)
    cond_w = float(np.linalg.cond(w))
    if not np.isfinite(cond_w) or cond_w > tol.kappa_max:
        raise Defective(cond_w if np.isfinite(cond_w) else np.inf)
    clusters = group_eigenvalues(lambdas, tol.group)
    order = [i for c in clusters for i in c]
    w, lambdas = w[:, order], lambdas[order]
    groups, start = [], 0
    for c in clusters:
        groups.append(tuple(range(start, start + len(c))))
        start += len(c)
    if a is not None:
        resid = np.linalg.norm(a @ w - w * lambdas)
        if resid > tol.eig * max(np.linalg.norm(a), 1.0) * cond_w:
            raise Defective(cond_w)
    return EigenStructure(w, lambdas, tuple(groups), cond_w)


def diagonalize(A, tol: ToleranceProfile = DEFAULT_TOL) -> EigenStructure:
    """General eigendecomposition with grouped eigenvalues; raises Defective."""
    a = as_matrix(A, "A", square=True)
    lambdas, w = np.linalg.eig(a)
    return _from_eig(a, lambdas, w, tol)


def eigenstructure_from(W, lambdas, tol: ToleranceProfile = DEFAULT_TOL) -> EigenStructure:
    """Wrap a known eigenvector matrix (columns keep their scaling)."""
    w = as_matrix(W, "W", square=True)
    lambdas = np.asarray(lambdas, dtype=complex)
    cond_w = float(np.linalg.cond(w))
    if cond_w > tol.kappa_max:
        raise Defective(cond_w)
    clusters = group_eigenvalues(lambdas, tol.group)
    order = [i for c in clusters for i in c]
    if order != list(range(len(lambdas))):
        raise ValueError("equal eigenvalues must already be contiguous")
    return EigenStructure(w, lambdas, tuple(clusters), cond_w)


@dataclass(frozen=True, eq=False)
class AdmissibleB:
    base: EigenStructure
    D: np.ndarray
    B: HpdMatrix


def _check_block_diagonal(d, groups, tol):
    mask = np.zeros(d.shape, dtype=bool)
    for g in groups:
        mask[np.ix_(g, g)] = True
    if np.linalg.norm(d[~mask]) > tol * np.linalg.norm(d):
        raise ValueError("D does not have the block structure of the eigenvalue groups")


def admissible_b(es: EigenStructure, D, tol: ToleranceProfile = DEFAULT_TOL) -> AdmissibleB:
    """B = (W D W^H)^{-1} for a given block-diagonal HPD D."""
    d = as_matrix(D, "D", square=True)
    if d.shape[0] != es.n:
        raise DimensionMismatch("D and W sizes differ")
    _check_block_diagonal(d, es.groups, tol.eq)
    w_inv = np.linalg.solve(es.W, np.eye(es.n))
    b = w_inv.conj().T @ np.linalg.solve(d, w_inv)
    b = (b + b.conj().T) / 2
    return AdmissibleB(es, d, HpdMatrix.from_array(b, tol))


def random_hpd_block(rng, k: int, shift: float = 1e-3) -> np.ndarray:
    g = (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / np.sqrt(2)
    return g @ g.conj().T + shift * np.eye(k)


def sample_admissible_b(es: EigenStructure, seed=None, tol: ToleranceProfile = DEFAULT_TOL) -> AdmissibleB:
    """Random member of the set of B for which the matrix behind ``es`` is B-normal."""
    rng = np.random.default_rng(seed)
    d = np.zeros((es.n, es.n), dtype=complex)
    for g in es.groups:
        d[np.ix_(g, g)] = random_hpd_block(rng, len(g))
    return admissible_b(es, d, tol)


def _schur_in_b_geometry(A, bm):
    t = b_similar(A, bm)
    tri, z = sla.schur(t, output="complex")
    scale = np.linalg.norm(tri)
    departure = float(np.linalg.norm(np.triu(tri, 1)) / scale) if scale else 0.0
    return tri, z, departure


def b_unitary_diagonalize(A, B, tol: float = DEFAULT_TOL.eq):
    """A = U diag(lam) U^{-1} with U^H B U = I.

    Computed from the complex Schur form of T = B^{1/2} A B^{-1/2}; T is normal
    exactly when its triangular factor is diagonal.  Raises NotBNormal when the
    strictly upper part exceeds ``tol`` relative to the whole factor.
    """
    bm = as_hpd(B)
    tri, z, departure = _schur_in_b_geometry(A, bm)
    if departure > tol:
        raise NotBNormal(departure)
    return bm.inv_sqrt @ z, np.diag(tri).copy()


def _newton_coefficients(nodes, values):
    coef = np.array(values, dtype=complex)
    for level in range(1, len(nodes)):
        coef[level:] = (coef[level:] - coef[level - 1 : -1]) / (nodes[level:] - nodes[: len(nodes) - level])
    return coef


def _newton_eval_matrix(coef, nodes, x):
    n = x.shape[0]
    eye = np.eye(n, dtype=complex)
    result = coef[-1] * eye
    for k in range(len(coef) - 2, -1, -1):
        result = result @ (x - nodes[k] * eye) + coef[k] * eye
    return result


def conjugating_polynomial(lambdas):
    """Newton form of p with p(lam) = conj(lam) on the given distinct nodes.

    Returns ``(center, scale, coef, nodes)`` for the variable (z - center) / scale.
    """
    lambdas = np.asarray(lambdas, dtype=complex)
    center = lambdas.mean()
    scale = np.max(np.abs(lambdas - center)) or 1.0
    nodes = (lambdas - center) / scale
    return center, scale, _newton_coefficients(nodes, lambdas.conj()), nodes


def adjoint_polynomial_check(A, B, tol: float = DEFAULT_TOL.eig, tol_profile: ToleranceProfile = DEFAULT_TOL):
    """Does the interpolant of conj on the spectrum of A reproduce A^+?

    Degree is (#distinct eigenvalues - 1).  Both sides are compared after the
    similarity B^{1/2}(.)B^{-1/2}, so A^+ becomes T^H.  Raises Defective.
    """
    bm = as_hpd(B, tol_profile)
    es = diagonalize(A, tol_profile)
    center, scale, coef, nodes = conjugating_polynomial(es.representatives)
    t = b_similar(A, bm)
    x = (t - center * np.eye(bm.n)) / scale
    p_t = _newton_eval_matrix(coef, nodes, x)
    residual = float(np.linalg.norm(p_t - t.conj().T) / max(np.linalg.norm(t), np.finfo(float).tiny))
    return residual <= tol, residual


def eigenvector_sharing_check(A, B, tol: float = DEFAULT_TOL.eig):
    """Every eigenvector x of A satisfies A^+ x = conj(lam) x (residual in the B-norm)."""
    bm = as_hpd(B)
    a = as_matrix(A, "A", square=True)
    lambdas, w = np.linalg.eig(a)
    t = b_similar(a, bm)
    y = bm.sqrt @ w
    y = y / np.linalg.norm(y, axis=0)
    resid = np.linalg.norm(t.conj().T @ y - y * lambdas.conj(), axis=0)
    residual = float(resid.max() / max(np.linalg.norm(t, 2), np.finfo(float).tiny))
    return residual <= tol, residual


def b_structure_check(A, B, tol: float = DEFAULT_TOL.eig, tol_profile: ToleranceProfile = DEFAULT_TOL):
    """A diagonalizable and W^{-1} B^{-1} W^{-H} block diagonal along eigenvalue groups.

    The residual is the largest normalized off-block entry |C_ij| / sqrt(C_ii C_jj),
    which does not depend on how the eigenvectors are scaled.
    """
    bm = as_hpd(B, tol_profile)
    try:
        es = diagonalize(A, tol_profile)
    except Defective:
        return False, np.inf
    w_inv = np.linalg.solve(es.W, np.eye(es.n))
    c = w_inv @ bm.solve(w_inv.conj().T)
    diag = np.sqrt(np.abs(np.diag(c)))
    coherence = np.abs(c) / np.outer(diag, diag)
    for g in es.groups:
        coherence[np.ix_(g, g)] = 0.0
    residual = float(coherence.max()) if es.n > 1 else 0.0
    return residual <= tol, residual


def characterize_b_normality(A, B, tol: ToleranceProfile = DEFAULT_TOL) -> dict:
    """Evaluate all five characterizations; returns ``{name: (verdict, residual)}``."""
    bm = as_hpd(B, tol)
    out = {"commutator": is_b_normal(A, bm, tol.eq)}
    try:
        out["polynomial"] = adjoint_polynomial_check(A, bm, tol.eig, tol)
    except Defective as exc:
        out["polynomial"] = (False, exc.cond_w)
    departure = _schur_in_b_geometry(A, bm)[2]
    out["b_unitary_diagonalizable"] = (departure <= tol.eq, departure)
    out["eigenvector_sharing"] = eigenvector_sharing_check(A, bm, tol.eig)
    out["b_structure"] = b_structure_check(A, bm, tol.eig, tol)
    return out
