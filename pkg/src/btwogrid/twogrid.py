"""Two-grid error propagation operators and optimal transfer operators.

With K = M^{-1}A and S = I - K,

    E_plus(nu1, nu2) = (S^+)^nu2 (I - Pi_A(P, R)) S^nu1
    E(nu1, nu2)      = S^nu2     (I - Pi_A(P, R)) S^nu1

where S^+ is the B-adjoint.  Two optimal constructions are provided:

* ``hat``:   P from the eigenvectors of M_hat^{-1} B with the smallest
  eigenvalues, R = A^{-H} B P.  Valid for any B when the smoothing assumption
  holds; the norm guarantee covers (nu1, nu2) in {(0,1), (1,0), (1,1)}.
* ``sharp``: P, R from right/left eigenvectors of K ordered by |1 - lam|
  descending.  The norm guarantee needs K B-normal and B block-structured
  along the coarse/fine split, but holds for every (nu1, nu2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bnormal import AdmissibleB, EigenStructure, diagonalize, sample_admissible_b
from .bspace import (
    DEFAULT_TOL,
    HpdMatrix,
    ToleranceProfile,
    as_hpd,
    as_matrix,
    b_adjoint,
    b_mat_norm,
    is_b_normal,
    is_b_orthogonal_matrix,
)
from .coarse import TransferPair, coarse_grid_projection, make_transfer_pair, r_star
from .errors import (
    DimensionMismatch,
    OrderingAmbiguous,
    ProjectionNotBOrthogonal,
    RankDeficient,
    SingularCoarseMatrix,
    SmoothingAssumptionViolated,
)
from .smoother import build_smoother_bundle, smoothing_spectrum

__all__ = [
    "TwoGridConfig",
    "GeneralizedEigenPair",
    "HatTransfers",
    "SharpTransfers",
    "SweepResult",
    "GUARANTEED_HAT_STEPS",
    "e_plus",
    "e_south",
    "generalized_eigenpairs",
    "sharp_admissible_b",
    "optimal_transfers_hat",
    "optimal_transfers_sharp",
    "random_transfer_pair",
    "optimality_sweep",
    "e_plus_property_check",
]

GUARANTEED_HAT_STEPS = frozenset({(0, 1), (1, 0), (1, 1)})


@dataclass(frozen=True, eq=False)
class TwoGridConfig:
    A: np.ndarray
    M_inv: np.ndarray
    B: HpdMatrix
    nu1: int = 1
    nu2: int = 1
    n_c: int = 1
    tol: ToleranceProfile = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "A", as_matrix(self.A, "A", square=True))
        object.__setattr__(self, "M_inv", as_matrix(self.M_inv, "M_inv", square=True))
        object.__setattr__(self, "B", as_hpd(self.B, self.tol))
        n = self.A.shape[0]
        if self.M_inv.shape[0] != n or self.B.n != n:
            raise DimensionMismatch("A, M_inv and B must have the same size")
        if self.nu1 < 0 or self.nu2 < 0:
            raise ValueError("smoothing step counts must be nonnegative")
        if not 1 <= self.n_c < n:
            raise DimensionMismatch(f"need 1 <= n_c < n, got n_c={self.n_c}, n={n}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def K(self) -> np.ndarray:
        return self.M_inv @ self.A

    def with_(self, **changes) -> "TwoGridConfig":
        values = dict(A=self.A, M_inv=self.M_inv, B=self.B, nu1=self.nu1, nu2=self.nu2, n_c=self.n_c, tol=self.tol)
        values.update(changes)
        return TwoGridConfig(**values)


def _power(x, nu):
    # nu is small; repeated products keep the operator exactly as written
    out = np.eye(x.shape[0], dtype=complex)
    for _ in range(nu):
        out = x @ out
    return out


def _coarse_error(cfg, tp):
    return np.eye(cfg.n) - coarse_grid_projection(cfg.A, tp, cfg.tol).pi


def e_plus(cfg: TwoGridConfig, tp: TransferPair, nu1=None, nu2=None) -> np.ndarray:
    """(I - K^+)^nu2 (I - Pi_A) (I - K)^nu1."""
    nu1 = cfg.nu1 if nu1 is None else nu1
    nu2 = cfg.nu2 if nu2 is None else nu2
    s = np.eye(cfg.n) - cfg.K
    s_adj = b_adjoint(s, cfg.B)
    return _power(s_adj, nu2) @ _coarse_error(cfg, tp) @ _power(s, nu1)


def e_south(cfg: TwoGridConfig, tp: TransferPair, nu1=None, nu2=None) -> np.ndarray:
    """(I - K)^nu2 (I - Pi_A) (I - K)^nu1."""
    nu1 = cfg.nu1 if nu1 is None else nu1
    nu2 = cfg.nu2 if nu2 is None else nu2
    s = np.eye(cfg.n) - cfg.K
    return _power(s, nu2) @ _coarse_error(cfg, tp) @ _power(s, nu1)


@dataclass(frozen=True, eq=False)
class GeneralizedEigenPair:
    """Right/left eigenvectors of A z = lam M z, ordered by |1 - lam| descending.

    Normalized so that V_l^H M V_r = I, hence D_M = I and D_A = diag(Lambda).
    """

    V_r: np.ndarray
    V_l: np.ndarray
    Lambda: np.ndarray
    D_A: np.ndarray
    D_M: np.ndarray
    structure: EigenStructure

    def boundary_splits_group(self, n_c: int) -> bool:
        return any(g[0] < n_c <= g[-1] for g in self.structure.groups)


def generalized_eigenpairs(A, M_inv, tol: ToleranceProfile = DEFAULT_TOL) -> GeneralizedEigenPair:
    """Raises Defective when M^{-1}A is not diagonalizable to working precision."""
    a = as_matrix(A, "A", square=True)
    m_inv = as_matrix(M_inv, "M_inv", square=True)
    es = diagonalize(m_inv @ a, tol)
    reps = es.representatives
    keys = sorted(
        range(len(es.groups)),
        key=lambda gi: (-round(abs(1 - reps[gi]) / tol.group) * tol.group, np.angle(reps[gi])),
    )
    order = [i for gi in keys for i in es.groups[gi]]
    es = es.permuted(order)
    v_r = es.W
    v_r_inv = np.linalg.solve(v_r, np.eye(es.n))
    v_l = (v_r_inv @ m_inv).conj().T
    d_a = v_l.conj().T @ a @ v_r
    off = d_a - np.diag(np.diag(d_a))
    if np.linalg.norm(off) > tol.eig * es.cond_w * np.linalg.norm(np.diag(d_a)):
        raise RankDeficient("left/right eigenvectors do not diagonalize A")
    return GeneralizedEigenPair(
        V_r=v_r,
        V_l=v_l,
        Lambda=es.lambdas,
        D_A=np.diag(np.diag(d_a)),
        D_M=np.eye(es.n),
        structure=es,
    )


def sharp_admissible_b(A, M_inv, n_c: int, seed=None, tol: ToleranceProfile = DEFAULT_TOL) -> AdmissibleB:
    """Random B = V_r^{-H} D^{-1} V_r^{-1}, D block diagonal along eigenvalue groups and the n_c split."""
    gep = generalized_eigenpairs(A, M_inv, tol)
    return sample_admissible_b(gep.structure.split(n_c), seed, tol)


@dataclass(frozen=True, eq=False)
class HatTransfers:
    pair: TransferPair
    mus: np.ndarray
    V: np.ndarray
    predicted_norm_sq: float
    guaranteed: bool

    @property
    def predicted_norm(self) -> float:
        return float(np.sqrt(self.predicted_norm_sq))


def optimal_transfers_hat(cfg: TwoGridConfig) -> HatTransfers:
    """P_hat from the n_c smallest eigenvalues of M_hat^{-1}B, R_hat = A^{-H} B P_hat.

    ``predicted_norm_sq`` is (1 - mu_{n_c+1})^(nu1+nu2); ``guaranteed`` says
    whether (nu1, nu2) is covered by the optimality result.
    """
    bundle = build_smoother_bundle(cfg.A, cfg.M_inv, cfg.B, cfg.tol)
    if not bundle.smoothing_norm < 1:
        raise SmoothingAssumptionViolated(bundle.smoothing_norm)
    spec = smoothing_spectrum(bundle, cfg.B, cfg.tol)
    p_hat = spec.V[:, : cfg.n_c]
    r_hat = r_star(cfg.A, p_hat, cfg.B, cfg.tol)
    pair = make_transfer_pair(p_hat, r_hat, cfg.A, cfg.tol)
    mu_next = float(spec.mus[cfg.n_c])
    return HatTransfers(
        pair=pair,
        mus=spec.mus,
        V=spec.V,
        predicted_norm_sq=(1 - mu_next) ** (cfg.nu1 + cfg.nu2),
        guaranteed=(cfg.nu1, cfg.nu2) in GUARANTEED_HAT_STEPS,
    )


@dataclass(frozen=True, eq=False)
class SharpTransfers:
    pair: TransferPair
    eig: GeneralizedEigenPair
    predicted_norm: float
    spectral_radius: float
    measured_norm: float
    k_b_normal: bool
    projection_b_orthogonal: bool

    @property
    def applicable(self) -> bool:
        """True when B satisfies the hypotheses behind ``predicted_norm``."""
        return self.k_b_normal and self.projection_b_orthogonal


def optimal_transfers_sharp(cfg: TwoGridConfig) -> SharpTransfers:
    """P#, R# from the leading right/left eigenvectors of M^{-1}A.

    The predicted ||E||_B = |1 - lam_{n_c+1}|^(nu1+nu2) holds when ``applicable``;
    the spectral radius of E always equals it.  Raises Defective or
    OrderingAmbiguous (an eigenvalue group straddles the coarse/fine split).
    """
    gep = generalized_eigenpairs(cfg.A, cfg.M_inv, cfg.tol)
    if gep.boundary_splits_group(cfg.n_c):
        raise OrderingAmbiguous(f"a repeated eigenvalue straddles position n_c = {cfg.n_c}")
    pair = make_transfer_pair(gep.V_r[:, : cfg.n_c], gep.V_l[:, : cfg.n_c], cfg.A, cfg.tol)
    e = e_south(cfg, pair)
    predicted = float(abs(1 - gep.Lambda[cfg.n_c]) ** (cfg.nu1 + cfg.nu2))
    pi = coarse_grid_projection(cfg.A, pair, cfg.tol).pi
    return SharpTransfers(
        pair=pair,
        eig=gep,
        predicted_norm=predicted,
        spectral_radius=float(np.max(np.abs(np.linalg.eigvals(e)))),
        measured_norm=b_mat_norm(e, cfg.B),
        k_b_normal=is_b_normal(cfg.K, cfg.B, cfg.tol.eq)[0],
        projection_b_orthogonal=is_b_orthogonal_matrix(pi, cfg.B, cfg.tol.eig)[0],
    )


def _gaussian(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_transfer_pair(
    rng, A, n_c: int, tol: ToleranceProfile = DEFAULT_TOL, max_resamples: int = 10, center=None, spread=1.0
):
    """Complex Gaussian (P, R) with nonsingular R^H A P, or None after ``max_resamples`` failures.

    With ``center`` the draw is center + spread * noise, with noise scaled to
    the column norms of the center pair.
    """
    n = A.shape[0]
    for _ in range(max_resamples + 1):
        if center is None:
            p = _gaussian(rng, (n, n_c))
            r = _gaussian(rng, (n, n_c))
        else:
            p = center.P + spread * np.linalg.norm(center.P, axis=0) * _gaussian(rng, (n, n_c)) / np.sqrt(2 * n)
            r = center.R + spread * np.linalg.norm(center.R, axis=0) * _gaussian(rng, (n, n_c)) / np.sqrt(2 * n)
        try:
            return make_transfer_pair(p, r, A, tol)
        except (RankDeficient, SingularCoarseMatrix):
            continue
    return None


@dataclass(frozen=True, eq=False)
class SweepResult:
    norms: np.ndarray
    min_norm: float
    optimal_norm: float
    skipped: int
    certified: bool
    histogram: tuple = field(repr=False)


def optimality_sweep(
    cfg: TwoGridConfig,
    optimal_norm: float,
    trials: int,
    seed=None,
    operator: str = "plus",
    include_pairs=(),
    center: TransferPair | None = None,
    spread: float = 1.0,
) -> SweepResult:
    """Evaluate the error-operator B-norm on random transfer pairs.

    Each trial has its own generator spawned from ``seed``, so results do not
    depend on evaluation order.  ``include_pairs`` are evaluated in addition
    to the random draws; ``center``/``spread`` draw perturbations of a given
    pair instead of unstructured pairs.  Certifies min >= optimal_norm - tol.opt.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if operator not in ("plus", "south"):
        raise ValueError(f"unknown operator {operator!r}")
    apply = e_plus if operator == "plus" else e_south
    norms, skipped = [], 0
    for tp in include_pairs:
        norms.append(b_mat_norm(apply(cfg, tp), cfg.B))
    for child in np.random.SeedSequence(seed).spawn(trials):
        tp = random_transfer_pair(
            np.random.default_rng(child), cfg.A, cfg.n_c, cfg.tol, center=center, spread=spread
        )
        if tp is None:
            skipped += 1
            continue
        try:
            norms.append(b_mat_norm(apply(cfg, tp), cfg.B))
        except SingularCoarseMatrix:
            skipped += 1
    norms = np.array(norms)
    min_norm = float(norms.min()) if norms.size else float("nan")
    hist = np.histogram(norms, bins=10) if norms.size else (np.array([]), np.array([]))
    return SweepResult(
        norms=norms,
        min_norm=min_norm,
        optimal_norm=float(optimal_norm),
        skipped=skipped,
        certified=bool(norms.size and min_norm >= optimal_norm - cfg.tol.opt),
        histogram=(hist[0].tolist(), hist[1].tolist()),
    )


def e_plus_property_check(cfg: TwoGridConfig, tp: TransferPair, nu=None, operator: str = "plus") -> dict:
    """Adjoint and norm identities of E(nu, nu), E(nu, 0), E(0, nu) for B-orthogonal Pi_A.

    Returns residuals keyed by property and an overall ``passed`` flag.  With
    ``operator="south"`` the same identities are checked for E, which needs
    M^{-1}A to be B-orthogonal.
    """
    nu = cfg.nu1 if nu is None else nu
    pi = coarse_grid_projection(cfg.A, tp, cfg.tol).pi
    ok, resid = is_b_orthogonal_matrix(pi, cfg.B, cfg.tol.eig)
    if not ok:
        raise ProjectionNotBOrthogonal(f"Pi_A is not B-orthogonal (residual {resid:.3e})")
    apply = e_plus if operator == "plus" else e_south
    e_nn = apply(cfg, tp, nu, nu)
    e_n0 = apply(cfg, tp, nu, 0)
    e_0n = apply(cfg, tp, 0, nu)
    bm = cfg.B
    b_inv = bm.inv()

    def rel(x, y):
        return float(np.linalg.norm(x - y) / max(np.linalg.norm(y), 1.0))

    norm_nn = b_mat_norm(e_nn, bm)
    norm_n0 = b_mat_norm(e_n0, bm)
    norm_0n = b_mat_norm(e_0n, bm)
    residuals = {
        "self_adjoint": rel(b_adjoint(e_nn, bm), e_nn),
        "adjoint_pre_post": max(rel(b_adjoint(e_n0, bm), e_0n), rel(b_adjoint(e_0n, bm), e_n0)),
        "b_inverse_conjugation": max(
            rel(b_inv @ e_n0.conj().T, e_0n @ b_inv), rel(b_inv @ e_0n.conj().T, e_n0 @ b_inv)
        ),
        "norm_split": max(abs(norm_nn - norm_n0**2), abs(norm_nn - norm_0n**2)),
    }
    limit = cfg.tol.eig
    return {
        "residuals": residuals,
        "norms": {"nu_nu": norm_nn, "nu_0": norm_n0, "0_nu": norm_0n},
        "tolerance": limit,
        "passed": all(v <= limit for v in residuals.values()),
    }
