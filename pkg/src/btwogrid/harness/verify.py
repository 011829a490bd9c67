"""The verification pipeline: every library check run against one problem.

Checks run in a fixed order and each one is recorded exactly once.  An
exception inside a check becomes a ``fail`` record carrying the error
message; the pipeline itself never aborts.
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy

from .. import __version__
from ..bnormal import characterize_b_normality, diagonalize
from ..bspace import b_adjoint, b_inner, b_mat_norm, is_b_normal, is_b_orthogonal_matrix
from ..coarse import (
    check_projection_b_orthogonality,
    coarse_grid_projection,
    make_transfer_pair,
    p_star,
    r_star,
)
from ..errors import BTwoGridError, Defective, OrderingAmbiguous, SmoothingAssumptionViolated
from ..smoother import build_smoother_bundle, eigenvalue_map_check, smoothing_assumption_report, smoothing_spectrum
from ..twogrid import (
    e_plus,
    e_plus_property_check,
    e_south,
    optimal_transfers_hat,
    optimal_transfers_sharp,
    optimality_sweep,
    random_transfer_pair,
)
from .problems import BUILTIN_EXAMPLES, Problem, ProblemSpec, builtin_display, load_problem
from .report import VerificationReport

__all__ = ["run_verification", "ANCHORS", "ATTAIN_TOL"]

# absolute tolerance for "the constructed optimum attains its predicted norm"
ATTAIN_TOL = 1e-10
# entrywise tolerance for reproducing displayed example matrices
DISPLAY_TOL = 1e-12

ANCHORS = {
    "bspace": "B-inner product and B-adjoint identities",
    "bnormal": "equivalent characterizations of B-normality",
    "coarse": "equivalent conditions for a B-orthogonal coarse-grid correction",
    "smoothing": "equivalent forms of the smoothing assumption",
    "eigmap": "eigenvalue map mu = 1 - |lambda - 1|^2 for B-normal M^-1 A",
    "eplus": "adjoint and norm identities of the error operators",
    "hat": "optimal hat transfers and their E_plus norm",
    "sharp": "optimal sharp transfers and their E norm",
    "sweep_hat": "optimality of hat transfers among all transfer pairs",
    "sweep_sharp": "optimality of sharp transfers among all transfer pairs",
    "example": "worked example {}",
}


def _rel(x, y):
    return float(np.linalg.norm(x - y) / max(np.linalg.norm(y), 1.0))


def _max_abs(x, y):
    return float(np.max(np.abs(np.asarray(x) - np.asarray(y))))


def _parallel(x, y):
    """sin of the angle between two vectors (0 when parallel)."""
    x = np.ravel(x) / np.linalg.norm(x)
    y = np.ravel(y) / np.linalg.norm(y)
    # the residual of projecting y onto x keeps full relative accuracy
    return float(np.linalg.norm(y - x * np.vdot(x, y)))


class _Runner:
    def __init__(self, problem: Problem):
        self.p = problem
        self.cfg = problem.cfg
        self.tol = problem.cfg.tol
        spec = problem.spec
        self.seed = spec.seed
        self.report = VerificationReport(
            problem=problem.label,
            environment={
                "seed": spec.seed,
                "n": self.cfg.n,
                "n_c": self.cfg.n_c,
                "nu1": self.cfg.nu1,
                "nu2": self.cfg.nu2,
                "trials": spec.trials,
                "b_mode": spec.resolved_b_mode,
                "omega": problem.omega,
                "tolerances": dict(self.tol.__dict__),
                "versions": {"btwogrid": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
            },
        )
        self.k_b_normal = False
        self.hat = None
        self.sharp = None

    def guarded(self, check_id, anchor, fn):
        try:
            fn()
        except (BTwoGridError, np.linalg.LinAlgError) as exc:
            self.report.add(check_id, anchor, {}, None, "fail", f"{type(exc).__name__}: {exc}")

    def rng(self, salt: int):
        return np.random.default_rng([self.seed, salt])

    # --- individual suites -------------------------------------------------

    def bspace_suite(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["bspace"]
        bm = cfg.B
        rep.add("bspace.hpd_certificate", a, {"n": bm.n, "cond_B": bm.cond, "lambda_min": bm.d[0]}, None, True)
        rng = self.rng(1)
        x, y = (rng.standard_normal((2, cfg.n)) + 1j * rng.standard_normal((2, cfg.n)))
        sym = abs(b_inner(x, y, bm) - np.conj(b_inner(y, x, bm))) / (abs(b_inner(x, y, bm)) + 1)
        rep.add("bspace.inner_conjugate_symmetry", a, {"residual": sym}, self.tol.eq, sym <= self.tol.eq)
        k = cfg.K
        k_adj = b_adjoint(k, bm)
        lhs = b_inner(k @ x, y, bm)
        rhs = b_inner(x, k_adj @ y, bm)
        adj = abs(lhs - rhs) / max(abs(lhs), 1.0)
        rep.add("bspace.adjoint_identity", a, {"residual": adj}, self.tol.eig, adj <= self.tol.eig)
        inv = _rel(b_adjoint(k_adj, bm), k)
        rep.add("bspace.adjoint_involution", a, {"residual": inv}, self.tol.eig, inv <= self.tol.eig)
        # ||K||_B^2 is the largest eigenvalue of the pencil (K^H B K, B)
        gen = float(np.sqrt(max(scipy.linalg.eigvalsh(k.conj().T @ bm.b @ k, bm.b)[-1], 0)))
        nrm = b_mat_norm(k, bm)
        diff = abs(nrm - gen) / max(nrm, 1.0)
        rep.add("bspace.norm_pencil", a, {"b_norm": nrm, "pencil": gen, "residual": diff}, self.tol.eig,
                diff <= self.tol.eig)

    def bnormal_suite(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["bnormal"]
        ok, resid = is_b_normal(cfg.K, cfg.B, self.tol.eq)
        self.k_b_normal = ok
        try:
            es = diagonalize(cfg.K, self.tol)
        except Defective as exc:
            rep.skip("bnormal.characterizations", a, f"M^-1 A is defective (cond(W) = {exc.cond_w:.3e})",
                     {"b_normal": False, "commutator_residual": resid})
            return
        res = characterize_b_normality(cfg.K, cfg.B, self.tol)
        verdicts = {k: v[0] for k, v in res.items()}
        agree = len(set(verdicts.values())) == 1
        rep.add("bnormal.characterizations", a,
                {"b_normal": ok, "cond_W": es.cond_w, "verdicts": verdicts,
                 "residuals": {k: v[1] for k, v in res.items()}},
                self.tol.eig, agree, "" if agree else "characterizations disagree")

    def coarse_suite(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["coarse"]
        rng = self.rng(2)
        n, nc = cfg.n, cfg.n_c

        def record(label, tp, expect_unit=False):
            out = check_projection_b_orthogonality(cfg.A, tp, cfg.B, self.tol)
            agree = len(set(out["verdicts"].values())) == 1
            ok = agree and (not expect_unit or abs(out["b_norm"] - 1) <= self.tol.eig)
            reason = "" if agree else "conditions disagree"
            if agree and not ok:
                reason = "||Pi||_B != 1 for a compatible pair"
            rep.add(f"coarse.equivalences.{label}", a,
                    {"verdicts": out["verdicts"], "residuals": out["residuals"], "b_norm": out["b_norm"]},
                    out["tolerances"], ok, reason)

        r = rng.standard_normal((n, nc)) + 1j * rng.standard_normal((n, nc))
        self.guarded("coarse.equivalences.p_star", a,
                     lambda: record("p_star", make_transfer_pair(p_star(cfg.A, r, cfg.B, self.tol), r, cfg.A,
                                                                 self.tol), expect_unit=True))
        tp = random_transfer_pair(rng, cfg.A, nc, self.tol)
        if tp is None:
            rep.skip("coarse.equivalences.oblique", a, "no nonsingular random coarse matrix found")
        else:
            self.guarded("coarse.equivalences.oblique", a, lambda: record("oblique", tp))

    def smoothing_suite(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["smoothing"]
        bundle = build_smoother_bundle(cfg.A, cfg.M_inv, cfg.B, self.tol)
        out = smoothing_assumption_report(bundle, cfg.A, cfg.M_inv, cfg.B, self.tol)
        d = out["data"]
        rep.add("smoother.assumption_equivalences", a,
                {"verdicts": out["verdicts"], "smoothing_norm": d["smoothing_norm"],
                 "spectrum_m_hat_b": [float(d["spectrum_m_hat_b"][0]), float(d["spectrum_m_hat_b"][-1])],
                 "spectrum_m_tilde_b": [float(d["spectrum_m_tilde_b"][0]), float(d["spectrum_m_tilde_b"][-1])]},
                self.tol.eig, out["consistent"], "" if out["consistent"] else "forms disagree")

    def eigmap_suite(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["eigmap"]
        if not self.k_b_normal:
            rep.skip("smoother.eigenvalue_map", a, "M^-1 A is not B-normal")
            return
        out = eigenvalue_map_check(cfg.A, cfg.M_inv, cfg.B, self.tol)
        rep.add("smoother.eigenvalue_map", a,
                {"max_deviation": out["max_deviation"], "lambdas": out["lambdas"], "mus": out["mus"]},
                self.tol.eig, out["max_deviation"] <= self.tol.eig)

    def eplus_suite(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["eplus"]
        rng = self.rng(3)
        r = rng.standard_normal((cfg.n, cfg.n_c)) + 1j * rng.standard_normal((cfg.n, cfg.n_c))
        tp = make_transfer_pair(p_star(cfg.A, r, cfg.B, self.tol), r, cfg.A, self.tol)
        for nu in sorted({1, max(cfg.nu1, cfg.nu2)}):
            out = e_plus_property_check(cfg, tp, nu=nu)
            rep.add(f"twogrid.e_plus_identities.nu{nu}", a, {"residuals": out["residuals"], "norms": out["norms"]},
                    out["tolerance"], out["passed"])
        k_orth, resid = is_b_orthogonal_matrix(cfg.K, cfg.B, self.tol.eq)
        if not k_orth:
            rep.skip("twogrid.e_identities", a, "M^-1 A is not B-orthogonal", {"residual": resid})
            return
        out = e_plus_property_check(cfg, tp, operator="south")
        rep.add("twogrid.e_identities", a, {"residuals": out["residuals"], "norms": out["norms"]},
                out["tolerance"], out["passed"])

    def hat_suite(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["hat"]
        try:
            hat = optimal_transfers_hat(cfg)
        except SmoothingAssumptionViolated as exc:
            rep.skip("twogrid.hat_optimal", a, "smoothing assumption violated",
                     {"smoothing_norm": exc.smoothing_norm})
            return
        measured = b_mat_norm(e_plus(cfg, hat.pair), cfg.B)
        values = {"predicted": hat.predicted_norm, "measured": measured, "mu_next": hat.mus[cfg.n_c],
                  "converges": measured < 1}
        if not hat.guaranteed:
            rep.skip("twogrid.hat_optimal", a,
                     f"(nu1, nu2) = ({cfg.nu1}, {cfg.nu2}) is outside the guaranteed set; measured only", values)
            return
        self.hat = hat
        err = abs(measured - hat.predicted_norm)
        values["abs_error"] = err
        rep.add("twogrid.hat_optimal", a, values, ATTAIN_TOL, err <= ATTAIN_TOL)

    def sharp_suite(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["sharp"]
        try:
            sh = optimal_transfers_sharp(cfg)
        except (Defective, OrderingAmbiguous) as exc:
            rep.skip("twogrid.sharp_spectral_radius", a, f"{type(exc).__name__}: {exc}")
            rep.skip("twogrid.sharp_optimal", a, f"{type(exc).__name__}: {exc}")
            return
        rho_err = abs(sh.spectral_radius - sh.predicted_norm)
        rep.add("twogrid.sharp_spectral_radius", a,
                {"predicted": sh.predicted_norm, "spectral_radius": sh.spectral_radius, "abs_error": rho_err},
                ATTAIN_TOL, rho_err <= ATTAIN_TOL)
        values = {"predicted": sh.predicted_norm, "measured": sh.measured_norm,
                  "k_b_normal": sh.k_b_normal, "projection_b_orthogonal": sh.projection_b_orthogonal}
        if not sh.applicable:
            why = "M^-1 A is not B-normal" if not sh.k_b_normal else "Pi_A(P#, R#) is not B-orthogonal"
            rep.skip("twogrid.sharp_optimal", a, f"sharp norm prediction not applicable: {why}", values)
            return
        self.sharp = sh
        err = abs(sh.measured_norm - sh.predicted_norm)
        values["abs_error"] = err
        rep.add("twogrid.sharp_optimal", a, values, ATTAIN_TOL, err <= ATTAIN_TOL)

    def sweeps(self):
        cfg, rep = self.cfg, self.report
        trials = self.p.spec.trials
        for key, opt, op in (("hat", self.hat, "plus"), ("sharp", self.sharp, "south")):
            cid, anchor = f"twogrid.sweep_{key}", ANCHORS[f"sweep_{key}"]
            if opt is None:
                rep.skip(cid, anchor, f"no applicable {key} optimum")
                continue
            salt = 10 if key == "hat" else 11
            wide = optimality_sweep(cfg, opt.predicted_norm, trials, seed=[self.seed, salt], operator=op)
            near = optimality_sweep(cfg, opt.predicted_norm, trials, seed=[self.seed, salt + 10], operator=op,
                                    center=opt.pair, spread=1e-3)
            ok = wide.certified and near.certified
            rep.add(cid, anchor,
                    {"optimal": opt.predicted_norm, "min_random": wide.min_norm, "min_near_optimal": near.min_norm,
                     "evaluated": int(wide.norms.size + near.norms.size), "skipped": wide.skipped + near.skipped,
                     "histogram_random": list(wide.histogram)},
                    self.tol.opt, ok, "" if ok else "a random pair beat the predicted optimum")

    # --- builtin golden checks ---------------------------------------------

    def golden(self, example: int):
        method = getattr(self, f"_golden_{example}")
        self.guarded(f"example{example}.golden", ANCHORS["example"].format(example), method)

    def _display_check(self, ex, name, computed, tol=DISPLAY_TOL):
        err = _max_abs(computed, builtin_display(ex, name))
        self.report.add(f"example{ex}.{name}", ANCHORS["example"].format(ex), {"max_abs_error": err}, tol, err <= tol)

    def _golden_1(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["example"].format(1)
        v_r = builtin_display(1, "V_r")
        d = builtin_display(1, "D")
        b_err = _max_abs(np.linalg.inv(v_r @ d @ v_r.conj().T), cfg.B.b)
        rep.add("example1.B_factorization", a, {"max_abs_error": b_err}, DISPLAY_TOL, b_err <= DISPLAY_TOL)
        self._display_check(1, "Lambda", np.diag(np.diag(np.linalg.solve(v_r, cfg.A @ v_r))))
        ok, resid = is_b_orthogonal_matrix(cfg.K, cfg.B, self.tol.eq)
        rep.add("example1.K_b_orthogonal", a, {"residual": resid}, self.tol.eq, ok)
        base = cfg.with_(nu1=1, nu2=1, n_c=1)
        sh = optimal_transfers_sharp(base)
        tilt = max(_parallel(sh.pair.P, builtin_display(1, "P_sharp")),
                   _parallel(sh.pair.R, builtin_display(1, "R_sharp")))
        rep.add("example1.sharp_directions", a, {"sin_angle": tilt}, self.tol.angle, tilt <= self.tol.angle)
        tp = make_transfer_pair(builtin_display(1, "P_sharp"), builtin_display(1, "R_sharp"), cfg.A, self.tol)
        self._display_check(1, "Pi_sharp", coarse_grid_projection(cfg.A, tp, self.tol).pi)
        worst = 0.0
        table = {}
        for nu1, nu2 in itertools.product(range(5), repeat=2):
            if not 1 <= nu1 + nu2 <= 4:
                continue
            e = e_south(base, tp, nu1, nu2)
            want = 2.0 ** -(nu1 + nu2)
            nrm = b_mat_norm(e, cfg.B)
            rho = float(np.max(np.abs(np.linalg.eigvals(e))))
            table[f"{nu1},{nu2}"] = [nrm, rho]
            worst = max(worst, abs(nrm - want), abs(rho - want))
        rep.add("example1.E_norms", a, {"max_abs_error": worst, "norm_and_rho": table}, 1e-10, worst <= 1e-10)

    def _golden_2(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["example"].format(2)
        base = cfg.with_(nu1=1, nu2=1, n_c=1)
        bundle = build_smoother_bundle(cfg.A, cfg.M_inv, cfg.B, self.tol)
        self._display_check(2, "M_hat_inv", bundle.m_hat_inv)
        self._display_check(2, "M_hat_inv_B", bundle.m_hat_inv @ cfg.B.b)
        mus = smoothing_spectrum(bundle, cfg.B, self.tol).mus
        mu_err = _max_abs(mus, np.ravel(builtin_display(2, "mus")).real)
        rep.add("example2.mus", a, {"mus": mus, "max_abs_error": mu_err}, 1e-10, mu_err <= 1e-10)
        p = builtin_display(2, "P_hat")
        r = r_star(cfg.A, p, cfg.B, self.tol)
        self._display_check(2, "R_star", r)
        tp = make_transfer_pair(p, r, cfg.A, self.tol)
        self._display_check(2, "Pi_hat", coarse_grid_projection(cfg.A, tp, self.tol).pi)
        ep = e_plus(base, tp)
        es = e_south(base, tp)
        self._display_check(2, "E_plus_11", ep)
        self._display_check(2, "E_11", es)
        hat = optimal_transfers_hat(base)
        tilt = _parallel(hat.pair.P, p)
        rep.add("example2.hat_direction", a, {"sin_angle": tilt}, self.tol.angle, tilt <= self.tol.angle)
        norms = [b_mat_norm(ep, cfg.B), b_mat_norm(es, cfg.B)]
        err = max(abs(x - 0.25) for x in norms)
        rep.add("example2.norms", a, {"E_plus_11": norms[0], "E_11": norms[1], "max_abs_error": err}, 1e-10,
                err <= 1e-10)

    def _golden_3(self):
        cfg, rep, a = self.cfg, self.report, ANCHORS["example"].format(3)
        base = cfg.with_(nu1=1, nu2=1, n_c=1)
        scalars = BUILTIN_EXAMPLES[3]["scalars"]
        bundle = build_smoother_bundle(cfg.A, cfg.M_inv, cfg.B, self.tol)
        self._display_check(3, "M_hat_inv_B", bundle.m_hat_inv @ cfg.B.b)
        v_r = builtin_display(3, "V_r")
        fact = _max_abs(v_r @ builtin_display(3, "Lambda") @ np.linalg.inv(v_r), cfg.A)
        rep.add("example3.A_factorization", a, {"max_abs_error": fact}, DISPLAY_TOL, fact <= DISPLAY_TOL)
        self._display_check(3, "S", np.eye(3) - cfg.K)
        left = _max_abs(builtin_display(3, "V_l").conj().T @ v_r, np.eye(3))
        rep.add("example3.V_l_biorthogonal", a, {"max_abs_error": left}, DISPLAY_TOL, left <= DISPLAY_TOL)
        sh = optimal_transfers_sharp(base)
        tilt = max(_parallel(sh.pair.P, builtin_display(3, "P_sharp")),
                   _parallel(sh.pair.R, builtin_display(3, "R_sharp")))
        rep.add("example3.sharp_directions", a, {"sin_angle": tilt}, self.tol.angle, tilt <= self.tol.angle)
        tp = make_transfer_pair(builtin_display(3, "P_sharp"), builtin_display(3, "R_sharp"), cfg.A, self.tol)
        e = e_south(base, tp)
        self._display_check(3, "E_11_sharp", e)
        pi_norm = b_mat_norm(coarse_grid_projection(cfg.A, tp, self.tol).pi, cfg.B)
        e_norm = b_mat_norm(e, cfg.B)
        ok = abs(pi_norm - scalars["Pi_sharp_b_norm"]) <= 1e-10 and abs(e_norm - scalars["E_11_sharp_b_norm"]) <= 1e-8
        rep.add("example3.sharp_norms", a,
                {"Pi_b_norm": pi_norm, "E_11_b_norm": e_norm, "expected": [scalars["Pi_sharp_b_norm"],
                                                                          scalars["E_11_sharp_b_norm"]]},
                [1e-10, 1e-8], ok)
        hat = optimal_transfers_hat(base)
        measured = b_mat_norm(e_plus(base, hat.pair), cfg.B)
        want = 1 - hat.mus[1]
        ok = abs(measured - want) <= 1e-10 and measured < 1
        rep.add("example3.hat_norm", a, {"measured": measured, "one_minus_mu2": want}, 1e-10, ok)
        normal = is_b_normal(cfg.K, cfg.B, self.tol.eq)
        rep.add("example3.not_b_normal", a, {"b_normal": normal[0], "residual": normal[1]}, self.tol.eq,
                not normal[0])


def run_verification(spec) -> VerificationReport:
    """Load ``spec`` (a ProblemSpec, dict or loaded Problem) and run every check in order."""
    if isinstance(spec, dict):
        spec = ProblemSpec.from_dict(spec)
    problem = spec if isinstance(spec, Problem) else load_problem(spec)
    run = _Runner(problem)
    run.guarded("bspace.suite", ANCHORS["bspace"], run.bspace_suite)
    run.guarded("bnormal.suite", ANCHORS["bnormal"], run.bnormal_suite)
    run.guarded("coarse.suite", ANCHORS["coarse"], run.coarse_suite)
    run.guarded("smoother.suite", ANCHORS["smoothing"], run.smoothing_suite)
    run.guarded("smoother.eigenvalue_map_suite", ANCHORS["eigmap"], run.eigmap_suite)
    run.guarded("twogrid.e_plus_suite", ANCHORS["eplus"], run.eplus_suite)
    run.guarded("twogrid.hat_suite", ANCHORS["hat"], run.hat_suite)
    run.guarded("twogrid.sharp_suite", ANCHORS["sharp"], run.sharp_suite)
    run.guarded("twogrid.sweep_suite", ANCHORS["sweep_hat"], run.sweeps)
    if problem.spec.kind == "builtin":
        run.golden(problem.spec.source["builtin"])
    return run.report
