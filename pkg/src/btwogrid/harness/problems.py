"""Problem sources: the three builtin worked examples, Matrix Market files and
a 1D convection-diffusion generator, plus the choice of M^{-1} and B.

Builtin entries are stored exactly.  Rational entries are ``Fraction``;
entries involving sqrt(3) are pairs ``(a, b)`` meaning a + b*sqrt(3).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction as F
from pathlib import Path

import numpy as np

from ..bspace import DEFAULT_TOL, HpdMatrix, ToleranceProfile, as_hpd, as_matrix
from ..errors import DimensionMismatch, NearSingularA, NotHpd, ParseError
from ..twogrid import TwoGridConfig, sharp_admissible_b
from . import mmio

__all__ = [
    "BUILTIN_EXAMPLES",
    "B_MODES",
    "ProblemSpec",
    "Problem",
    "exact_to_array",
    "builtin_display",
    "convection_diffusion",
    "laplacian_1d",
    "estimate_spectral_radius",
    "smoother_rule",
    "load_problem",
]

B_MODES = ("explicit", "identity", "AHA", "M", "QA", "sampled-admissible")
SMOOTHERS = ("jacobi", "identity", "file", "builtin")
_SQRT3 = np.sqrt(3.0)


def _q(*row):
    return [F(x) if not isinstance(x, tuple) else (F(x[0]), F(x[1])) for x in row]


def _eye3():
    return [_q(1, 0, 0), _q(0, 1, 0), _q(0, 0, 1)]


def _col(*xs):
    return [_q(x) for x in xs]


BUILTIN_EXAMPLES = {
    1: {
        "A": [_q("7/8", "-5/8", "5/8"), _q("-5/8", "7/8", "5/8"), _q(0, 0, "3/2")],
        "M_inv": _eye3(),
        "B": [_q("5/8", "-3/8", "-1/8"), _q("-3/8", "5/8", "-1/8"), _q("-1/8", "-1/8", "7/24")],
        "n_c": 1,
        "nu": (1, 1),
        "displays": {
            "V_r": [_q(1, 0, 1), _q(1, 1, 0), _q(0, 1, 1)],
            "V_l": [_q(-1, -1, 0), _q(-1, 1, 0), _q(1, 0, 1)],
            "Lambda": [_q("1/4", 0, 0), _q(0, "3/2", 0), _q(0, 0, "3/2")],
            "D": [_q(2, 0, 0), _q(0, 2, 1), _q(0, 1, 2)],
            "P_sharp": _col(1, 1, 0),
            "R_sharp": _col(-1, -1, 1),
            "Pi_sharp": [_q("1/2", "1/2", "-1/2"), _q("1/2", "1/2", "-1/2"), _q(0, 0, 0)],
        },
    },
    2: {
        "A": [_q("1/2", 0, 0), _q(0, "1/2", 1), _q(0, 0, "1/2")],
        "M_inv": _eye3(),
        "B": [_q(1, 0, 0), _q(0, 1, -2), _q(0, -2, 6)],
        "n_c": 1,
        "nu": (1, 1),
        "displays": {
            "M_hat_inv": [_q("3/4", 0, 0), _q(0, "11/4", 1), _q(0, 1, "3/8")],
            "M_hat_inv_B": [_q("3/4", 0, 0), _q(0, "3/4", "1/2"), _q(0, "1/4", "1/4")],
            "mus": [_q(("1/2", "-1/4")), _q("3/4"), _q(("1/2", "1/4"))],
            "P_hat": [_q(0), _q((1, -1)), _q(1)],
            "R_star": [_q(0), _q((-2, -2)), _q((12, 8))],
            "Pi_hat": [
                _q(0, 0, 0),
                _q(0, ("1/2", "-1/6"), (0, "-1/3")),
                _q(0, (0, "-1/6"), ("1/2", "1/6")),
            ],
            "E_plus_11": [
                _q("1/4", 0, 0),
                _q(0, ("-1/8", "1/8"), ("3/4", "-1/2")),
                _q(0, ("-1/8", "1/12"), ("5/8", "-3/8")),
            ],
            "E_11": [
                _q("1/4", 0, 0),
                _q(0, ("1/8", "-1/24"), ("-1/2", "1/4")),
                _q(0, (0, "1/24"), ("1/8", "-1/8")),
            ],
        },
    },
    3: {
        # A[2, 2] = 1/3 is forced by A = V_r diag(1/4, 1/2, 1/3) V_r^{-1},
        # by the factor I - A and by the E^{1,1} product below
        "A": [_q("1/4", 0, "1/12"), _q(0, "1/2", 0), _q(0, 0, "1/3")],
        "M_inv": _eye3(),
        "B": [_q(4, 0, 0), _q(0, 2, 1), _q(0, 1, 1)],
        "n_c": 1,
        "nu": (1, 1),
        "displays": {
            "V_r": [_q(1, 0, 1), _q(0, 1, 0), _q(0, 0, 1)],
            "Lambda": [_q("1/4", 0, 0), _q(0, "1/2", 0), _q(0, 0, "1/3")],
            "V_l": [_q(1, 0, 0), _q(0, 1, 0), _q(-1, 0, 1)],
            "M_hat_inv_B": [
                _q("55/144", "1/36", "5/72"),
                _q("-1/6", "5/6", "1/12"),
                _q("4/9", "-2/9", "4/9"),
            ],
            "S": [_q("3/4", 0, "-1/12"), _q(0, "1/2", 0), _q(0, 0, "2/3")],
            "P_sharp": _col(1, 0, 0),
            "R_sharp": _col(1, 0, -1),
            "E_11_sharp": [_q(0, 0, "4/9"), _q(0, "1/4", 0), _q(0, 0, "4/9")],
        },
        "scalars": {
            "Pi_sharp_b_norm": 3.0,
            "E_11_sharp_b_norm": float(np.sqrt((np.sqrt(1294465) + 1217) / 1296)),
        },
    },
}


def _entry(x) -> float:
    if isinstance(x, tuple):
        return float(x[0]) + float(x[1]) * _SQRT3
    return float(x)


def exact_to_array(rows) -> np.ndarray:
    """Convert exact entries to a complex array, rounding each entry once."""
    return np.array([[_entry(x) for x in row] for row in rows], dtype=complex)


def builtin_display(example: int, name: str) -> np.ndarray:
    return exact_to_array(BUILTIN_EXAMPLES[example]["displays"][name])


def laplacian_1d(n: int) -> np.ndarray:
    """Second-difference matrix tridiag(-1, 2, -1) / h^2 with h = 1/(n+1)."""
    return convection_diffusion(n, 0.0)


def convection_diffusion(n: int, beta: float, scheme: str = "central") -> np.ndarray:
    """-u'' + beta u' on (0, 1) with Dirichlet boundaries and h = 1/(n+1).

    ``central`` uses (u_{i+1} - u_{i-1}) / 2h; ``upwind`` takes the
    one-sided difference against the flow direction.
    """
    if n < 2:
        raise DimensionMismatch("convection-diffusion needs n >= 2")
    h = 1.0 / (n + 1)
    lower = np.full(n - 1, -1.0 / h**2)
    diag = np.full(n, 2.0 / h**2)
    upper = np.full(n - 1, -1.0 / h**2)
    if scheme == "central":
        lower -= beta / (2 * h)
        upper += beta / (2 * h)
    elif scheme == "upwind":
        if beta >= 0:
            diag += beta / h
            lower -= beta / h
        else:
            diag -= beta / h
            upper += beta / h
    else:
        raise ParseError(f"unknown scheme {scheme!r}")
    a = np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] <= DEFAULT_TOL.rank * s[0]:
        raise NearSingularA(f"generated matrix is singular (n={n}, beta={beta})")
    return a


def estimate_spectral_radius(x, steps: int = 100, seed: int = 0) -> float:
    """Power-iteration estimate of rho(x) from the average growth of ||x^k v||.

    The geometric mean of the per-step growth factors converges to rho even
    when the dominant eigenvalues form a complex pair, where the plain
    Rayleigh-type estimate oscillates.
    """
    x = np.asarray(x)
    v = np.random.default_rng(seed).standard_normal(x.shape[0]).astype(complex)
    v /= np.linalg.norm(v)
    logs = []
    for _ in range(steps):
        w = x @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        logs.append(np.log(nrm))
        v = w / nrm
    # drop the transient before averaging
    tail = logs[len(logs) // 2 :]
    return float(np.exp(np.mean(tail)))


def smoother_rule(A, rule: str, omega: float | None = None) -> tuple[np.ndarray, float]:
    """M^{-1} = omega diag(A)^{-1} (``jacobi``) or omega I (``identity``).

    Default omega is 1 / rho_est of the undamped iteration matrix.
    """
    a = as_matrix(A, "A", square=True)
    if rule == "jacobi":
        d = np.diag(a)
        if np.any(d == 0):
            raise DimensionMismatch("Jacobi smoother needs a zero-free diagonal")
        base = np.diag(1 / d)
    elif rule == "identity":
        base = np.eye(a.shape[0], dtype=complex)
    else:
        raise ParseError(f"unknown smoother rule {rule!r}")
    if omega is None:
        omega = 1.0 / estimate_spectral_radius(base @ a)
    return omega * base, float(omega)


@dataclass(frozen=True)
class ProblemSpec:
    """What to verify.  ``source`` has exactly one key among
    ``builtin`` (1, 2 or 3), ``files`` ({"A", "M_inv"?, "B"?} paths) and
    ``conv-diff`` ({"n", "beta", "scheme"}).
    """

    source: dict
    n_c: int | None = None
    nu1: int | None = None
    nu2: int | None = None
    b_mode: str | None = None
    smoother: str | None = None
    omega: float | None = None
    seed: int = 0
    trials: int = 200
    tol: dict = field(default_factory=dict)
    base_dir: str = "."

    def __post_init__(self):
        if not isinstance(self.source, dict) or len(self.source) != 1:
            raise ParseError("source must name exactly one of builtin, files, conv-diff")
        (kind,) = self.source
        if kind not in ("builtin", "files", "conv-diff"):
            raise ParseError(f"unknown source {kind!r}")
        if kind == "builtin" and self.source[kind] not in BUILTIN_EXAMPLES:
            raise ParseError(f"builtin example must be 1, 2 or 3, got {self.source[kind]!r}")
        if kind == "files" and (not isinstance(self.source[kind], dict) or "A" not in self.source[kind]):
            raise ParseError("files source needs an A path")
        if kind == "conv-diff" and "n" not in self.source[kind]:
            raise ParseError("conv-diff source needs n")
        if self.b_mode is not None and self.b_mode not in B_MODES:
            raise ParseError(f"unknown b_mode {self.b_mode!r}; choose from {B_MODES}")
        if self.smoother is not None and self.smoother not in SMOOTHERS:
            raise ParseError(f"unknown smoother {self.smoother!r}; choose from {SMOOTHERS}")
        if self.resolved_b_mode == "explicit" and kind == "files" and "B" not in self.source[kind]:
            raise ParseError("b_mode=explicit requires a B path")
        if self.resolved_b_mode == "explicit" and kind == "conv-diff":
            raise ParseError("b_mode=explicit requires a B path")
        try:
            ToleranceProfile().replace(**self.tol)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad tolerance overrides: {exc}") from None

    @property
    def kind(self) -> str:
        return next(iter(self.source))

    @property
    def resolved_b_mode(self) -> str:
        if self.b_mode is not None:
            return self.b_mode
        if self.kind == "builtin" or (self.kind == "files" and "B" in self.source["files"]):
            return "explicit"
        return "AHA"

    @property
    def tolerance(self) -> ToleranceProfile:
        return DEFAULT_TOL.replace(**self.tol)

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> "ProblemSpec":
        if not isinstance(data, dict):
            raise ParseError("problem spec must be a JSON object")
        known = {f for f in cls.__dataclass_fields__ if f != "base_dir"}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"unknown problem spec fields: {sorted(unknown)}")
        if "source" not in data:
            raise ParseError("problem spec needs a source")
        try:
            return cls(**data, base_dir=str(base_dir))
        except TypeError as exc:
            raise ParseError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ProblemSpec":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read problem spec {path}: {exc}") from None
        return cls.from_dict(data, base_dir=path.parent)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("base_dir")
        return out

    def with_(self, **changes) -> "ProblemSpec":
        values = asdict(self)
        values.update({k: v for k, v in changes.items() if v is not None})
        return ProblemSpec(**values)


@dataclass(frozen=True, eq=False)
class Problem:
    A: np.ndarray
    M_inv: np.ndarray
    B: HpdMatrix
    cfg: TwoGridConfig
    spec: ProblemSpec
    omega: float | None = None
    label: str = ""


def _read(spec: ProblemSpec, key: str) -> np.ndarray:
    path = Path(spec.base_dir) / spec.source["files"][key]
    return mmio.read_matrix(path)


def _b_from_mode(mode, a, m_inv, spec, tol, explicit=None) -> HpdMatrix:
    n = a.shape[0]
    if mode == "explicit":
        return as_hpd(explicit, tol)
    if mode == "identity":
        return as_hpd(np.eye(n), tol)
    if mode == "AHA":
        return as_hpd(a.conj().T @ a, tol)
    if mode == "M":
        m = np.linalg.inv(m_inv)
        if np.linalg.norm(m - m.conj().T) > tol.herm * np.linalg.norm(m):
            raise NotHpd("b_mode=M needs a Hermitian smoother M")
        return as_hpd(m, tol)
    if mode == "QA":
        # A = U S V^H, Q = V U^H, B = Q A = V S V^H
        _, s, vh = np.linalg.svd(a)
        v = vh.conj().T
        return as_hpd((v * s) @ vh, tol)
    if mode == "sampled-admissible":
        return as_hpd(sharp_admissible_b(a, m_inv, spec.n_c or 1, spec.seed, tol).B, tol)
    raise ParseError(f"unknown b_mode {mode!r}")


def load_problem(spec: ProblemSpec) -> Problem:
    """Materialize and validate A, M^{-1}, B and the two-grid configuration."""
    tol = spec.tolerance
    kind = spec.kind
    explicit_b = None
    omega = None
    defaults = {"n_c": 1, "nu": (1, 1)}
    if kind == "builtin":
        ex = BUILTIN_EXAMPLES[spec.source["builtin"]]
        a = exact_to_array(ex["A"])
        m_inv = exact_to_array(ex["M_inv"])
        explicit_b = exact_to_array(ex["B"])
        defaults = {"n_c": ex["n_c"], "nu": ex["nu"]}
        label = f"builtin example {spec.source['builtin']}"
        if spec.smoother not in (None, "builtin"):
            m_inv, omega = smoother_rule(a, spec.smoother, spec.omega)
    elif kind == "files":
        a = _read(spec, "A")
        files = spec.source["files"]
        if "B" in files:
            explicit_b = _read(spec, "B")
        rule = spec.smoother or ("file" if "M_inv" in files else "jacobi")
        if rule == "file":
            if "M_inv" not in files:
                raise ParseError("smoother=file needs an M_inv path")
            m_inv = _read(spec, "M_inv")
        else:
            m_inv, omega = smoother_rule(a, rule, spec.omega)
        label = f"files {files['A']}"
    else:
        cd = spec.source["conv-diff"]
        try:
            a = convection_diffusion(int(cd["n"]), float(cd.get("beta", 0.0)), cd.get("scheme", "central"))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad conv-diff parameters: {exc}") from None
        m_inv, omega = smoother_rule(a, spec.smoother or "jacobi", spec.omega)
        label = f"conv-diff n={cd['n']} beta={cd.get('beta', 0.0)} {cd.get('scheme', 'central')}"

    a = as_matrix(a, "A", square=True)
    m_inv = as_matrix(m_inv, "M_inv", square=True)
    if m_inv.shape != a.shape:
        raise DimensionMismatch(f"A is {a.shape} but M_inv is {m_inv.shape}")
    if explicit_b is not None and as_matrix(explicit_b, "B").shape != a.shape:
        raise DimensionMismatch(f"A is {a.shape} but B is {np.shape(explicit_b)}")
    b = _b_from_mode(spec.resolved_b_mode, a, m_inv, spec, tol, explicit_b)
    nu1 = spec.nu1 if spec.nu1 is not None else defaults["nu"][0]
    nu2 = spec.nu2 if spec.nu2 is not None else defaults["nu"][1]
    n_c = spec.n_c if spec.n_c is not None else defaults["n_c"]
    cfg = TwoGridConfig(A=a, M_inv=m_inv, B=b, nu1=nu1, nu2=nu2, n_c=n_c, tol=tol)
    return Problem(A=a, M_inv=m_inv, B=b, cfg=cfg, spec=spec, omega=omega, label=label)
