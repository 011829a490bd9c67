import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from btwogrid.errors import ParseError
from btwogrid.harness import mmio
from btwogrid.harness.cli import main
from btwogrid.harness.problems import (
    BUILTIN_EXAMPLES,
    ProblemSpec,
    builtin_display,
    convection_diffusion,
    estimate_spectral_radius,
    exact_to_array,
    laplacian_1d,
    load_problem,
    smoother_rule,
)
from btwogrid.harness.report import VerificationReport, emit_report, render_report
from btwogrid.harness.verify import run_verification
from btwogrid.coarse import r_star
from helpers import crandn


@pytest.fixture(scope="module")
def reports():
    return {k: run_verification(ProblemSpec(source={"builtin": k}, trials=50)) for k in (1, 2, 3)}


def test_builtin_example2_loads_exactly():
    p = load_problem(ProblemSpec(source={"builtin": 2}))
    np.testing.assert_array_equal(p.A, [[0.5, 0, 0], [0, 0.5, 1], [0, 0, 0.5]])
    np.testing.assert_array_equal(p.M_inv, np.eye(3))
    np.testing.assert_array_equal(p.B.b, [[1, 0, 0], [0, 1, -2], [0, -2, 6]])
    assert (p.cfg.n_c, p.cfg.nu1, p.cfg.nu2) == (1, 1, 1)


def test_exact_entries():
    assert BUILTIN_EXAMPLES[1]["B"][2][2] == pytest.approx(7 / 24)
    # (a, b) pairs are a + b sqrt(3)
    np.testing.assert_allclose(builtin_display(2, "R_star").real.ravel(), [0, -2 - 2 * np.sqrt(3), 12 + 8 * np.sqrt(3)])
    # the A of example 3 is consistent with its displayed factorization
    v_r = builtin_display(3, "V_r")
    a3 = exact_to_array(BUILTIN_EXAMPLES[3]["A"])
    np.testing.assert_allclose(v_r @ builtin_display(3, "Lambda") @ np.linalg.inv(v_r), a3, atol=1e-15)


def test_conv_diff_symmetric_limit():
    a = convection_diffusion(16, 0.0)
    np.testing.assert_array_equal(a, a.T)
    np.testing.assert_array_equal(a, laplacian_1d(16))
    h = 1 / 17
    assert a[0, 0] == pytest.approx(2 / h**2)
    assert a[0, 1] == pytest.approx(-1 / h**2)


def test_conv_diff_schemes():
    h = 1 / 11
    c = convection_diffusion(10, 4.0, "central")
    assert c[1, 2] - c[2, 1] == pytest.approx(4.0 / h)
    u = convection_diffusion(10, 4.0, "upwind")
    assert u[1, 2] == pytest.approx(-1 / h**2)
    assert u[2, 1] == pytest.approx(-1 / h**2 - 4.0 / h)
    # upwind rows sum to zero away from the boundary
    assert u[5].sum() == pytest.approx(0, abs=1e-9)
    with pytest.raises(ParseError):
        convection_diffusion(10, 1.0, "downwind")


@pytest.mark.parametrize("n", [2, 8, 32, 64])
@pytest.mark.parametrize("beta", [0.0, 10.0, -50.0])
@pytest.mark.parametrize("scheme", ["central", "upwind"])
def test_conv_diff_nonsingular(n, beta, scheme):
    s = np.linalg.svd(convection_diffusion(n, beta, scheme), compute_uv=False)
    assert s[-1] > 1e-8 * s[0]


def test_spectral_radius_estimate():
    rng = np.random.default_rng(0)
    x = crandn(rng, 6, 6)
    est = estimate_spectral_radius(x, steps=100)
    assert est == pytest.approx(np.abs(np.linalg.eigvals(x)).max(), rel=0.05)
    a = laplacian_1d(20)
    m_inv, omega = smoother_rule(a, "jacobi")
    assert omega == pytest.approx(1 / np.abs(np.linalg.eigvals(np.diag(1 / np.diag(a)) @ a)).max(), rel=0.05)


def test_b_modes():
    src = {"conv-diff": {"n": 8, "beta": 3.0}}
    qa = load_problem(ProblemSpec(source=src, b_mode="QA", n_c=2))
    u, s, vh = np.linalg.svd(qa.A)
    np.testing.assert_allclose(qa.B.b, vh.conj().T @ np.diag(s) @ vh, atol=1e-9)
    # with B = QA the compatible restriction is Q^H P
    p = crandn(np.random.default_rng(1), 8, 2)
    q = vh.conj().T @ u.conj().T
    np.testing.assert_allclose(r_star(qa.A, p, qa.B), q.conj().T @ p, atol=1e-10)
    aha = load_problem(ProblemSpec(source=src, b_mode="AHA"))
    np.testing.assert_allclose(aha.B.b, aha.A.conj().T @ aha.A)
    m = load_problem(ProblemSpec(source=src, b_mode="M", smoother="jacobi", omega=0.5))
    np.testing.assert_allclose(m.B.b, np.diag(np.diag(m.A)) / 0.5)
    sampled = load_problem(ProblemSpec(source=src, b_mode="sampled-admissible", seed=3, n_c=2))
    from btwogrid.bspace import is_b_normal

    assert is_b_normal(sampled.cfg.K, sampled.B)[0]


def test_spec_validation():
    with pytest.raises(ParseError):
        ProblemSpec(source={"builtin": 1, "conv-diff": {"n": 4}})
    with pytest.raises(ParseError):
        ProblemSpec(source={"builtin": 4})
    with pytest.raises(ParseError):
        ProblemSpec(source={"files": {"A": "a.mtx"}}, b_mode="explicit")
    with pytest.raises(ParseError):
        ProblemSpec(source={"builtin": 1}, b_mode="bogus")
    with pytest.raises(ParseError):
        ProblemSpec(source={"builtin": 1}, tol={"eq": -1})
    with pytest.raises(ParseError):
        ProblemSpec.from_dict({"source": {"builtin": 1}, "colour": "red"})
    spec = ProblemSpec(source={"conv-diff": {"n": 8, "beta": 1.0}}, n_c=2, seed=5, tol={"eig": 1e-7})
    assert ProblemSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_files_source(tmp_path):
    a = convection_diffusion(6, 2.0)
    mmio.write_matrix(tmp_path / "A.mtx", a)
    mmio.write_matrix(tmp_path / "B.mtx", np.eye(6) * 2, layout="array")
    (tmp_path / "p.json").write_text(json.dumps({"source": {"files": {"A": "A.mtx", "B": "B.mtx"}}, "n_c": 2}))
    p = load_problem(ProblemSpec.from_json(tmp_path / "p.json"))
    np.testing.assert_allclose(p.A, a)
    np.testing.assert_allclose(p.B.b, 2 * np.eye(6))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.booleans(), st.sampled_from(["coordinate", "array"]))
def test_mmio_round_trip(tmp_path_factory, seed, n, cplx, layout):
    rng = np.random.default_rng(seed)
    a = crandn(rng, n, n) if cplx else rng.standard_normal((n, n))
    path = mmio.write_matrix(tmp_path_factory.mktemp("mm") / "m.mtx", a, layout=layout)
    np.testing.assert_array_equal(mmio.read_matrix(path), a)


def test_mmio_errors(tmp_path):
    with pytest.raises(ParseError):
        mmio.read_matrix(tmp_path / "missing.mtx")
    bad = tmp_path / "bad.mtx"
    bad.write_text("this is not matrix market\n")
    with pytest.raises(ParseError):
        mmio.read_matrix(bad)


def test_example1_report(reports):
    rep = reports[1]
    assert rep.all_passed
    assert rep.summary["skipped"] == 0
    table = rep["example1.E_norms"].values["norm_and_rho"]
    for key, (nrm, rho) in table.items():
        want = 2.0 ** -sum(map(int, key.split(",")))
        assert nrm == pytest.approx(want, abs=1e-10)
        assert rho == pytest.approx(want, abs=1e-10)


def test_example3_report(reports):
    rep = reports[3]
    assert rep.all_passed
    sharp = rep["twogrid.sharp_optimal"]
    assert sharp.verdict == "skipped"
    assert "not applicable" in sharp.reason
    assert sharp.values["measured"] == pytest.approx(1.34794, abs=1e-5)
    hat = rep["twogrid.hat_optimal"]
    assert hat.verdict == "pass" and hat.values["measured"] < 1
    assert rep["example3.not_b_normal"].values["b_normal"] is False


def test_example2_report_skips(reports):
    rep = reports[2]
    assert rep.all_passed
    assert rep["bnormal.characterizations"].verdict == "skipped"
    assert rep["smoother.eigenvalue_map"].verdict == "skipped"


def test_report_is_deterministic():
    spec = ProblemSpec(source={"conv-diff": {"n": 10, "beta": 5.0}}, n_c=3, b_mode="sampled-admissible",
                       seed=11, trials=30)
    first = render_report(run_verification(spec), "json")
    assert render_report(run_verification(spec), "json") == first


def test_json_round_trip(reports):
    text = render_report(reports[2], "json")
    back = VerificationReport.from_dict(json.loads(text))
    assert back.to_dict() == reports[2].to_dict()
    assert render_report(back, "json") == text


def test_csv_and_text(reports, tmp_path):
    rep = reports[3]
    path = tmp_path / "r.csv"
    emit_report(rep, "csv", path)
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(rows) == len(rep.checks)
    assert {r["verdict"] for r in rows} <= {"pass", "fail", "skipped"}
    text = render_report(rep, "text")
    assert "worked example 3" in text
    assert text.count("\n[") == len(rep.checks)


def test_empty_report(tmp_path):
    rep = VerificationReport(problem="none", environment={})
    emit_report(rep, "csv", tmp_path / "e.csv")
    assert list(csv.DictReader(open(tmp_path / "e.csv"))) == []
    assert json.loads(render_report(rep, "json"))["checks"] == []


def test_every_check_recorded_once(reports):
    for rep in reports.values():
        ids = [c.check_id for c in rep.checks]
        assert len(ids) == len(set(ids))
    with pytest.raises(ValueError):
        reports[1].add(reports[1].checks[0].check_id, "x", {}, None, True)


def test_complex_values_serialize():
    rep = VerificationReport(problem="c", environment={"z": 1 + 2j})
    rec = rep.add("c.1", "anchor", {"z": np.complex128(3 - 1j), "v": np.array([1.0, np.inf])}, 1e-8, True)
    assert rec.values == {"z": [3.0, -1.0], "v": [1.0, "inf"]}
    assert rep.environment == {"z": [1.0, 2.0]}


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["example", "1", "--out", str(out), "--trials", "20"]) == 0
    assert json.loads(out.read_text())["summary"]["fail"] == 0

    mtx = tmp_path / "A.mtx"
    assert main(["generate", "--type", "conv-diff", "--n", "12", "--beta", "10", "--out", str(mtx)]) == 0
    np.testing.assert_allclose(mmio.read_matrix(mtx), convection_diffusion(12, 10.0))

    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"source": {"files": {"A": "A.mtx"}}, "b_mode": "AHA"}))
    assert main(["verify", "--problem", str(spec), "--nc", "4", "--trials", "20", "--format", "csv",
                 "--out", str(tmp_path / "r.csv")]) == 0

    strict = tmp_path / "strict.json"
    strict.write_text(json.dumps({"source": {"builtin": 1}, "tol": {"eig": 1e-30, "eq": 1e-30}}))
    assert main(["verify", "--problem", str(strict), "--out", str(tmp_path / "s.json")]) == 1

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["verify", "--problem", str(broken)]) == 2
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"source": {"files": {"A": "nope.mtx"}}}))
    assert main(["verify", "--problem", str(missing)]) == 2
