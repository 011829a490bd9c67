import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from btwogrid.bnormal import eigenstructure_from, sample_admissible_b
from btwogrid.bspace import b_mat_norm, is_b_orthogonal_matrix
from btwogrid.coarse import coarse_grid_projection, make_transfer_pair, p_star
from btwogrid.errors import (
    Defective,
    DimensionMismatch,
    OrderingAmbiguous,
    ProjectionNotBOrthogonal,
    SmoothingAssumptionViolated,
)
from btwogrid.harness.problems import BUILTIN_EXAMPLES, builtin_display, exact_to_array
from btwogrid.twogrid import (
    TwoGridConfig,
    e_plus,
    e_plus_property_check,
    e_south,
    generalized_eigenpairs,
    optimal_transfers_hat,
    optimal_transfers_sharp,
    optimality_sweep,
)
from helpers import b_normal_config, crandn, random_hpd


def example_cfg(k, **kw):
    e = BUILTIN_EXAMPLES[k]
    return TwoGridConfig(exact_to_array(e["A"]), exact_to_array(e["M_inv"]), exact_to_array(e["B"]), **kw)


def b_orthogonal_cfg(seed, n, n_c, nu=(1, 1)):
    """M^{-1} = I and K = W diag(lam) W^{-1} with real lam in (0.1, 1.9), B admissible."""
    rng = np.random.default_rng(seed)
    w = crandn(rng, n, n)
    lam = np.sort(rng.uniform(0.1, 1.9, n))
    lam = lam[np.argsort(-np.abs(1 - lam), kind="stable")]
    es = eigenstructure_from(w, lam)
    b = sample_admissible_b(es.split(n_c), seed).B
    return TwoGridConfig(w @ np.diag(lam) @ np.linalg.inv(w), np.eye(n), b, nu[0], nu[1], n_c)


def random_pair(rng, cfg):
    return make_transfer_pair(crandn(rng, cfg.n, cfg.n_c), crandn(rng, cfg.n, cfg.n_c), cfg.A)


def test_config_validation():
    with pytest.raises(DimensionMismatch):
        TwoGridConfig(np.eye(3), np.eye(3), np.eye(3), n_c=3)
    with pytest.raises(DimensionMismatch):
        TwoGridConfig(np.eye(3), np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        TwoGridConfig(np.eye(3), np.eye(3), np.eye(3), nu1=-1)


def test_zero_and_single_smoothing_steps():
    rng = np.random.default_rng(0)
    cfg = TwoGridConfig(crandn(rng, 5, 5) + 5 * np.eye(5), np.eye(5) / 5, random_hpd(rng, 5), n_c=2)
    tp = random_pair(rng, cfg)
    i_pi = np.eye(5) - coarse_grid_projection(cfg.A, tp).pi
    np.testing.assert_allclose(e_plus(cfg, tp, 0, 0), i_pi, atol=1e-12)
    np.testing.assert_allclose(e_south(cfg, tp, 0, 0), i_pi, atol=1e-12)
    np.testing.assert_allclose(e_plus(cfg, tp, 1, 0), e_south(cfg, tp, 1, 0), atol=1e-12)
    assert not np.allclose(e_plus(cfg, tp, 1, 1), e_south(cfg, tp, 1, 1))


def test_example2_error_operators():
    cfg = example_cfg(2)
    tp = make_transfer_pair(builtin_display(2, "P_hat"), builtin_display(2, "R_star"), cfg.A)
    np.testing.assert_allclose(e_plus(cfg, tp), builtin_display(2, "E_plus_11"), atol=1e-12)
    np.testing.assert_allclose(e_south(cfg, tp), builtin_display(2, "E_11"), atol=1e-12)


@pytest.mark.parametrize("nu", [(1, 1), (2, 0), (0, 3), (2, 2)])
def test_b_orthogonal_smoother_operators_coincide(nu):
    cfg = b_orthogonal_cfg(1, 6, 2, nu)
    assert is_b_orthogonal_matrix(cfg.K, cfg.B, 1e-8)[0]
    tp = random_pair(np.random.default_rng(2), cfg)
    np.testing.assert_allclose(e_plus(cfg, tp), e_south(cfg, tp), atol=1e-9)


def test_generalized_eigenpairs_relations():
    rng = np.random.default_rng(3)
    a = crandn(rng, 6, 6) + 3 * np.eye(6)
    m_inv = np.diag(rng.uniform(0.1, 0.5, 6))
    m = np.linalg.inv(m_inv)
    gep = generalized_eigenpairs(a, m_inv)
    lam = gep.Lambda
    np.testing.assert_allclose(a @ gep.V_r, m @ gep.V_r * lam, atol=1e-10)
    np.testing.assert_allclose(gep.V_l.conj().T @ a, lam[:, None] * (gep.V_l.conj().T @ m), atol=1e-10)
    np.testing.assert_allclose(gep.V_l.conj().T @ m @ gep.V_r, np.eye(6), atol=1e-10)
    np.testing.assert_allclose(gep.D_A, np.diag(lam), atol=1e-10)
    assert np.all(np.diff(np.abs(1 - lam)) <= 1e-12)


def test_hat_exact_inverse_predicts_zero():
    rng = np.random.default_rng(4)
    a = crandn(rng, 4, 4) + 4 * np.eye(4)
    cfg = TwoGridConfig(a, np.linalg.inv(a), random_hpd(rng, 4), n_c=3)
    hat = optimal_transfers_hat(cfg)
    assert hat.predicted_norm == pytest.approx(0, abs=1e-7)
    assert b_mat_norm(e_plus(cfg, hat.pair), cfg.B) < 1e-7


def test_hat_example2():
    cfg = example_cfg(2)
    hat = optimal_transfers_hat(cfg)
    p = np.ravel(builtin_display(2, "P_hat"))
    v = np.ravel(hat.pair.P)
    assert abs(np.vdot(v, p)) == pytest.approx(np.linalg.norm(v) * np.linalg.norm(p), rel=1e-12)
    assert hat.predicted_norm == pytest.approx(0.25, abs=1e-12)
    assert b_mat_norm(e_plus(cfg, hat.pair), cfg.B) == pytest.approx(0.25, abs=1e-12)
    assert hat.guaranteed
    assert not optimal_transfers_hat(cfg.with_(nu1=2)).guaranteed


def test_hat_requires_smoothing_assumption():
    cfg = TwoGridConfig(3 * np.eye(3), np.eye(3), np.eye(3))
    with pytest.raises(SmoothingAssumptionViolated):
        optimal_transfers_hat(cfg)


def test_sharp_example1():
    for nu in [(1, 0), (1, 1), (2, 2)]:
        sh = optimal_transfers_sharp(example_cfg(1, nu1=nu[0], nu2=nu[1]))
        assert sh.applicable
        want = 0.5 ** sum(nu)
        assert sh.predicted_norm == pytest.approx(want, abs=1e-12)
        assert sh.measured_norm == pytest.approx(want, abs=1e-12)
        assert sh.spectral_radius == pytest.approx(want, abs=1e-12)
    p = np.ravel(sh.pair.P)
    assert abs(np.vdot(p, [1, 1, 0])) == pytest.approx(np.linalg.norm(p) * np.sqrt(2), rel=1e-12)


def test_sharp_raises():
    with pytest.raises(Defective):
        optimal_transfers_sharp(example_cfg(2))
    # 1/4 first, then the double eigenvalue 3/2 straddles position 2
    with pytest.raises(OrderingAmbiguous):
        optimal_transfers_sharp(example_cfg(1, n_c=2))


def test_sharp_not_applicable_example3():
    sh = optimal_transfers_sharp(example_cfg(3))
    assert not sh.applicable
    assert sh.measured_norm == pytest.approx(BUILTIN_EXAMPLES[3]["scalars"]["E_11_sharp_b_norm"], abs=1e-10)
    assert sh.spectral_radius == pytest.approx(4 / 9, abs=1e-12)


def test_sharp_and_hat_agree_for_b_orthogonal_smoother():
    cfg = b_orthogonal_cfg(5, 7, 3)
    sh = optimal_transfers_sharp(cfg)
    hat = optimal_transfers_hat(cfg)
    assert sh.applicable
    assert sh.predicted_norm == pytest.approx(hat.predicted_norm, abs=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 9), st.data())
def test_sharp_norm_equals_spectral_radius(seed, n, data):
    n_c = data.draw(st.integers(1, n - 1))
    nu = data.draw(st.tuples(st.integers(0, 2), st.integers(0, 2)).filter(lambda t: sum(t) > 0))
    cfg = b_normal_config(np.random.default_rng(seed), n, n_c, nu, seed=seed % 1000)
    sh = optimal_transfers_sharp(cfg)
    assert sh.applicable
    assert sh.measured_norm == pytest.approx(sh.spectral_radius, abs=1e-8)
    assert sh.measured_norm == pytest.approx(sh.predicted_norm, abs=1e-10)


def test_sweep_with_optimal_pair_and_determinism():
    cfg = example_cfg(2)
    hat = optimal_transfers_hat(cfg)
    sw = optimality_sweep(cfg, hat.predicted_norm, 200, seed=0, include_pairs=[hat.pair])
    assert sw.min_norm == pytest.approx(0.25, abs=1e-12)
    assert sw.certified
    assert np.all(sw.norms >= 0.25 - 1e-8)
    again = optimality_sweep(cfg, hat.predicted_norm, 200, seed=0, include_pairs=[hat.pair])
    assert np.array_equal(sw.norms, again.norms)


def test_sweep_flags_a_wrong_optimum():
    cfg = example_cfg(2)
    assert not optimality_sweep(cfg, 0.9, 50, seed=1).certified


def test_basis_change_leaves_norm_unchanged():
    cfg = b_normal_config(np.random.default_rng(6), 8, 3)
    hat = optimal_transfers_hat(cfg)
    rng = np.random.default_rng(7)
    s, t = crandn(rng, 3, 3), crandn(rng, 3, 3)
    moved = make_transfer_pair(hat.pair.P @ s, hat.pair.R @ t, cfg.A)
    assert b_mat_norm(e_plus(cfg, moved), cfg.B) == pytest.approx(hat.predicted_norm, abs=1e-10)


def test_property_check():
    cfg = example_cfg(2)
    hat = optimal_transfers_hat(cfg)
    assert e_plus_property_check(cfg, hat.pair, nu=0)["passed"]
    out = e_plus_property_check(cfg, hat.pair, nu=1)
    assert out["passed"], out["residuals"]
    bad = make_transfer_pair(builtin_display(3, "P_sharp"), builtin_display(3, "R_sharp"))
    with pytest.raises(ProjectionNotBOrthogonal):
        e_plus_property_check(example_cfg(3), bad)


@pytest.mark.parametrize("nu", [1, 2, 3])
def test_property_check_e_for_b_orthogonal_smoother(nu):
    cfg = b_orthogonal_cfg(8, 6, 2)
    rng = np.random.default_rng(9)
    r = crandn(rng, 6, 2)
    tp = make_transfer_pair(p_star(cfg.A, r, cfg.B), r, cfg.A)
    out = e_plus_property_check(cfg, tp, nu=nu, operator="south")
    assert out["passed"], out["residuals"]
