import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewball import liegroup as lg

PAIRS = list(lg.PairId)
SL2C = lg.PairId.SL2C_SL2R


def vec(pair, seed, scale=1.0):
    return lg.random_lievec(pair, np.random.default_rng(seed), scale)


seeds = st.integers(0, 2**32 - 1)


# --- structure constants -------------------------------------------------


def test_dimensions():
    dims = {p: (lg.get_pair(p).dim_G, lg.get_pair(p).dim_H, lg.get_pair(p).rank_G) for p in PAIRS}
    assert dims == {
        lg.PairId.SL2C_SL2R: (6, 3, 1),
        lg.PairId.SL2R2_DIAG: (6, 3, 2),
        lg.PairId.SL3R_SO21: (8, 3, 2),
    }


def test_rotation_generator_norm_is_four():
    pair = lg.get_pair(SL2C)
    J = pair.kh_generator
    assert lg.inner(pair, J, J) == pytest.approx(16.0, abs=1e-9)
    assert lg.norm(pair, J) == pytest.approx(4.0, abs=1e-9)


def test_sl3_killing_value():
    # 2n tr(E12 E21) = 6
    pair = lg.get_pair(lg.PairId.SL3R_SO21)
    E12 = np.zeros((3, 3)); E12[0, 1] = 1
    E21 = E12.T.copy()
    val = lg.killing_form(pair, lg.to_coords(pair, E12), lg.to_coords(pair, E21))
    assert val == pytest.approx(6.0, abs=1e-10)


def test_killing_zero_vector():
    pair = lg.get_pair(SL2C)
    assert lg.killing_form(pair, np.zeros(6), vec(pair, 1)) == 0


def test_dimension_mismatch_raises():
    pair = lg.get_pair(SL2C)
    with pytest.raises(ValueError):
        lg.killing_form(pair, np.zeros(5), np.zeros(6))


@pytest.mark.parametrize("pid", PAIRS)
def test_bracket_matches_matrices(pid):
    pair = lg.get_pair(pid)
    rng = np.random.default_rng(0)
    for _ in range(20):
        X, Y = lg.random_lievec(pair, rng), lg.random_lievec(pair, rng)
        A, B = lg.to_matrix(pair, X), lg.to_matrix(pair, Y)
        assert np.abs(lg.to_matrix(pair, lg.bracket(pair, X, Y)) - (A @ B - B @ A)).max() < 1e-12


@pytest.mark.parametrize("pid", PAIRS)
def test_jacobi_and_antisymmetry_on_basis(pid):
    pair = lg.get_pair(pid)
    e = np.eye(pair.dim_G)
    for i in range(pair.dim_G):
        for j in range(pair.dim_G):
            assert np.abs(lg.bracket(pair, e[i], e[j]) + lg.bracket(pair, e[j], e[i])).max() < 1e-11
            for k in range(pair.dim_G):
                jac = (
                    lg.bracket(pair, e[i], lg.bracket(pair, e[j], e[k]))
                    + lg.bracket(pair, e[j], lg.bracket(pair, e[k], e[i]))
                    + lg.bracket(pair, e[k], lg.bracket(pair, e[i], e[j]))
                )
                assert np.abs(jac).max() < 1e-11


@pytest.mark.parametrize("pid", PAIRS)
def test_torus_is_abelian_and_in_h(pid):
    pair = lg.get_pair(pid)
    a = pair.a_basis
    for v in a:
        for w in a:
            assert np.abs(lg.bracket(pair, v, w)).max() < 1e-12
    # the H torus direction is basis vector 0, inside both a and h
    assert np.allclose(pair.a_h_in_a @ a, np.eye(pair.dim_G)[0])


@pytest.mark.parametrize("pid", PAIRS)
def test_inner_product_positive_definite(pid):
    pair = lg.get_pair(pid)
    assert np.linalg.eigvalsh(pair.gram).min() > 0


@pytest.mark.parametrize("pid", PAIRS)
@given(seed=seeds)
def test_theta_isometric_involution(pid, seed):
    pair = lg.get_pair(pid)
    X, Y = vec(pair, seed), vec(pair, seed + 1)
    tX, tY = lg.cartan_involution(pair, X), lg.cartan_involution(pair, Y)
    assert np.allclose(lg.cartan_involution(pair, tX), X, atol=1e-12)
    assert abs(lg.inner(pair, tX, tY) - lg.inner(pair, X, Y)) <= 1e-10 * max(1, abs(lg.inner(pair, X, Y)))


@pytest.mark.parametrize("pid", PAIRS)
def test_theta_on_torus_and_rotation(pid):
    pair = lg.get_pair(pid)
    for v in pair.a_basis:
        assert np.allclose(lg.cartan_involution(pair, v), -v)
    assert np.allclose(lg.cartan_involution(pair, pair.kh_generator), pair.kh_generator)


@pytest.mark.parametrize("pid", PAIRS)
@given(seed=seeds)
def test_adjoint_multiplicative(pid, seed):
    pair = lg.get_pair(pid)
    rng = np.random.default_rng(seed)
    g, h = lg.random_element(pair, rng), lg.random_element(pair, rng)
    lhs = lg.adjoint_action(pair, g @ h)
    rhs = lg.adjoint_action(pair, g) @ lg.adjoint_action(pair, h)
    assert np.abs(lhs - rhs).max() <= 1e-9 * max(1, np.abs(lhs).max())


@pytest.mark.parametrize("pid", PAIRS)
def test_adjoint_identity_and_compact_isometry(pid):
    from skewball.symspace import random_k

    pair = lg.get_pair(pid)
    assert np.allclose(lg.adjoint_action(pair, pair.identity()), np.eye(pair.dim_G))
    rng = np.random.default_rng(3)
    for _ in range(5):
        k = random_k(pair, rng)
        assert lg.op_norm(pair, lg.adjoint_action(pair, k)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("pid", PAIRS)
def test_adjoint_torus_scales_root_spaces(pid):
    pair = lg.get_pair(pid)
    datum = lg.compute_root_datum(pair, "G")
    v = np.linspace(0.3, 0.7, pair.rank_G)
    Ad = lg.adjoint_action(pair, lg.exp_torus(pair, v))
    for root in datum.roots:
        for X in root.space:
            assert np.allclose(Ad @ X, math.exp(datum.evaluate(root, v)) * X, atol=1e-10)


# --- root data -----------------------------------------------------------

# frozen from the eigen-cluster computation, checked against the A1/A1xA1/A2 data
FROZEN_ROOTS = {
    (SL2C, "G"): dict(n_pos=1, mults=[2], delta=1.0, c_phi=0.5, eta1=0.5, m_plus=2),
    (SL2C, "H"): dict(n_pos=1, mults=[1], delta=0.5, c_phi=0.5, eta1=0.5, m_plus=1),
    (lg.PairId.SL2R2_DIAG, "G"): dict(n_pos=2, mults=[1, 1], delta=1.0, c_phi=0.7071067811865476, m_plus=2),
    (lg.PairId.SL2R2_DIAG, "H"): dict(n_pos=1, mults=[1], delta=0.5, m_plus=1),
    (lg.PairId.SL3R_SO21, "G"): dict(n_pos=3, mults=[1, 1, 1], delta=1.1547005383792515,
                                     c_phi=0.5773502691896258, eta1=0.5773502691896258, m_plus=3),
    (lg.PairId.SL3R_SO21, "H"): dict(n_pos=1, mults=[1], delta=0.28867513459481287, m_plus=1),
}


@pytest.mark.parametrize("key", FROZEN_ROOTS)
def test_root_data_frozen(key):
    pid, which = key
    datum = lg.compute_root_datum(lg.get_pair(pid), which)
    want = FROZEN_ROOTS[key]
    assert len(datum.positive_roots) == want["n_pos"]
    assert sorted(r.multiplicity for r in datum.positive_roots) == want["mults"]
    assert datum.delta_2rho == pytest.approx(want["delta"], abs=1e-9)
    assert datum.m_phi_plus == want["m_plus"]
    if "c_phi" in want:
        assert datum.c_phi == pytest.approx(want["c_phi"], abs=1e-9)
    if "eta1" in want:
        assert datum.eta1 == pytest.approx(want["eta1"], abs=1e-9)


@pytest.mark.parametrize("pid", PAIRS)
@pytest.mark.parametrize("which", ["G", "H"])
def test_root_datum_invariants(pid, which):
    pair = lg.get_pair(pid)
    datum = lg.compute_root_datum(pair, which)
    # closed under negation
    vecs = [r.vector for r in datum.roots]
    for v in vecs:
        assert any(np.allclose(-v, w, atol=1e-9) for w in vecs)
    assert datum.inner(datum.two_rho, datum.v_2rho) == pytest.approx(datum.delta_2rho, abs=1e-10)
    for r in datum.positive_roots:
        assert datum.evaluate(r, datum.v_2rho) > 0


@pytest.mark.parametrize("pid", PAIRS)
def test_root_spaces_orthogonal_and_theta_swapped(pid):
    pair = lg.get_pair(pid)
    datum = lg.compute_root_datum(pair, "G")
    spaces = [r.space for r in datum.roots]
    for i, A in enumerate(spaces):
        for B in spaces[i + 1:]:
            assert np.abs(A @ pair.gram @ B.T).max() < 1e-9
    for r in datum.positive_roots:
        neg = next(s for s in datum.roots if np.allclose(s.vector, -r.vector, atol=1e-9))
        for X in r.space:
            tX = lg.cartan_involution(pair, X)
            # theta X lies in the span of the negative root space
            coef = np.linalg.lstsq(neg.space.T, tX, rcond=None)[0]
            assert np.allclose(neg.space.T @ coef, tX, atol=1e-9)


def test_root_datum_json_roundtrip():
    import json

    d = lg.compute_root_datum(lg.get_pair(SL2C), "H").to_json()
    assert json.loads(json.dumps(d))["delta_2rho"] == pytest.approx(0.5)


# --- k* splitting and the product chart ---------------------------------


def _random_k_vec(pair, rng):
    X = lg.random_lievec(pair, rng)
    return 0.5 * (X + pair.theta @ X)


@pytest.mark.parametrize("pid", PAIRS)
@given(seed=seeds)
def test_kstar_split_reassembles(pid, seed):
    pair = lg.get_pair(pid)
    omega = _random_k_vec(pair, np.random.default_rng(seed))
    split = lg.kstar_split(pair, omega)
    assert np.allclose(split.star + split.m, omega, atol=1e-12)
    assert abs(lg.inner(pair, split.star, split.m)) < 1e-12
    assert np.allclose(lg.iota_plus(pair, split.plus), split.star, atol=1e-12)


@pytest.mark.parametrize("pid", PAIRS)
@given(seed=seeds)
def test_iota_plus_inverse_and_norm(pid, seed):
    pair = lg.get_pair(pid)
    datum = lg.compute_root_datum(pair, "G")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(datum.u_plus_basis().shape[0]) @ datum.u_plus_basis()
    omega = lg.iota_plus(pair, w)
    assert np.allclose(lg.plus_projection(pair, datum, omega), w, atol=1e-12)
    assert lg.norm(pair, omega) == pytest.approx(math.sqrt(2) * lg.norm(pair, w), rel=1e-12)


def test_kstar_split_of_m_vector():
    pair = lg.get_pair(SL2C)
    m = lg.compute_root_datum(pair, "G").m_space[0]
    split = lg.kstar_split(pair, m)
    assert np.allclose(split.star, 0, atol=1e-12) and np.allclose(split.m, m)


def test_kstar_split_rejects_p_vector():
    pair = lg.get_pair(SL2C)
    with pytest.raises(ValueError):
        lg.kstar_split(pair, pair.a_basis[0])


@pytest.mark.parametrize("pid", PAIRS)
def test_nkam_zero_and_roundtrip(pid):
    pair = lg.get_pair(pid)
    z = lg.nkam_coords(pair, np.zeros(pair.dim_G))
    assert all(np.allclose(x, 0) for x in (z.s_plus, z.s_minus, z.tau, z.xi))
    rng = np.random.default_rng(1)
    omega = lg.kstar_split(pair, _random_k_vec(pair, rng)).star
    omega *= 0.1 / lg.norm(pair, omega)
    c = lg.nkam_coords(pair, omega)
    assert c.residual <= 1e-9


def test_nkam_outside_chart():
    pair = lg.get_pair(SL2C)
    with pytest.raises(ValueError):
        lg.nkam_coords(pair, 0.3 * pair.kh_generator)
