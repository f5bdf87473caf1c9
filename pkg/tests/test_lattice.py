import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from skewball import lattice as la
from skewball import liegroup as lg
from skewball import symspace as ss

G = la.GaussianInt
SL2C = lg.get_pair(lg.PairId.SL2C_SL2R)

# |Gamma_T| from enumerate_ball, cross-checked against brute force up to T = 6
FROZEN_COUNTS = {0.1: 8, 2.0: 72, 4.0: 552, 6.0: 4072, 8.0: 31240, 10.0: 227144}

gints = st.builds(G, st.integers(-50, 50), st.integers(-50, 50))


def test_gaussian_arithmetic():
    x, y = G(3, -2), G(-1, 4)
    assert complex(x * y) == complex(x) * complex(y)
    assert (x * x.conj()).im == 0 and (x * x.conj()).re == x.norm()
    assert -x + x == la.ZERO
    with pytest.raises(ZeroDivisionError):
        x.divmod_nearest(la.ZERO)


@given(gints, gints)
def test_nearest_division_remainder_is_small(x, y):
    assume(y != la.ZERO)
    q, r = x.divmod_nearest(y)
    assert q * y + r == x
    assert 2 * r.norm() <= y.norm()


def test_bezout_trivial():
    assert la.zi_bezout(la.ONE, la.ZERO) == (la.ONE, la.ONE, la.ZERO)


def test_bezout_two_and_one_plus_i():
    g, u, v = la.zi_bezout(G(2, 0), G(1, 1))
    assert u * G(2, 0) + v * G(1, 1) == g
    assert g.norm() == 2


def test_bezout_rejects_zero_pair():
    with pytest.raises(ValueError):
        la.zi_bezout(la.ZERO, la.ZERO)


@given(gints, gints)
def test_bezout_property(x, y):
    assume(x != la.ZERO or y != la.ZERO)
    g, u, v = la.zi_bezout(x, y)
    assert u * x + v * y == g
    assert x.norm() % g.norm() == 0 and y.norm() % g.norm() == 0
    # g divides both exactly
    for z in (x, y):
        _, r = z.divmod_nearest(g)
        assert r == la.ZERO


def test_tiny_ball_is_the_units():
    ball = la.enumerate_ball(0.1)
    mats = {tuple(np.round(m.ravel(), 9)) for m in ball.matrices()}
    i = 1j
    expected = set()
    for s in (1, -1):
        for m in ([[1, 0], [0, 1]], [[i, 0], [0, -i]], [[0, 1], [-1, 0]], [[0, i], [i, 0]]):
            expected.add(tuple(np.round(s * np.array(m, complex).ravel(), 9)))
    assert mats == expected


def test_small_T_same_as_units():
    # hs_bound < 3 means no non-unitary candidate
    T = 1.0
    assert la.hs_bound(T) == 3
    assert len(la.enumerate_ball(T)) == 8


def test_T_max_guard():
    with pytest.raises(ValueError):
        la.enumerate_ball(la.T_MAX + 1)


@pytest.mark.parametrize("T", [2.0, 4.0, 6.0])
def test_enumeration_matches_brute_force(T):
    assert la.enumerate_ball(T).keys() == la.brute_force_ball(T).keys()


def test_brute_force_cost_guard():
    with pytest.raises(ValueError):
        la.brute_force_ball(2.0, entry_bound=21)


@pytest.mark.parametrize("T,count", sorted(FROZEN_COUNTS.items()))
def test_frozen_counts(T, count):
    assert len(la.enumerate_ball(T)) == count


def test_real_subgroup_matches_naive_loop():
    T = 6.0
    bound = math.isqrt(la.hs_bound(T))
    naive = set()
    for a, b, c, d in itertools.product(range(-bound, bound + 1), repeat=4):
        if a * d - b * c == 1 and la.disp_from_hs(a * a + b * b + c * c + d * d) < T:
            naive.add((a, 0, b, 0, c, 0, d, 0))
    assert la.enumerate_ball(T, real_only=True).keys() == naive


def test_elements_exact_and_displacement_consistent():
    ball = la.enumerate_ball(5.0)
    assert len(ball.keys()) == len(ball)
    els = list(ball)
    for el in els[:: max(1, len(els) // 200)]:
        assert el.det() == la.ONE
        assert abs(el.disp - ss.dist_o(SL2C, el.matrix())) < 1e-9
    assert np.all(ball.disp < 5.0)


def test_closed_under_inverse_and_negation():
    ball = la.enumerate_ball(6.0)
    keys = ball.keys()
    inv = {tuple(row) for row in np.rint(
        np.stack([ball.inverse_matrices().real, ball.inverse_matrices().imag], -1).reshape(-1, 8)
    ).astype(int).tolist()}
    assert inv == keys
    assert {tuple(-x for x in k) for k in keys} == keys


def test_products_land_in_double_ball(rng):
    small = la.enumerate_ball(4.0).matrices()
    big = la.enumerate_ball(8.0)
    idx = rng.integers(0, len(small), size=(200, 2))
    prods = small[idx[:, 0]] @ small[idx[:, 1]]
    keys = big.keys()
    for p in prods:
        row = tuple(np.rint(np.stack([p.real, p.imag], -1).ravel()).astype(int).tolist())
        assert row in keys


def test_growth_exponent_near_one():
    Ts = [8.0, 10.0, 12.0]
    counts = [len(la.lattice_ball(T)) for T in Ts]
    assert la.growth_exponent(Ts, counts) == pytest.approx(1.0, rel=0.15)


def test_restrict_and_cache_roundtrip():
    ball = la.lattice_ball(7.0)
    again = la.lattice_ball(6.0)
    assert again.keys() == la.enumerate_ball(6.0).keys()
    assert ball.restrict(6.0).keys() == again.keys()
    with pytest.raises(ValueError):
        ball.restrict(8.0)


def test_boundary_flag_indices():
    ball = la.enumerate_ball(4.0)
    T = float(ball.disp.max()) + 5e-10
    near = la.LatticeBall(T, ball.entries).near_boundary()
    assert len(near) > 0
