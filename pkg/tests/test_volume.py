import math

import numpy as np
import pytest

from skewball import liegroup as lg
from skewball import symspace as ss
from skewball import volume as vol

SL2C = lg.get_pair(lg.PairId.SL2C_SL2R)


def small_element(pair, rng, radius=1.0):
    """Random element with d(o, g o) <= radius."""
    while True:
        g = lg.random_element(pair, rng, scale=0.4)
        if ss.dist_o(pair, g) <= radius:
            return g


def test_spec_rejects_nonpositive_T():
    with pytest.raises(ValueError):
        vol.SkewBallSpec(SL2C.identity(), SL2C.identity(), 0.0)


def test_sl2c_masses():
    m = vol.haar_masses(SL2C)
    assert m.mu_K_H == pytest.approx(8 * math.pi, abs=1e-9)
    assert m.mu_M_H == 2
    assert m.mu_M_G == pytest.approx(8 * math.pi, abs=1e-9)
    assert m.mu_K_G == pytest.approx(128 * math.pi**2, rel=1e-12)


@pytest.mark.parametrize("pid", list(lg.PairId))
def test_masses_positive(pid):
    m = vol.haar_masses(lg.get_pair(pid))
    assert min(m.mu_K_G, m.mu_M_G, m.mu_K_H, m.mu_M_H) > 0


def test_xi_density_values():
    datum_h = lg.compute_root_datum(SL2C, "H")
    datum_g = lg.compute_root_datum(SL2C, "G")
    v_h, v_g = vol.h_direction(SL2C)
    assert vol.xi_density(datum_h, 0 * v_h) == 0.0
    for t in (0.3, 2.0, 7.0):
        assert vol.xi_density(datum_h, t * v_h) == pytest.approx(math.sinh(t / 2), rel=1e-12)
        assert vol.xi_density(datum_g, t * v_g) == pytest.approx(math.sinh(t / 2) ** 2, rel=1e-12)
        assert vol.xi_density(datum_h, t * v_h, log=True) == pytest.approx(math.log(math.sinh(t / 2)), rel=1e-12)


def test_xi_density_rejects_outside_chamber():
    datum = lg.compute_root_datum(SL2C, "H")
    v_h, _ = vol.h_direction(SL2C)
    with pytest.raises(ValueError):
        vol.xi_density(datum, -v_h)


def test_radial_direction_is_unit_speed():
    _, v_g = vol.h_direction(SL2C)
    for s in (0.5, 3.0):
        assert ss.dist_o(SL2C, lg.exp_torus(SL2C, s * v_g)) == pytest.approx(s, abs=1e-10)


@pytest.mark.parametrize("T", [0.5, 4.0, 20.0])
def test_untwisted_ball_closed_form(T):
    expected = 64 * math.pi**2 * (math.cosh(T / 2) - 1)
    assert vol.ball_volume_closed(SL2C, T) == pytest.approx(expected, rel=1e-12)
    e = SL2C.identity()
    assert vol.skew_ball_volume_numeric(SL2C, vol.SkewBallSpec(e, e, T)).value == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("pid", list(lg.PairId))
def test_bisection_matches_closed_form(pid):
    pair = lg.get_pair(pid)
    e = pair.identity()
    res = vol.skew_ball_volume_numeric(pair, vol.SkewBallSpec(e, e, 3.0), order=12, method="bisection")
    assert not res.flagged
    assert res.value == pytest.approx(vol.ball_volume_closed(pair, 3.0), rel=1e-8)


def test_bisection_matches_exact_for_skew_ball(rng):
    g1, g2 = small_element(SL2C, rng), small_element(SL2C, rng)
    spec = vol.SkewBallSpec(g1, g2, 5.0)
    exact = vol.skew_ball_volume_numeric(SL2C, spec, order=24, method="exact").value
    bis = vol.skew_ball_volume_numeric(SL2C, spec, order=24, method="bisection").value
    assert bis == pytest.approx(exact, rel=1e-8)


def test_k_invariance_of_untwisted_ball(rng):
    k1 = ss.random_k(SL2C, rng)
    k2 = ss.random_k(SL2C, rng)
    e = SL2C.identity()
    a = vol.skew_ball_volume_numeric(SL2C, vol.SkewBallSpec(k1, k2, 6.0)).value
    b = vol.skew_ball_volume_numeric(SL2C, vol.SkewBallSpec(e, e, 6.0)).value
    assert a == pytest.approx(b, rel=1e-10)


def test_triangle_containment(rng):
    for _ in range(5):
        g1, g2 = small_element(SL2C, rng), small_element(SL2C, rng)
        D = ss.dist_o(SL2C, g1) + ss.dist_o(SL2C, g2)
        T = 6.0
        skew = vol.skew_ball_volume_numeric(SL2C, vol.SkewBallSpec(g1, g2, T), order=32).value
        assert skew <= vol.ball_volume_closed(SL2C, T + D) * (1 + 1e-9)
        assert skew >= vol.ball_volume_closed(SL2C, T - D) * (1 - 1e-9)


def test_unknown_method_and_T_limit():
    e = SL2C.identity()
    with pytest.raises(ValueError):
        vol.skew_ball_volume_numeric(SL2C, vol.SkewBallSpec(e, e, 1.0), method="nope")
    with pytest.raises(ValueError):
        vol.skew_ball_volume_numeric(SL2C, vol.SkewBallSpec(e, e, 61.0))


def test_main_constant_at_identity():
    e = SL2C.identity()
    assert vol.skewball_main_constant(SL2C, e, e) == pytest.approx(32 * math.pi**2, rel=1e-10)


def test_main_constant_continuity(rng):
    g1, g2 = small_element(SL2C, rng), small_element(SL2C, rng)
    bump = lg.exp_lie(SL2C, 1e-6 * rng.standard_normal(6))
    c0 = vol.skewball_main_constant(SL2C, g1, g2)
    c1 = vol.skewball_main_constant(SL2C, g1 @ bump, g2)
    assert abs(c1 / c0 - 1) <= 1e-4


def test_main_constant_drift_bound(rng):
    cee = 32 * math.pi**2
    for _ in range(5):
        g1, g2 = small_element(SL2C, rng), small_element(SL2C, rng)
        D = ss.dist_o(SL2C, g1) + ss.dist_o(SL2C, g2)
        c = vol.skewball_main_constant(SL2C, g1, g2)
        assert cee * math.exp(-0.5 * D) * (1 - 1e-9) <= c <= cee * math.exp(0.5 * D) * (1 + 1e-9)


def test_asymptotic_ratio_identity():
    e = SL2C.identity()
    ratios = []
    for T in (15.0, 20.0, 25.0, 30.0):
        spec = vol.SkewBallSpec(e, e, T)
        ratios.append(vol.skew_ball_volume_numeric(SL2C, spec).value / vol.skew_ball_volume_asymptotic(SL2C, spec))
    assert all(0.95 <= r <= 1.05 for r in ratios[1:])
    devs = [abs(r - 1) for r in ratios]
    assert devs == sorted(devs, reverse=True)


def test_asymptotic_ratio_random_pairs(rng):
    for _ in range(3):
        g1, g2 = small_element(SL2C, rng), small_element(SL2C, rng)
        spec = vol.SkewBallSpec(g1, g2, 30.0)
        ratio = vol.skew_ball_volume_numeric(SL2C, spec).value / vol.skew_ball_volume_asymptotic(SL2C, spec)
        assert ratio == pytest.approx(1, abs=0.1)


def test_growth_exponent():
    Ts = np.linspace(20, 30, 6)
    logs = [math.log(vol.ball_volume_closed(SL2C, T)) for T in Ts]
    assert np.polyfit(Ts, logs, 1)[0] == pytest.approx(0.5, abs=0.02)


def test_alpha_trivial_and_h_invariant(rng):
    e = SL2C.identity()
    assert vol.volume_ratio_alpha(SL2C, e, e) == pytest.approx(1, abs=1e-12)
    for _ in range(3):
        h1 = lg.random_h_element(SL2C, rng)
        h2 = lg.random_h_element(SL2C, rng)
        assert vol.volume_ratio_alpha(SL2C, h1, h2) == pytest.approx(1, abs=1e-6)
