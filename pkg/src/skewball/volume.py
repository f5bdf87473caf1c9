"""Volumes of Riemannian skew balls H_T[g1, g2] = {h in H : d(o, g1 h g2 o) < T}.

Haar measures are the Riemannian measures of the Killing metric.  Integrals
over H use the Cartan-coordinate formula

    int_H f = 1/|M_H| int_{K_H} int_{a_H^+} int_{K_H} f(k1 a_v k2) xi_H(v),

with the compact circle of H parametrised by angle and integrated by
Gauss-Legendre, and the radial membership set located exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from . import liegroup as lg
from . import symspace as ss
from .asymptotics import leading_constant

DEFAULT_ANGLE_ORDER = 64
T_LIMIT = 60.0


@dataclass(frozen=True)
class SkewBallSpec:
    g1: np.ndarray
    g2: np.ndarray
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")


@dataclass(frozen=True)
class HaarMasses:
    mu_K_G: float
    mu_M_G: float
    mu_K_H: float
    mu_M_H: float


def _circle_length(pair: lg.GroupPair, generator: np.ndarray, period: float) -> float:
    return period * lg.norm(pair, generator)


def haar_masses(pair: lg.GroupPair) -> HaarMasses:
    """Total masses of the compact groups K, M of G and H in the Killing metric."""
    mu_K_H = len(pair.kh_components) * _circle_length(pair, pair.kh_generator, pair.kh_period)
    mu_M_H = float(pair.m_h_order)
    e = np.eye(pair.dim_G)
    if pair.id is lg.PairId.SL2C_SL2R:
        # SU(2) is a round 3-sphere; exp(theta iH) is a great circle of period 2 pi
        rho = lg.norm(pair, e[3])
        mu_K_G = 2 * math.pi**2 * rho**3
        mu_M_G = _circle_length(pair, e[3], 2 * math.pi)
    elif pair.id is lg.PairId.SL2R2_DIAG:
        left = 0.5 * (e[1] - e[2] + e[4] - e[5])
        right = 0.5 * (e[1] - e[2] - e[4] + e[5])
        mu_K_G = _circle_length(pair, left, 2 * math.pi) * _circle_length(pair, right, 2 * math.pi)
        mu_M_G = 4.0
    else:
        # SO(3) = S^3(rho)/{+-1}; a rotation circle of period 2 pi lifts to half a great circle
        rotation = 0.5 * (e[1] - e[2] + e[4] - e[5])
        rho = _circle_length(pair, rotation, 2 * math.pi) / math.pi
        mu_K_G = math.pi**2 * rho**3
        mu_M_G = 4.0
    return HaarMasses(mu_K_G=mu_K_G, mu_M_G=mu_M_G, mu_K_H=mu_K_H, mu_M_H=mu_M_H)


def xi_density(datum: lg.RootDatum, v: np.ndarray, log: bool = False) -> float:
    """prod sinh^{m_alpha}(alpha(v)) over positive roots, v in the datum's torus coordinates."""
    vals = [datum.evaluate(r, v) for r in datum.positive_roots]
    if min(vals) < -1e-10:
        raise ValueError("v is outside the closed positive chamber")
    vals = [max(x, 0.0) for x in vals]
    if log:
        with np.errstate(divide="ignore"):
            return float(sum(r.multiplicity * np.log(np.sinh(x)) for r, x in zip(datum.positive_roots, vals)))
    return float(np.prod([np.sinh(x) ** r.multiplicity for r, x in zip(datum.positive_roots, vals)]))


def radial_mass(datum: lg.RootDatum, direction: np.ndarray, s: np.ndarray) -> np.ndarray:
    """int_0^s xi(t * direction) dt for a unit chamber direction (vectorised in s)."""
    s = np.asarray(s, float)
    rates = [(datum.evaluate(r, direction), r.multiplicity) for r in datum.positive_roots]
    if len(rates) == 1:
        a, m = rates[0]
        if m == 1:
            return (np.cosh(a * s) - 1.0) / a
        if m == 2:
            return 0.5 * (np.sinh(2 * a * s) / (2 * a) - s)

    def f(t):
        return np.prod([np.sinh(a * t) ** m for a, m in rates])

    return np.vectorize(lambda x: scipy.integrate.quad(f, 0.0, x, limit=200)[0])(s)


def h_direction(pair: lg.GroupPair) -> tuple[np.ndarray, np.ndarray]:
    """Unit H-chamber direction in H-torus and G-torus coordinates."""
    datum = lg.compute_root_datum(pair, "H")
    v_h = np.array([1.0 / datum.norm(np.array([1.0]))])
    return v_h, v_h[0] * pair.a_h_in_a


def kh_nodes(pair: lg.GroupPair, order: int = DEFAULT_ANGLE_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes on K_H: group elements and weights summing to mu(K_H)."""
    x, w = np.polynomial.legendre.leggauss(order)
    theta = 0.5 * pair.kh_period * (x + 1)
    weight = 0.5 * pair.kh_period * w * lg.norm(pair, pair.kh_generator)
    circle = np.array([lg.exp_lie(pair, t * pair.kh_generator) for t in theta])
    elems = np.concatenate([c @ circle for c in pair.kh_components])
    weights = np.tile(weight, len(pair.kh_components))
    return elems, weights


@dataclass(frozen=True)
class VolumeResult:
    value: float
    flagged: bool = False
    note: str = ""


def _interval_mass_sl2c(P: np.ndarray, Q: np.ndarray, T: float) -> np.ndarray:
    """Exact radial integral for SL2(C) > SL2(R), vectorised over (P, Q) pairs.

    ||P a_s Q||_F^2 = A u + B/u + 2C with u = e^{s/2}, and d < T iff this is
    below 2 cosh(T/2), so the membership set is one interval in u.
    """
    p0, p1 = P[..., :, 0], P[..., :, 1]
    q0, q1 = Q[..., 0, :], Q[..., 1, :]
    A = np.sum(np.abs(p0) ** 2, -1) * np.sum(np.abs(q0) ** 2, -1)
    B = np.sum(np.abs(p1) ** 2, -1) * np.sum(np.abs(q1) ** 2, -1)
    C = np.real(np.sum(p0 * np.conj(p1), -1) * np.sum(q0 * np.conj(q1), -1))
    c = 2 * np.cosh(T / 2) - 2 * C
    disc = c * c - 4 * A * B
    ok = (disc > 0) & (c > 0)
    root = np.sqrt(np.where(ok, disc, 0.0))
    u_hi = np.where(ok, (c + root) / (2 * A), 0.0)
    u_lo = np.where(ok, 2 * B / np.where(ok, c + root, 1.0), 0.0)
    u_lo = np.maximum(u_lo, 1.0)
    mass = np.where(u_hi > u_lo, (u_hi + 1 / u_hi) - (u_lo + 1 / u_lo), 0.0)
    return np.where(ok, mass, 0.0)


def _interval_mass_general(
    pair: lg.GroupPair,
    P: np.ndarray,
    Q: np.ndarray,
    T: float,
    s_max: float,
    step: float = 0.05,
    iterations: int = 55,
) -> tuple[np.ndarray, int]:
    """Radial integral by grid bracketing and batched bisection.

    Returns the masses and the number of (P, Q) pairs whose membership set is
    not a single interval starting at the origin.
    """
    datum = lg.compute_root_datum(pair, "H")
    v_h, v_g = h_direction(pair)
    P_inv, Q_inv = np.linalg.inv(P), np.linalg.inv(Q)

    def inside_at(s, rows):
        a = lg.exp_torus(pair, s[..., None] * v_g)
        a_inv = lg.exp_torus(pair, -s[..., None] * v_g)
        return ss.dist_o(pair, P[rows] @ a @ Q[rows], Q_inv[rows] @ a_inv @ P_inv[rows]) < T

    grid = np.arange(0.0, s_max + step, step)
    rows = np.arange(P.shape[0])[:, None]
    inside = inside_at(np.broadcast_to(grid, (P.shape[0], grid.size)), rows)
    if inside[:, -1].any():
        raise ValueError("radial grid does not reach the boundary of the skew ball")
    change = np.diff(inside.astype(np.int8), axis=1)
    i_idx, j_idx = np.nonzero(change)
    lo, hi = grid[j_idx], grid[j_idx + 1]
    state = inside[i_idx, j_idx]
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        same = inside_at(mid, i_idx) == state
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    edge_mass = radial_mass(datum, v_h, 0.5 * (lo + hi))
    # leaving the set adds the mass up to the edge, entering it subtracts it
    sign = np.where(state, 1.0, -1.0)
    masses = np.bincount(i_idx, weights=sign * edge_mass, minlength=P.shape[0])
    counts = np.bincount(i_idx, minlength=P.shape[0])
    irregular = int(np.sum(counts > np.where(inside[:, 0], 1, 2)))
    return masses, irregular


def skew_ball_volume_numeric(
    pair: lg.GroupPair,
    spec: SkewBallSpec,
    order: int = DEFAULT_ANGLE_ORDER,
    method: str = "auto",
) -> VolumeResult:
    """mu_H(H_T[g1, g2]) by angle quadrature on K_H x K_H and exact radial masses."""
    if spec.T > T_LIMIT:
        raise ValueError(f"T = {spec.T} exceeds the supported limit {T_LIMIT}")
    masses = haar_masses(pair)
    k, w = kh_nodes(pair, order)
    P = np.asarray(spec.g1) @ k
    Q = k @ np.asarray(spec.g2)
    if method == "auto":
        method = "exact" if pair.id is lg.PairId.SL2C_SL2R else "bisection"
    flagged, note = False, ""
    if method == "exact":
        if pair.id is not lg.PairId.SL2C_SL2R:
            raise ValueError("the exact radial method is specific to SL2C_SL2R")
        inner = _interval_mass_sl2c(P[:, None], Q[None, :], spec.T)
    elif method == "bisection":
        D = ss.dist_o(pair, spec.g1) + ss.dist_o(pair, spec.g2)
        s_max = spec.T + D + 1.0
        inner = np.empty((len(k), len(k)))
        irregular = 0
        for i in range(len(k)):
            inner[i], bad = _interval_mass_general(pair, np.repeat(P[i:i + 1], len(k), 0), Q, spec.T, s_max)
            irregular += bad
        if irregular:
            flagged, note = True, f"{irregular} angle pairs with non-interval radial sets"
    else:
        raise ValueError(f"unknown method {method!r}")
    value = float(w @ inner @ w) / masses.mu_M_H
    return VolumeResult(value, flagged, note)


def _drift_factors(pair: lg.GroupPair, g1: np.ndarray, g2: np.ndarray, order: int):
    datum = lg.compute_root_datum(pair, "H")
    v2rho_g = datum.v_2rho[0] * pair.a_h_in_a
    delta = datum.delta_2rho
    k, w = kh_nodes(pair, order)
    e_plus, e_minus = ss.base_boundary(pair), ss.opposite_boundary(pair)
    opp = ss.opposition_matrix(pair)
    first = np.array([ss.iwasawa_cocycle(pair, g1 @ kk, e_plus) for kk in k])
    second = np.array([opp @ ss.iwasawa_cocycle(pair, np.linalg.inv(kk @ g2), e_minus) for kk in k])
    f1 = np.exp(-delta * (first @ pair.a_gram @ v2rho_g))
    f2 = np.exp(-delta * (second @ pair.a_gram @ v2rho_g))
    return float(w @ f1), float(w @ f2)


def skewball_main_constant(
    pair: lg.GroupPair,
    g1: np.ndarray,
    g2: np.ndarray,
    order: int = DEFAULT_ANGLE_ORDER,
) -> float:
    """C[g1, g2]; the drift splits into a k1-part and a k2-part, so the double
    integral is a product of two circle integrals."""
    datum = lg.compute_root_datum(pair, "H")
    masses = haar_masses(pair)
    omega0 = leading_constant(pair.rank_H, datum.delta_2rho)
    i1, i2 = _drift_factors(pair, np.asarray(g1), np.asarray(g2), order)
    return omega0 / (2**datum.m_phi_plus * masses.mu_M_H) * i1 * i2


def log_skew_ball_volume_asymptotic(pair: lg.GroupPair, spec: SkewBallSpec) -> float:
    datum = lg.compute_root_datum(pair, "H")
    C = skewball_main_constant(pair, spec.g1, spec.g2)
    return math.log(C) + (pair.rank_H - 1) / 2 * math.log(spec.T) + datum.delta_2rho * spec.T


def skew_ball_volume_asymptotic(pair: lg.GroupPair, spec: SkewBallSpec) -> float:
    """Main term C[g1, g2] T^{(r_H-1)/2} e^{delta T}."""
    return math.exp(log_skew_ball_volume_asymptotic(pair, spec))


def volume_ratio_alpha(pair: lg.GroupPair, g1: np.ndarray, g2: np.ndarray) -> float:
    """Limit of mu_H(H_T[g1, g2^{-1}]) / mu_H(H_T)."""
    e = pair.identity()
    return skewball_main_constant(pair, g1, np.linalg.inv(g2)) / skewball_main_constant(pair, e, e)


def ball_volume_closed(pair: lg.GroupPair, T: float) -> float:
    """mu_H(H_T) for the untwisted ball, from the radial mass."""
    masses = haar_masses(pair)
    datum = lg.compute_root_datum(pair, "H")
    v_h, _ = h_direction(pair)
    return masses.mu_K_H**2 / masses.mu_M_H * float(radial_mass(datum, v_h, T))
