"""Exponential integrals over Euclidean balls and cones.

For a linear functional of norm ``delta`` on an ``r``-dimensional Euclidean
space the integral of ``exp(lambda(v))`` over the ball of radius ``T`` has the
asymptotic expansion ``sum_k omega_k T^{(r-1)/2-k} e^{delta T}``.  The module
provides the coefficients, the partial sums, an independent quadrature, and
the cone-restricted variants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.special

DEFAULT_ORDER = 3
DEFAULT_SEED = 0x5EED


@dataclass(frozen=True)
class ExpansionSpec:
    r: int
    delta: float
    n: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("dimension r must be at least 1")
        if not self.delta > 0:
            raise ValueError("growth rate delta must be positive")
        if self.n < 0:
            raise ValueError("expansion order must be non-negative")


@dataclass(frozen=True)
class ConeSpec:
    tau: float
    v_axis: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if not 0 < self.tau <= math.sqrt(2):
            raise ValueError("cone aperture tau must lie in (0, sqrt 2]")


def unit_ball_volume(r: int) -> float:
    return math.pi ** (r / 2) / math.gamma(r / 2 + 1)


def omega_coeff(spec: ExpansionSpec, k: int) -> float:
    r, d = spec.r, spec.delta
    if r < 2:
        raise ValueError("omega_k is defined for r >= 2; use the sinh closed form for r = 1")
    if k < 0:
        raise ValueError("k must be non-negative")
    half = (r - 1) / 2
    return (
        (-1) ** k
        * 2 ** (half - k)
        / d ** (half + 1 + k)
        * scipy.special.binom(half, k)
        * unit_ball_volume(r - 1)
        * math.gamma(half + 1 + k)
    )


def leading_constant(r: int, delta: float) -> float:
    """omega_0, including the rank-one value 1/delta."""
    if r == 1:
        return 1.0 / delta
    return omega_coeff(ExpansionSpec(r, delta), 0)


def log_ball_exp_integral_closed(spec: ExpansionSpec, T: float) -> float:
    """Logarithm of the closed form, safe for large T."""
    if T <= 0:
        raise ValueError("T must be positive")
    if spec.r == 1:
        x = spec.delta * T
        # log((2/d) sinh x) = x + log(1 - e^{-2x}) - log d
        return x + math.log1p(-math.exp(-2 * x)) - math.log(spec.delta)
    s = sum(omega_coeff(spec, k) * T ** ((spec.r - 1) / 2 - k) for k in range(spec.n + 1))
    if s <= 0:
        raise ValueError("partial sum is not positive at this T; increase T")
    return math.log(s) + spec.delta * T


def ball_exp_integral_closed(spec: ExpansionSpec, T: float) -> float:
    """Exact value for r = 1, order-n partial sum for r >= 2.

    The partial-sum remainder is O(T^{(r-1)/2-(n+1)} e^{delta T}).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if spec.r == 1:
        return 2.0 / spec.delta * math.sinh(spec.delta * T)
    return math.exp(log_ball_exp_integral_closed(spec, T))


def _slice_integral_unit_rate(r: int, T: float, rtol: float) -> float:
    """beta_{r-1} * int_{-T}^{T} e^{x} (T^2 - x^2)^{(r-1)/2} dx, scaled by e^{-T}."""
    half = (r - 1) / 2
    # substitute x = T - y to keep the integrand O(1) near the growing endpoint
    f = lambda y: math.exp(-y) * (y * (2 * T - y)) ** half  # noqa: E731
    val, err = scipy.integrate.quad(f, 0.0, 2 * T, epsabs=0.0, epsrel=rtol, limit=500)
    if not np.isfinite(val) or err > 10 * rtol * abs(val):
        raise ArithmeticError(f"quadrature did not converge (estimate {val}, error {err})")
    return unit_ball_volume(r - 1) * val if r > 1 else val


def log_ball_exp_integral_quad(spec: ExpansionSpec, T: float, rtol: float = 1e-11) -> float:
    """Logarithm of the quadrature value; uses value(delta, T) = value(1, delta T) / delta^r."""
    if T <= 0:
        raise ValueError("T must be positive")
    x = spec.delta * T
    return math.log(_slice_integral_unit_rate(spec.r, x, rtol)) + x - spec.r * math.log(spec.delta)


def ball_exp_integral_quad(spec: ExpansionSpec, T: float, rtol: float = 1e-11) -> float:
    """Integral of e^{lambda(v)} over the radius-T ball by the radial-slice reduction."""
    if spec.delta * T > 700:
        raise OverflowError("value overflows; use log_ball_exp_integral_quad")
    return math.exp(log_ball_exp_integral_quad(spec, T, rtol))


@dataclass(frozen=True)
class ConeIntegral:
    inside: float
    outside: float
    outside_bound: float
    standard_error: float = 0.0


def cone_outside_bound(spec: ExpansionSpec, cone: ConeSpec, T: float) -> float:
    """beta_r T^r e^{delta (1 - tau^2/2) T}."""
    return unit_ball_volume(spec.r) * T**spec.r * math.exp(spec.delta * (1 - cone.tau**2 / 2) * T)


def cone_exp_integral(
    spec: ExpansionSpec,
    cone: ConeSpec,
    T: float,
    samples: int = 10**6,
    seed: int = DEFAULT_SEED,
) -> ConeIntegral:
    """Integral of e^{lambda(v)} over the ball of radius T split by the cone around the
    direction of maximal growth; returns inside, the measured outside mass and the bound.

    The cone is taken around the gradient of lambda, so in polar coordinates the
    integrand depends on the radius and the angle to the axis only.
    """
    d, r = spec.delta, spec.r
    bound = cone_outside_bound(spec, cone, T)
    if r == 1:
        inside = (math.exp(d * T) - 1) / d
        outside = (1 - math.exp(-d * T)) / d
        return ConeIntegral(inside, outside, bound)
    # ||u - axis|| < tau  <=>  cos(angle) > 1 - tau^2/2
    cos_min = 1 - cone.tau**2 / 2
    if r == 2:
        phi_max = math.acos(max(-1.0, cos_min))

        def radial(phi: float) -> float:
            c = d * math.cos(phi)
            if abs(c * T) < 1e-8:
                return T**2 / 2
            # int_0^T rho e^{c rho} d rho
            return (math.exp(c * T) * (c * T - 1) + 1) / c**2

        inside = 2 * scipy.integrate.quad(radial, 0.0, phi_max, epsrel=1e-12, limit=200)[0]
        outside = 2 * scipy.integrate.quad(radial, phi_max, math.pi, epsrel=1e-12, limit=200)[0]
        return ConeIntegral(inside, outside, bound)
    # r >= 3: stratified radial Monte Carlo over the ball, directions uniform
    rng = np.random.default_rng(seed)
    strata = 64
    per = samples // strata
    edges = np.linspace(0.0, 1.0, strata + 1)
    u = (edges[:-1, None] + rng.random((strata, per)) / strata).ravel()
    rho = T * u ** (1.0 / r)
    dirs = rng.standard_normal((rho.size, r))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    cos = dirs[:, 0]
    vol = unit_ball_volume(r) * T**r
    f = np.exp(d * rho * cos - d * T)  # scaled by e^{-dT}
    mask = cos > cos_min
    scale = vol * math.exp(d * T)
    inside = scale * float(np.mean(f * mask))
    outside = scale * float(np.mean(f * ~mask))
    se = scale * float(np.std(f * mask) / math.sqrt(f.size))
    return ConeIntegral(inside, outside, bound, se)
