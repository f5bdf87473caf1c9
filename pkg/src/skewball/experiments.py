"""Empirical orbit-counting experiments for SL2(Z[i]) acting on oriented circles.

Circles are Hermitian 2x2 matrices W of determinant -1; g in SL2(C) acts by
W -> (g^{-1})^* W g^{-1}, and the real line W0 = [[0, -i], [i, 0]] has
stabiliser exactly SL2(R), so circles are points of G/H.

Points of hyperbolic 3-space are written (z, h) with o = (0, 1).  Haar
measures follow the Killing metric: for SL2(C) the compact group SU(2) has mass
128 pi^2, its torus centraliser 8 pi, and d(o, a_s o) = s for a_s = diag(e^{s/4}, e^{-s/4}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.integrate

from . import lattice as lat
from . import liegroup as lg
from . import volume as vol

PAIR_ID = lg.PairId.SL2C_SL2R
DEFAULT_SEED = 0x5EED
DEFAULT_SAMPLES = 10**6
RADIAL_KNOTS = 2**14
CHUNK = 2**17
# vol(PSL2(Z[i]) \ H^3) for curvature -1
PICARD_VOLUME = 0.30532186472


def _pair() -> lg.GroupPair:
    return lg.get_pair(PAIR_ID)


def masses() -> vol.HaarMasses:
    return vol.haar_masses(_pair())


def g_ball_mass(T: float) -> float:
    """mu_G(G_T) = mu_K^2 / mu_M * (sinh T - T) / 2."""
    m = masses()
    return m.mu_K_G**2 / m.mu_M_G * 0.5 * (math.sinh(T) - T)


def fitted_inverse_covolume(T: float = 12.0) -> float:
    """|Gamma_T| / mu_G(G_T) at the largest enumerated radius: the shared covolume fit."""
    return len(lat.lattice_ball(T)) / g_ball_mass(T)


def classical_inverse_covolume() -> float:
    """1 / mu(SL2(Z[i]) \\ SL2(C)) from the Picard volume.

    Killing distances on H^3 are twice the curvature -1 ones, so volumes scale
    by 8, the fibre is SU(2)/{+-1}.
    """
    return 1.0 / (8 * PICARD_VOLUME * masses().mu_K_G / 2)


# --------------------------------------------------------------------------
# Circles


W0 = np.array([[0, -1j], [1j, 0]])


@dataclass(frozen=True)
class CircleW:
    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        if np.abs(W - W.conj().T).max() > 1e-12 * max(1.0, np.abs(W).max()):
            raise ValueError("circle matrix is not Hermitian")
        det = np.linalg.det(W).real
        if abs(det + 1) > 1e-10 * max(1.0, np.abs(W).max() ** 2):
            raise ValueError(f"circle matrix has determinant {det}, expected -1")
        object.__setattr__(self, "W", W)


def _normalise(W: np.ndarray) -> np.ndarray:
    W = 0.5 * (W + np.conj(np.swapaxes(W, -1, -2)))
    det = np.real(W[..., 0, 0] * W[..., 1, 1] - W[..., 0, 1] * W[..., 1, 0])
    return W / np.sqrt(-det)[..., None, None]


def _act(g_inv: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(g_inv, -1, -2)) @ W @ g_inv


def act_on_circle(g: np.ndarray, C: CircleW) -> CircleW:
    return CircleW(_normalise(_act(np.linalg.inv(g), C.W)))


def circle_of(g: np.ndarray) -> CircleW:
    """The circle g W0, i.e. the point g H of G/H."""
    return act_on_circle(g, CircleW(W0))


def plane_distance(W: np.ndarray) -> np.ndarray:
    """Killing distance from o to the hyperbolic plane bounded by the circle W."""
    return 2 * np.arcsinh(0.5 * np.abs(np.real(np.trace(W, axis1=-2, axis2=-1))))


def is_rational_circle(C: CircleW, max_den: int = 10**4, tol: float = 1e-10) -> bool:
    """True when W is proportional to a Gaussian-rational matrix.

    Such circles have a lattice stabiliser in SL2(Z[i]); their H-orbits are
    periodic and the counting limit does not apply.
    """
    W = C.W
    comps = np.array([W[0, 0].real, W[1, 1].real, W[0, 1].real, W[0, 1].imag])
    pivot = comps[np.argmax(np.abs(comps))]
    for x in comps / pivot:
        if abs(float(Fraction(float(x)).limit_denominator(max_den)) - x) > tol:
            return False
    return True


def _irrational_lievec() -> np.ndarray:
    return np.array([
        math.sqrt(2) - 1, math.sqrt(3) - 1.5, math.pi / 10,
        math.e / 10, math.sqrt(5) - 2, 1 / math.sqrt(7),
    ])


def generic_base_element() -> np.ndarray:
    """A fixed element g0 with algebraically independent-looking irrational entries."""
    return lg.exp_lie(_pair(), _irrational_lievec())


def generic_base_circle() -> CircleW:
    return circle_of(generic_base_element())


def periodic_base_circle() -> CircleW:
    """The real line; its stabiliser contains the lattice SL2(Z) of SL2(R)."""
    return CircleW(W0.copy())


# --------------------------------------------------------------------------
# Bump functions


def bump_profile(r: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - r^2)) on r < 1, zero outside."""
    r = np.asarray(r, float)
    out = np.zeros_like(r)
    inside = r < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class BumpSpec:
    W_ref: CircleW
    scale: float
    amplitude: float = 1.0
    D_psi: float = field(init=False)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("bump scale must be positive")
        # |tr(W - W_ref)| <= sqrt 2 ||W - W_ref||_F bounds the plane distance on the support
        trace = abs(np.trace(self.W_ref.W).real) + math.sqrt(2) * self.scale
        object.__setattr__(self, "D_psi", float(2 * math.asinh(trace / 2)))

    def scaled(self, factor: float) -> BumpSpec:
        return BumpSpec(self.W_ref, self.scale, self.amplitude * factor)


def default_bump() -> BumpSpec:
    g_ref = lg.exp_lie(_pair(), np.array([0.4, 0.1, -0.2, 0.05, 0.3, 0.1]))
    return BumpSpec(circle_of(g_ref), scale=1.5)


def psi_eval(bump: BumpSpec, W: np.ndarray | CircleW) -> np.ndarray | float:
    W = W.W if isinstance(W, CircleW) else np.asarray(W)
    r = np.sqrt(np.sum(np.abs(W - bump.W_ref.W) ** 2, axis=(-2, -1))) / bump.scale
    val = bump.amplitude * bump_profile(r)
    return float(val) if np.ndim(val) == 0 else val


# --------------------------------------------------------------------------
# Orbit sums and G-ball averages


def ball_volume_h(T: float) -> float:
    """mu_H(H_T) = 64 pi^2 (cosh(T/2) - 1)."""
    return vol.ball_volume_closed(_pair(), T)


@dataclass(frozen=True)
class OrbitSum:
    T: float
    total: float
    normalised: float
    hits: int


def gamma_orbit_sum(T: float, y0: CircleW, bump: BumpSpec, ball: lat.LatticeBall | None = None) -> OrbitSum:
    """Sum of psi(gamma y0) over the lattice ball of radius T."""
    ball = lat.lattice_ball(T) if ball is None else ball.restrict(T)
    total, hits = 0.0, 0
    inv = ball.inverse_matrices()
    for start in range(0, len(ball), CHUNK):
        vals = psi_eval(bump, _act(inv[start:start + CHUNK], y0.W))
        total += float(np.sum(vals))
        hits += int(np.count_nonzero(vals))
    return OrbitSum(T, total, total / ball_volume_h(T), hits)


@dataclass(frozen=True)
class MCConfig:
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    rel_tol: float = 0.03
    # sample count doubles until the relative error meets rel_tol, up to this cap
    max_samples: int = 2**25


@dataclass(frozen=True)
class MCEstimate:
    value: float
    standard_error: float
    samples: int
    flagged: bool

    @property
    def rel_error(self) -> float:
        return self.standard_error / abs(self.value) if self.value else math.inf


def _radial_mass_g(s: np.ndarray) -> np.ndarray:
    """int_0^s sinh^2(t/2) dt."""
    return 0.5 * (np.sinh(s) - s)


def _radial_inverse_table(T: float, knots: int = RADIAL_KNOTS) -> tuple[np.ndarray, np.ndarray]:
    # knots uniform in the CDF, placed by Newton on the closed-form mass
    total = _radial_mass_g(T)
    u = np.linspace(0.0, 1.0, knots)
    s = np.full(knots, T)
    target = u * total
    for _ in range(100):
        f = _radial_mass_g(s) - target
        step = f / np.maximum(np.sinh(s / 2) ** 2, 1e-300)
        s = np.clip(s - step, 0.0, T)
        if np.max(np.abs(step)) < 1e-13:
            break
    # small-s branch where the mass behaves like s^3/12
    small = u * total < 1e-12
    s[small] = np.cbrt(12 * u[small] * total)
    return u, s


def random_su2(rng: np.random.Generator, n: int) -> np.ndarray:
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    a = q[:, 0] + 1j * q[:, 1]
    b = q[:, 2] + 1j * q[:, 3]
    return np.stack([np.stack([a, b], -1), np.stack([-np.conj(b), np.conj(a)], -1)], -2)


def _torus(s: np.ndarray) -> np.ndarray:
    out = np.zeros(s.shape + (2, 2), complex)
    out[..., 0, 0] = np.exp(s / 4)
    out[..., 1, 1] = np.exp(-s / 4)
    return out


def _g_ball_mc(T: float, y0: CircleW, bump: BumpSpec, samples: int, seed: int) -> tuple[float, float]:
    region = g_ball_mass(T)
    u_knots, s_knots = _radial_inverse_table(T)
    rng = np.random.default_rng(seed)
    acc = acc2 = 0.0
    for start in range(0, samples, CHUNK):
        size = min(CHUNK, samples - start)
        k1 = random_su2(rng, size)
        k2 = random_su2(rng, size)
        u = (start + np.arange(size) + rng.random(size)) / samples
        s = np.interp(u, u_knots, s_knots)
        # (k1 a_s k2)^{-1} = k2^* a_{-s} k1^*
        g_inv = np.conj(np.swapaxes(k2, -1, -2)) @ _torus(-s) @ np.conj(np.swapaxes(k1, -1, -2))
        vals = psi_eval(bump, _act(g_inv, y0.W))
        acc += float(np.sum(vals))
        acc2 += float(np.sum(vals**2))
    mean = acc / samples
    var = max(acc2 / samples - mean**2, 0.0)
    return region * mean, region * math.sqrt(var / samples)


def g_ball_average(T: float, y0: CircleW, bump: BumpSpec, mc: MCConfig = MCConfig()) -> MCEstimate:
    """Integral of psi(g y0) over the G-ball of radius T by Monte Carlo in Cartan coordinates.

    The radial variable is stratified and angles are Haar-uniform on SU(2).
    The same seed gives common random numbers across T.  The iid standard
    error is reported, which overstates the stratified one.
    """
    n = mc.samples
    while True:
        value, se = _g_ball_mc(T, y0, bump, n, mc.seed)
        ok = value != 0 and se <= mc.rel_tol * abs(value)
        if ok or 2 * n > mc.max_samples:
            break
        n *= 2
    return MCEstimate(value, se, n, flagged=not ok)


@dataclass
class ScanTable:
    columns: tuple[str, ...]
    rows: list[tuple]
    flagged: bool = False
    notes: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def duality_ratio_scan(
    T_grid: list[float],
    y0: CircleW,
    bump: BumpSpec,
    mc: MCConfig = MCConfig(),
) -> ScanTable:
    """R(T) = (orbit sum) / (G-ball integral); tends to 1 / covolume for generic y0."""
    ball = lat.lattice_ball(max(T_grid))
    rows, flagged, notes = [], False, []
    if is_rational_circle(y0):
        flagged = True
        notes.append("base circle is rational: periodic H-orbit, no convergence asserted")
    for T in T_grid:
        orbit = gamma_orbit_sum(T, y0, bump, ball)
        integral = g_ball_average(T, y0, bump, mc)
        if integral.flagged:
            flagged = True
            notes.append(f"T={T}: Monte Carlo relative error {integral.rel_error:.3g} above tolerance")
        R = orbit.total / integral.value if integral.value else math.nan
        rows.append((T, orbit.total, integral.value, R, integral.standard_error))
    table = ScanTable(("T", "sum", "integral", "R", "integral_se"), rows, flagged, notes)
    if len(rows) >= 2:
        table.summary["last_ratio_change"] = abs(rows[-1][3] / rows[-2][3] - 1)
    table.summary["inverse_covolume_fit"] = rows[-1][3]
    table.summary["inverse_covolume_classical"] = classical_inverse_covolume()
    return table


def limiting_density_check(
    T_grid: list[float],
    y0: CircleW,
    bump: BumpSpec,
    mc: MCConfig = MCConfig(),
) -> ScanTable:
    """L(T) = G-ball integral / mu_H(H_T) and its successive differences."""
    rows, flagged = [], False
    prev = None
    for T in T_grid:
        est = g_ball_average(T, y0, bump, mc)
        flagged |= est.flagged
        L = est.value / ball_volume_h(T)
        diff = math.nan if prev is None else abs(L - prev)
        rows.append((T, L, est.standard_error / ball_volume_h(T), diff))
        prev = L
    return ScanTable(("T", "L", "L_se", "abs_diff"), rows, flagged)


# --------------------------------------------------------------------------
# Automorphisation over Gamma = SL2(Z[i])


@dataclass(frozen=True)
class GBumpSpec:
    """Phi(g) = bump(d(c o, g o) / radius): smooth, right K-invariant, compact support."""

    center: np.ndarray
    radius: float = 1.0

    def __post_init__(self):
        if not 0 < self.radius <= 1:
            raise ValueError("radius must lie in (0, 1]")


def phi_eval(gbump: GBumpSpec, g: np.ndarray) -> np.ndarray:
    from .symspace import dist_o

    c_inv = np.linalg.inv(gbump.center)
    return bump_profile(dist_o(_pair(), c_inv @ g) / gbump.radius)


def space_integral(gbump: GBumpSpec) -> float:
    """Integral of Phi over G, by the radial Cartan formula."""
    m = masses()
    f = lambda s: bump_profile(np.array(s / gbump.radius)) * math.sinh(s / 2) ** 2  # noqa: E731
    val = scipy.integrate.quad(f, 0.0, gbump.radius, epsabs=0, epsrel=1e-12, limit=200)[0]
    return m.mu_K_G**2 / m.mu_M_G * val


def upper_half_space_point(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(z, h) coordinates of g o (batched)."""
    a, b, c, d = g[..., 0, 0], g[..., 0, 1], g[..., 1, 0], g[..., 1, 1]
    den = np.abs(c) ** 2 + np.abs(d) ** 2
    return (b * np.conj(d) + a * np.conj(c)) / den, 1.0 / den


def reduce_to_fundamental_domain(g: np.ndarray, max_iter: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """gamma0 in SL2(Z[i]) with gamma0 g o in the Picard domain |Re z|, |Im z| <= 1/2,
    |z|^2 + h^2 >= 1.  Returns (gamma0, gamma0 @ g), batched over leading axes."""
    g = np.array(g, dtype=complex)
    gam = np.zeros_like(g)
    gam[..., 0, 0] = gam[..., 1, 1] = 1
    for _ in range(max_iter):
        z, h = upper_half_space_point(g)
        m = np.round(z.real) + 1j * np.round(z.imag)
        shift = np.zeros_like(g)
        shift[..., 0, 0] = shift[..., 1, 1] = 1
        shift[..., 0, 1] = -m
        g = shift @ g
        gam = shift @ gam
        z = z - m
        invert = np.abs(z) ** 2 + h**2 < 1 - 1e-12
        if not invert.any():
            return gam, g
        S = np.zeros_like(g)
        S[..., 0, 0] = S[..., 1, 1] = 1
        S[invert] = np.array([[0, -1], [1, 0]])
        g = S @ g
        gam = S @ gam
    raise RuntimeError("fundamental-domain reduction did not terminate")


class Automorphizer:
    """Evaluates phi(Gamma x) = sum over gamma of Phi(gamma x) with exact support control.

    Points are first moved into the Picard domain, where heights are maximal
    within their orbits.  A reduced height h > 1 forces every other orbit
    height below 1/h, so once h and 1/h both miss the band of heights within
    the bump's radius of the reduced centre, no term contributes.  Otherwise
    every contributing gamma has d(o, gamma o) <= d(o, x o) + d(o, c o) + radius.
    """

    def __init__(self, gbump: GBumpSpec, t_max: float = lat.T_MAX):
        from .symspace import dist_o

        self.gbump = gbump
        self.t_max = t_max
        _, c_red = reduce_to_fundamental_domain(gbump.center)
        self.center_height = float(upper_half_space_point(c_red)[1])
        self.cusp_height = max(self.center_height, 1.0 / self.center_height)
        self.center_disp = float(dist_o(_pair(), gbump.center))
        self._ball: lat.LatticeBall | None = None
        self._c_inv = np.linalg.inv(gbump.center)

    def _gammas(self, T: float) -> np.ndarray:
        if T > self.t_max:
            raise ValueError(f"required lattice ball radius {T:.3g} exceeds T_max = {self.t_max}")
        if self._ball is None or self._ball.T < T:
            self._ball = lat.lattice_ball(max(T, 6.0))
        return self._ball.restrict(T).matrices()

    def __call__(self, x: np.ndarray) -> np.ndarray:
        from .symspace import dist_o

        x = np.asarray(x, complex)
        single = x.ndim == 2
        x = x.reshape(-1, 2, 2)
        _, red = reduce_to_fundamental_domain(x)
        _, h = upper_half_space_point(red)
        reachable = 2 * np.log(h / self.cusp_height) < self.gbump.radius
        out = np.zeros(x.shape[0])
        if reachable.any():
            pts = red[reachable]
            T_s = float(np.max(dist_o(_pair(), pts))) + self.center_disp + self.gbump.radius + 1e-6
            left = self._c_inv @ self._gammas(T_s)  # c^{-1} gamma
            vals = np.zeros(pts.shape[0])
            step = max(1, CHUNK // max(1, left.shape[0]))
            for start in range(0, pts.shape[0], step):
                prod = left[None] @ pts[start:start + step, None]
                d = dist_o(_pair(), prod)
                vals[start:start + step] = np.sum(bump_profile(d / self.gbump.radius), axis=1)
            out[reachable] = vals
        return out[0] if single else out


def automorphized_eval(gbump: GBumpSpec, x: np.ndarray, T_support: float | None = None) -> float:
    """phi(Gamma x).  ``T_support`` caps the lattice ball used, for cost control."""
    auto = Automorphizer(gbump, t_max=lat.T_MAX if T_support is None else T_support)
    return float(auto(x))


def _torus_h(t: float, v: float = 1.0) -> np.ndarray:
    # unit H-direction has torus coordinate 1/4 on diag(1, -1)
    return _torus(np.asarray(t * v))


def k_orbit_average(
    x0: np.ndarray,
    t: float,
    gbump: GBumpSpec,
    v: float = 1.0,
    nodes: int | None = None,
    auto: Automorphizer | None = None,
) -> float:
    """(1/mu(K_H)) int over K_H of phi(Gamma x0 k a_{tv}), periodic trapezoid in the angle.

    ``v`` = +-1 picks the unit direction in the one-dimensional a_H.
    """
    auto = auto or Automorphizer(gbump)
    if nodes is None:
        # circle of Killing length ~ 8 pi sinh(t/2); resolve the bump with ~16 nodes per radius
        nodes = int(max(256, 16 * 8 * math.pi * math.sinh(t / 2) / gbump.radius))
    theta = 2 * math.pi * np.arange(nodes) / nodes
    k = np.zeros((nodes, 2, 2), complex)
    k[:, 0, 0] = k[:, 1, 1] = np.cos(theta)
    k[:, 0, 1] = np.sin(theta)
    k[:, 1, 0] = -np.sin(theta)
    pts = np.asarray(x0) @ k @ _torus_h(t, v)
    return float(np.mean(auto(pts)))


def u_orbit_average(
    x0: np.ndarray,
    t: float,
    gbump: GBumpSpec,
    v: float = 1.0,
    nodes: int | None = None,
    auto: Automorphizer | None = None,
) -> float:
    """Normalised integral over the unit ball of the expanding unipotent group of H,
    by Gauss-Legendre in the coordinate x of u = [[1, 0], [x, 1]]."""
    auto = auto or Automorphizer(gbump)
    half_width = 1.0 / lg.norm(_pair(), np.array([0, 0, 1.0, 0, 0, 0]))
    if nodes is None:
        # horocycle segment of Killing length ~ e^{t/2}
        nodes = int(max(128, 16 * 2 * math.exp(t / 2) / gbump.radius))
    xg, w = np.polynomial.legendre.leggauss(nodes)
    u = np.zeros((nodes, 2, 2), complex)
    u[:, 0, 0] = u[:, 1, 1] = 1
    u[:, 1, 0] = half_width * xg
    pts = np.asarray(x0) @ u @ _torus_h(t, v)
    return float(0.5 * w @ auto(pts))


def generic_orbit_base() -> np.ndarray:
    """Generic x0 for the orbit scans."""
    return lg.exp_lie(_pair(), 0.7 * _irrational_lievec()[::-1])


def periodic_orbit_base() -> np.ndarray:
    """x0 = e: x0 H is the closed orbit through SL2(Z)."""
    return np.eye(2, dtype=complex)


def default_gbump() -> GBumpSpec:
    """Bump of radius 1 centred away from the closed surface of the periodic orbit."""
    return GBumpSpec(center=_off_surface_center(), radius=1.0)


def _off_surface_center() -> np.ndarray:
    # (z, h) = (0.5 + 0.5 i, 0.7) sits 1.31 from every plane gamma H o
    z, h = 0.5 + 0.5j, 0.7
    return np.array([[1, z], [0, 1]]) @ np.diag([math.sqrt(h), 1 / math.sqrt(h)]).astype(complex)


def periodic_surface_distance(c: np.ndarray, T: float = 8.0) -> float:
    """Killing distance from c o to the union of the planes gamma H o, gamma in Gamma_T."""
    ball = lat.lattice_ball(T)
    # plane gamma H o is the circle gamma W0; distance from c o is that of o to c^{-1} gamma W0
    g = np.linalg.inv(c) @ ball.matrices()
    W = _act(np.linalg.inv(g), W0)
    return float(np.min(plane_distance(_normalise(W))))


@dataclass(frozen=True)
class OrbitScan:
    t: list[float]
    values: list[float]
    constant: float
    window_deviation: float
    flagged: bool
    note: str = ""


def orbit_scan(
    kind: str,
    x0: np.ndarray,
    t_grid: list[float],
    gbump: GBumpSpec,
    inverse_covolume: float | None = None,
    window: int = 2,
    tolerance: float = 0.2,
) -> OrbitScan:
    """Scan the K_H- or U_H-orbit average over t against the space constant
    (integral of Phi) * (inverse covolume).  Flags scans whose deviation over
    the last ``window`` grid points exceeds ``tolerance``."""
    if inverse_covolume is None:
        inverse_covolume = fitted_inverse_covolume()
    auto = Automorphizer(gbump)
    fn = {"k": k_orbit_average, "u": u_orbit_average}[kind]
    values = [fn(x0, t, gbump, auto=auto) for t in t_grid]
    const = space_integral(gbump) * inverse_covolume
    dev = max(abs(v / const - 1) for v in values[-window:])
    flagged = dev > tolerance
    note = f"windowed deviation {dev:.3g} exceeds {tolerance}" if flagged else ""
    return OrbitScan(list(t_grid), values, const, dev, flagged, note)
