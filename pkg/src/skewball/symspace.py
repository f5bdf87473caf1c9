"""Symmetric-space geometry of G/K: Cartan and Iwasawa decompositions, distances,
the Iwasawa cocycle, Busemann functions and numerical probes of the decay
estimates that drive the volume asymptotics.

Torus vectors are coordinates in ``pair.a_basis``.  The Iwasawa factorisation
is ``g = k a u`` with ``u`` upper unipotent: with the descending-diagonal
chamber this is the unipotent group contracted by ``a_{-tv} . a_{tv}``, which
is what makes the Busemann function a geometric limit of distance differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .liegroup import (
    GroupElement,
    GroupPair,
    compute_root_datum,
    exp_lie,
    exp_torus,
    log_lie,
    norm,
    op_norm,
    adjoint_action,
    torus_diagonal,
    torus_norm,
    torus_inner,
)

WALL_ETA_TOL = 1e-6


@dataclass(frozen=True)
class CartanCoords:
    k1: GroupElement
    v: np.ndarray
    k2: GroupElement
    residual: float


@dataclass(frozen=True)
class IwasawaCoords:
    k: GroupElement
    v: np.ndarray
    u_minus: GroupElement
    residual: float


@dataclass(frozen=True)
class BoundaryPoint:
    """xi = kM in the Furstenberg boundary K/M."""

    k: GroupElement


def base_boundary(pair: GroupPair) -> BoundaryPoint:
    """e+ = the class of the identity."""
    return BoundaryPoint(pair.identity())


def opposite_boundary(pair: GroupPair) -> BoundaryPoint:
    """e- = w0 e+."""
    return BoundaryPoint(pair.w0.astype(pair.dtype))


def _diag_to_torus(pair: GroupPair, diag: np.ndarray) -> np.ndarray:
    """Least-squares torus coordinates of a (batched) log-diagonal."""
    D = torus_diagonal(pair)
    return np.linalg.lstsq(D.T, np.moveaxis(diag, -1, 0).reshape(pair.n, -1), rcond=None)[0].T.reshape(
        diag.shape[:-1] + (pair.rank_G,)
    )


def _special_svd(block: np.ndarray):
    U, s, Vh = np.linalg.svd(block)
    # numpy returns descending singular values; repair determinants of U
    d = np.linalg.det(U)
    if np.iscomplexobj(block):
        phase = np.ones(block.shape[0], dtype=complex)
        phase[-1] = np.conj(d) / abs(d)
    else:
        phase = np.ones(block.shape[0])
        phase[-1] = np.sign(d)
    U = U * phase
    Vh = np.conj(phase)[:, None] * Vh
    return U, s, Vh


def cartan_decompose(pair: GroupPair, g: GroupElement) -> CartanCoords:
    g = np.asarray(g)
    k1 = np.zeros_like(g, dtype=pair.dtype)
    k2 = np.zeros_like(g, dtype=pair.dtype)
    logs = np.zeros(pair.n)
    for a, b in pair.blocks:
        U, s, Vh = _special_svd(g[a:b, a:b])
        k1[a:b, a:b] = U
        k2[a:b, a:b] = Vh
        logs[a:b] = np.log(s)
    v = _diag_to_torus(pair, logs)
    recon = k1 @ exp_torus(pair, v) @ k2
    return CartanCoords(k1=k1, v=v, k2=k2, residual=float(np.linalg.norm(recon - g)))


def _block_log_singular_values(pair: GroupPair, g: np.ndarray, g_inv: np.ndarray | None = None) -> np.ndarray:
    """Descending log singular values per block (batched over leading axes).

    The top value comes from ||g|| and the bottom one from ||g^{-1}||, which
    keeps both accurate for very ill-conditioned products when the caller
    supplies an exactly formed inverse; for 3x3 blocks the middle one follows
    from det = 1.
    """
    out = []
    for a, b in pair.blocks:
        blk = g[..., a:b, a:b]
        if b - a == 2:
            # For det-1 blocks (sigma - 1/sigma)^2 = ||g||_F^2 - 2 = |a - conj d|^2 + |b + conj c|^2
            gap = (np.abs(blk[..., 0, 0] - np.conj(blk[..., 1, 1])) ** 2
                   + np.abs(blk[..., 0, 1] + np.conj(blk[..., 1, 0])) ** 2)
            top = np.arcsinh(0.5 * np.sqrt(gap))
            out.append(np.stack([top, -top], axis=-1))
        else:
            inv = np.linalg.inv(blk) if g_inv is None else g_inv[..., a:b, a:b]
            top = np.log(np.linalg.svd(blk, compute_uv=False)[..., 0])
            bottom = -np.log(np.linalg.svd(inv, compute_uv=False)[..., 0])
            out.append(np.stack([top, -top - bottom, bottom], axis=-1))
    return np.concatenate(out, axis=-1)


def cartan_projection(pair: GroupPair, g: GroupElement, g_inv: GroupElement | None = None) -> np.ndarray:
    """Chamber vector v with g in K a_v K (batched)."""
    return _diag_to_torus(pair, _block_log_singular_values(pair, np.asarray(g), g_inv))


def _torus_norms(pair: GroupPair, v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", v, pair.a_gram, v), 0.0))


def dist_o(pair: GroupPair, g: GroupElement, g_inv: GroupElement | None = None) -> np.ndarray | float:
    """d(o, g o) (batched over leading axes)."""
    d = _torus_norms(pair, cartan_projection(pair, g, g_inv))
    return float(d) if np.ndim(d) == 0 else d


def dist(pair: GroupPair, x: GroupElement, y: GroupElement) -> float:
    """d(x o, y o)."""
    return dist_o(pair, np.linalg.solve(x, y))


def iwasawa_decompose(pair: GroupPair, g: GroupElement) -> IwasawaCoords:
    """g = k a_v u with k in K and u upper unipotent (positive-pivot QR)."""
    g = np.asarray(g)
    k = np.zeros_like(g, dtype=pair.dtype)
    u = np.zeros_like(g, dtype=pair.dtype)
    logs = np.zeros(pair.n)
    for a, b in pair.blocks:
        Q, R = np.linalg.qr(g[a:b, a:b])
        d = np.diag(R)
        phase = d / np.abs(d)
        Q = Q * phase
        R = np.conj(phase)[:, None] * R
        diag = np.real(np.diag(R))
        k[a:b, a:b] = Q
        u[a:b, a:b] = R / diag[:, None]
        logs[a:b] = np.log(diag)
    v = _diag_to_torus(pair, logs)
    recon = k @ exp_torus(pair, v) @ u
    return IwasawaCoords(k=k, v=v, u_minus=u, residual=float(np.linalg.norm(recon - g)))


def iwasawa_cocycle(pair: GroupPair, g: GroupElement, xi: BoundaryPoint) -> np.ndarray:
    """sigma(g, xi): torus part of g k for xi = kM."""
    return iwasawa_decompose(pair, np.asarray(g) @ xi.k).v


def busemann(pair: GroupPair, xi: BoundaryPoint, x: GroupElement, y: GroupElement) -> np.ndarray:
    """Vector-valued Busemann function beta_xi(x o, y o)."""
    return iwasawa_cocycle(pair, np.linalg.inv(x), xi) - iwasawa_cocycle(pair, np.linalg.inv(y), xi)


def opposition_matrix(pair: GroupPair) -> np.ndarray:
    """Matrix of -Ad_{w0} on torus coordinates."""
    w0 = pair.w0
    D = torus_diagonal(pair)
    images = np.array([np.real(np.diag(w0 @ np.diag(row) @ np.linalg.inv(w0))) for row in D])
    return -_diag_to_torus(pair, images).T


def opposition_involution(pair: GroupPair, v: np.ndarray) -> np.ndarray:
    return opposition_matrix(pair) @ np.asarray(v, float)


def varpi(pair: GroupPair, g1: GroupElement, g2: GroupElement) -> np.ndarray:
    """Busemann drift beta_{e+}(g1^{-1} o, o) + i(beta_{e-}(g2 o, o))."""
    first = iwasawa_cocycle(pair, g1, base_boundary(pair))
    second = iwasawa_cocycle(pair, np.linalg.inv(g2), opposite_boundary(pair))
    return first + opposition_involution(pair, second)


def boundary_section(pair: GroupPair, xi: BoundaryPoint, w: np.ndarray, u: GroupElement) -> GroupElement:
    """An element g1 = k a_w u of k A U^- representing xi = kM."""
    return xi.k @ exp_torus(pair, w) @ u


def in_chamber(pair: GroupPair, v: np.ndarray, tol: float = 1e-10) -> bool:
    datum = compute_root_datum(pair, "G")
    return all(datum.evaluate(r, v) >= -tol for r in datum.simple_roots)


# --------------------------------------------------------------------------
# Probes


@dataclass(frozen=True)
class ProbeTable:
    t: np.ndarray
    value: np.ndarray
    slope: float | None = None
    note: str = ""

    def rows(self):
        return list(zip(self.t.tolist(), self.value.tolist()))


def fit_log_slope(t: np.ndarray, y: np.ndarray, tail: float = 0.5) -> float | None:
    """Least-squares slope of log y against t on the last ``tail`` fraction of the grid;
    None when fewer than two values there are positive."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    start = int(len(t) * (1 - tail))
    tt, yy = t[start:], y[start:]
    keep = yy > 0
    if keep.sum() < 2:
        return None
    return float(np.polyfit(tt[keep], np.log(yy[keep]), 1)[0])


def _contraction_rate(pair: GroupPair, v: np.ndarray, u: GroupElement) -> float:
    """Smallest alpha(v) over positive roots whose spaces meet log u (upper-unipotent u)."""
    datum = compute_root_datum(pair, "G")
    X = log_lie(pair, u)
    rates = []
    for r in datum.positive_roots:
        comp = (r.space @ pair.gram @ X)
        if np.linalg.norm(comp) > 1e-12 * max(1.0, np.linalg.norm(X)):
            rates.append(datum.evaluate(r, v))
    return min(rates) if rates else np.inf


def probe_contraction(
    pair: GroupPair,
    x: GroupElement,
    v: np.ndarray,
    u: GroupElement,
    t_grid: np.ndarray | None = None,
) -> ProbeTable:
    """Distances d(x, a_{-tv} u a_{tv} x) for upper-unipotent u."""
    t_grid = np.arange(1.0, 41.0) if t_grid is None else np.asarray(t_grid, float)
    eta = _contraction_rate(pair, v, u)
    if eta <= 0:
        raise ValueError("direction does not contract u (eta <= 0)")
    vals = []
    for t in t_grid:
        c = exp_torus(pair, -t * np.asarray(v)) @ u @ exp_torus(pair, t * np.asarray(v))
        vals.append(dist(pair, x, c @ x))
    vals = np.array(vals)
    slope = None
    if np.isfinite(eta) and eta > WALL_ETA_TOL:
        slope = fit_log_slope(t_grid, vals)
    return ProbeTable(t_grid, vals, slope, note=f"eta={eta}")


def probe_busemann_rate(
    pair: GroupPair,
    x: GroupElement,
    y: GroupElement,
    xi: BoundaryPoint,
    g2: GroupElement,
    v: np.ndarray,
    t_grid: np.ndarray | None = None,
    w: np.ndarray | None = None,
    u: GroupElement | None = None,
) -> ProbeTable:
    """Defect |d(x, xi_t) - d(y, xi_t) - <beta_xi(x, y), v>| along xi_t = g1 a_{tv} g2 o."""
    t_grid = np.arange(1.0, 41.0) if t_grid is None else np.asarray(t_grid, float)
    v = np.asarray(v, float)
    w = np.zeros(pair.rank_G) if w is None else w
    u = pair.identity() if u is None else u
    g1 = boundary_section(pair, xi, w, u)
    target = torus_inner(pair, busemann(pair, xi, x, y), v)
    x_inv, y_inv = np.linalg.inv(x), np.linalg.inv(y)
    g1_inv, g2_inv = np.linalg.inv(g1), np.linalg.inv(g2)
    vals = []
    for t in t_grid:
        pt = g1 @ exp_torus(pair, t * v) @ g2
        pt_inv = g2_inv @ exp_torus(pair, -t * v) @ g1_inv
        dx = dist_o(pair, x_inv @ pt, pt_inv @ x)
        dy = dist_o(pair, y_inv @ pt, pt_inv @ y)
        vals.append(abs(dx - dy - target))
    vals = np.array(vals)
    datum = compute_root_datum(pair, "G")
    eta = min(datum.evaluate(r, v) for r in datum.simple_roots)
    slope = fit_log_slope(t_grid, vals) if eta > WALL_ETA_TOL else None
    return ProbeTable(t_grid, vals, slope, note=f"target={target}")


@dataclass(frozen=True)
class ExpansionCheck:
    holds: bool
    lhs: float
    rhs: float
    margin: float  # rhs / lhs, inf when lhs = 0


def group_distance_near(pair: GroupPair, g: GroupElement) -> float:
    """d_G(e, g) for g close to e, through the norm of the principal logarithm.

    Exact for one-parameter subgroups through e at small displacement and
    accurate to second order otherwise.
    """
    return norm(pair, np.real_if_close(log_lie(pair, g)).real)


def probe_expansion_bound(
    pair: GroupPair,
    x1: GroupElement,
    x2: GroupElement,
    k: GroupElement,
    v: np.ndarray,
    tau: float,
    rtol: float = 1e-9,
) -> ExpansionCheck:
    """Check d(x1, x2) <= e^{c tau} d(x1 k a_{tau v}, x2 k a_{tau v}) on G."""
    if tau < 2:
        raise ValueError("tau must be at least 2")
    c_phi = compute_root_datum(pair, "G").c_phi
    a = exp_torus(pair, tau * np.asarray(v, float))
    g = np.linalg.solve(x1, x2)
    lhs = group_distance_near(pair, g)
    moved = np.linalg.solve(x1 @ k @ a, x2 @ k @ a)
    rhs = np.exp(c_phi * tau) * group_distance_near(pair, moved)
    margin = np.inf if lhs == 0 else rhs / lhs
    return ExpansionCheck(holds=lhs <= rhs * (1 + rtol) + 1e-300, lhs=lhs, rhs=rhs, margin=margin)


def adjoint_norm_ratio(pair: GroupPair, g: GroupElement) -> float:
    """log ||Ad_g||_op / d(o, g o)."""
    return np.log(op_norm(pair, adjoint_action(pair, g))) / dist_o(pair, g)


def unipotent_distance_ratio(pair: GroupPair, u: GroupElement) -> float:
    """d(o, u o) / log(1 + ||log u||)."""
    X = log_lie(pair, u)
    return dist_o(pair, u) / np.log1p(norm(pair, np.real(X)))


def random_unit_torus(pair: GroupPair, rng: np.random.Generator, chamber: bool = True) -> np.ndarray:
    while True:
        v = rng.standard_normal(pair.rank_G)
        v /= torus_norm(pair, v)
        if not chamber or in_chamber(pair, v):
            return v


def random_k(pair: GroupPair, rng: np.random.Generator) -> GroupElement:
    """Element of K from exponentiating a random element of k."""
    X = rng.standard_normal(pair.dim_G) * 3.0
    X = 0.5 * (X + pair.theta @ X)
    return exp_lie(pair, X)


def generic_rate_probe(pair: GroupPair, seed: int = 7, t_grid: np.ndarray | None = None) -> ProbeTable:
    """Busemann defect for random x, y, xi and a generic g2 outside K along the
    unit direction of the first torus coordinate.

    With g2 in K the first-order term cancels and the defect decays twice as fast.
    """
    from .liegroup import random_element

    rng = np.random.default_rng(seed)
    x = random_element(pair, rng, 1.0)
    y = random_element(pair, rng, 1.0)
    xi = BoundaryPoint(random_k(pair, rng))
    g2 = random_element(pair, rng, 1.0)
    v = np.zeros(pair.rank_G)
    v[0] = 1.0
    v /= torus_norm(pair, v)
    w = np.full(pair.rank_G, 0.1)
    u = pair.identity().copy()
    u[0, 1] = 0.3 + 0.2j if pair.is_complex else 0.3
    t_grid = np.arange(5.0, 41.0) if t_grid is None else t_grid
    return probe_busemann_rate(pair, x, y, xi, g2, v, t_grid, w=w, u=u)


def wall_flat_probe(pair: GroupPair, t_grid: np.ndarray | None = None) -> ProbeTable:
    """Defect along the wall direction diag(1, 1, -2) with y = (I + 0.7 E12) o.

    The unipotent commutes with the wall flow, so the defect decays only like 1/t.
    """
    diag = np.array([1.0, 1.0, -2.0])
    v = np.linalg.lstsq(torus_diagonal(pair).T, diag, rcond=None)[0]
    v /= torus_norm(pair, v)
    u = np.eye(pair.n)
    u[0, 1] = 0.7
    t_grid = np.geomspace(10, 1000, 30) if t_grid is None else t_grid
    return probe_busemann_rate(pair, pair.identity(), u, base_boundary(pair), pair.identity(), v, t_grid)
