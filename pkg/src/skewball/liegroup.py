"""Matrix models of the supported (G, H) pairs and their Lie-algebra geometry.

Lie-algebra elements are handled as real coordinate vectors in a fixed basis
of ``g`` (a "LieVec"); matrices are only a view.  Group elements are plain
square numpy arrays: complex 2x2 for SL2(C), real 4x4 block-diagonal for
SL2(R) x SL2(R), real 3x3 for SL3(R).

The first three basis vectors of every pair span the subalgebra ``h``, and the
first basis vector spans the split torus of ``h``.  The positive Weyl chamber
is the descending-diagonal one, so positive restricted roots live on upper
triangular matrix units.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

GroupElement = np.ndarray
LieVec = np.ndarray

ROOT_CLUSTER_TOL = 1e-7
NEWTON_CHART_RADIUS = 0.2


class PairId(str, enum.Enum):
    SL2C_SL2R = "SL2C_SL2R"
    SL2R2_DIAG = "SL2R2_DIAG"
    SL3R_SO21 = "SL3R_SO21"


def _unit(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


def _blockdiag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return scipy.linalg.block_diag(a, b)


_H2 = np.diag([1.0, -1.0])
_E2 = _unit(2, 0, 1)
_F2 = _unit(2, 1, 0)
_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _build_basis(pid: PairId) -> np.ndarray:
    if pid is PairId.SL2C_SL2R:
        real = [_H2, _E2, _F2]
        return np.array([m.astype(complex) for m in real] + [1j * m for m in real])
    if pid is PairId.SL2R2_DIAG:
        return np.array(
            [_blockdiag(m, m) for m in (_H2, _E2, _F2)]
            + [_blockdiag(m, -m) for m in (_H2, _E2, _F2)]
        )
    if pid is PairId.SL3R_SO21:
        e = lambda i, j: _unit(3, i, j)  # noqa: E731
        return np.array(
            [
                np.diag([1.0, 0.0, -1.0]),
                e(0, 1) + e(1, 2),
                e(1, 0) + e(2, 1),
                np.diag([1.0, -2.0, 1.0]),
                e(0, 1) - e(1, 2),
                e(1, 0) - e(2, 1),
                e(0, 2),
                e(2, 0),
            ]
        )
    raise ValueError(f"unknown pair {pid!r}")


# Per-pair topology the Killing metric cannot see: matrix blocks, torus
# indices, a longest Weyl element in K_H, the compact circle of H with its
# period, the components of K_H, and the orders of the finite centralisers.
_TOPOLOGY = {
    PairId.SL2C_SL2R: dict(
        blocks=((0, 2),),
        a_idx=(0,),
        w0=_J2.astype(complex),
        kh_generator=np.array([0.0, 1.0, -1.0, 0.0, 0.0, 0.0]),
        kh_period=2 * np.pi,
        kh_components=(np.eye(2, dtype=complex),),
        m_h_order=2,
    ),
    PairId.SL2R2_DIAG: dict(
        blocks=((0, 2), (2, 4)),
        a_idx=(0, 3),
        w0=_blockdiag(_J2, _J2),
        kh_generator=np.array([0.0, 1.0, -1.0, 0.0, 0.0, 0.0]),
        kh_period=2 * np.pi,
        kh_components=(np.eye(4),),
        m_h_order=2,
    ),
    PairId.SL3R_SO21: dict(
        blocks=((0, 3),),
        a_idx=(0, 3),
        w0=np.fliplr(np.diag([1.0, -1.0, 1.0])),
        kh_generator=np.array([0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        kh_period=2 * np.pi / np.sqrt(2.0),
        kh_components=(np.eye(3), np.diag([-1.0, 1.0, -1.0])),
        m_h_order=2,
    ),
}

H_DIM = 3
H_TORUS_IDX = 0


@dataclass(frozen=True, eq=False)
class GroupPair:
    """Static description of one (G, H) pair together with cached structure data."""

    id: PairId
    basis_G: np.ndarray
    embed_H: tuple[int, ...]
    a_idx: tuple[int, ...]
    blocks: tuple[tuple[int, int], ...]
    w0: np.ndarray
    kh_generator: np.ndarray
    kh_period: float
    kh_components: tuple[np.ndarray, ...]
    m_h_order: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim_G(self) -> int:
        return self.basis_G.shape[0]

    @property
    def dim_H(self) -> int:
        return len(self.embed_H)

    @property
    def rank_G(self) -> int:
        return len(self.a_idx)

    @property
    def rank_H(self) -> int:
        return 1

    @property
    def n(self) -> int:
        return self.basis_G.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.basis_G)

    @property
    def dtype(self):
        return complex if self.is_complex else float

    @property
    def a_basis(self) -> np.ndarray:
        """Torus basis as LieVecs, shape (rank_G, dim_G)."""
        return np.eye(self.dim_G)[list(self.a_idx)]

    @property
    def a_h_in_a(self) -> np.ndarray:
        """Coordinates of the H-torus generator in the G-torus basis."""
        v = np.zeros(self.rank_G)
        v[self.a_idx.index(H_TORUS_IDX)] = 1.0
        return v

    def identity(self) -> GroupElement:
        return np.eye(self.n, dtype=self.dtype)

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def flat_pinv(self) -> np.ndarray:
        def build():
            flat = _flatten(self.basis_G)
            pinv = np.linalg.pinv(flat)
            if np.linalg.matrix_rank(flat) != self.dim_G:
                raise ValueError("basis is linearly dependent")
            return pinv

        return self._get("flat_pinv", build)

    @property
    def ad(self) -> np.ndarray:
        """``ad[i]`` is the matrix of ad of the i-th basis vector on coordinates."""

        def build():
            b = self.basis_G
            comm = np.einsum("iab,jbc->ijac", b, b) - np.einsum("jab,ibc->ijac", b, b)
            coords = to_coords(self, comm.reshape(-1, self.n, self.n))
            coords = coords.reshape(self.dim_G, self.dim_G, self.dim_G)
            # ad[i][k, j] = k-th coordinate of [e_i, e_j]
            return np.transpose(coords, (0, 2, 1))

        return self._get("ad", build)

    @property
    def killing_gram(self) -> np.ndarray:
        return self._get("killing", lambda: np.einsum("iab,jba->ij", self.ad, self.ad))

    @property
    def theta(self) -> np.ndarray:
        """Cartan involution as a coordinate matrix."""

        def build():
            images = -np.conj(np.transpose(self.basis_G, (0, 2, 1)))
            return to_coords(self, images).T

        return self._get("theta", build)

    @property
    def gram(self) -> np.ndarray:
        """Gram matrix of the positive-definite form B_theta."""
        return self._get("gram", lambda: -self.killing_gram @ self.theta)

    @property
    def a_gram(self) -> np.ndarray:
        idx = list(self.a_idx)
        return self.gram[np.ix_(idx, idx)]


def _flatten(mats: np.ndarray) -> np.ndarray:
    """Real column matrix of flattened (real, imag) entries, one column per matrix."""
    mats = np.asarray(mats)
    flat = mats.reshape(mats.shape[0], -1)
    if np.iscomplexobj(flat):
        flat = np.concatenate([flat.real, flat.imag], axis=1)
    return flat.T


@functools.lru_cache(maxsize=None)
def get_pair(pid: PairId | str) -> GroupPair:
    pid = PairId(pid)
    topo = _TOPOLOGY[pid]
    return GroupPair(
        id=pid,
        basis_G=_build_basis(pid),
        embed_H=tuple(range(H_DIM)),
        **topo,
    )


def to_matrix(pair: GroupPair, X: LieVec) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != pair.dim_G:
        raise ValueError(f"LieVec of length {X.shape[-1]} does not fit dim {pair.dim_G}")
    return np.tensordot(X, pair.basis_G, axes=(-1, 0))


def to_coords(pair: GroupPair, M: np.ndarray) -> LieVec:
    """Coordinates of matrices ``M`` (shape (..., n, n)) in the basis of g."""
    M = np.asarray(M)
    lead = M.shape[:-2]
    flat = M.reshape(-1, pair.n * pair.n)
    if pair.is_complex:
        flat = np.concatenate([flat.real, flat.imag], axis=1)
    else:
        flat = flat.real
    return (flat @ pair.flat_pinv.T).reshape(*lead, pair.dim_G)


def bracket(pair: GroupPair, X: LieVec, Y: LieVec) -> LieVec:
    return np.einsum("i,ikj,j->k", np.asarray(X, float), pair.ad, np.asarray(Y, float))


def ad_matrix(pair: GroupPair, X: LieVec) -> np.ndarray:
    return np.tensordot(np.asarray(X, float), pair.ad, axes=(0, 0))


def _check_dims(pair: GroupPair, *vecs: LieVec) -> None:
    for v in vecs:
        if np.shape(v)[-1] != pair.dim_G:
            raise ValueError(f"LieVec of length {np.shape(v)[-1]} does not fit dim {pair.dim_G}")


def killing_form(pair: GroupPair, X: LieVec, Y: LieVec) -> float:
    """B(X, Y) = tr(ad_X ad_Y), from the structure constants."""
    _check_dims(pair, X, Y)
    return float(np.asarray(X) @ pair.killing_gram @ np.asarray(Y))


def inner(pair: GroupPair, X: LieVec, Y: LieVec) -> float:
    """B_theta(X, Y) = -B(X, theta Y)."""
    _check_dims(pair, X, Y)
    return float(np.asarray(X) @ pair.gram @ np.asarray(Y))


def norm(pair: GroupPair, X: LieVec) -> float:
    return float(np.sqrt(max(inner(pair, X, X), 0.0)))


def cartan_involution(pair: GroupPair, X: LieVec) -> LieVec:
    _check_dims(pair, X)
    return pair.theta @ np.asarray(X, float)


def torus_vec(pair: GroupPair, v: np.ndarray) -> LieVec:
    """LieVec of a torus vector given in ``a_basis`` coordinates."""
    return np.asarray(v, float) @ pair.a_basis


def torus_inner(pair: GroupPair, v: np.ndarray, w: np.ndarray) -> float:
    return float(np.asarray(v) @ pair.a_gram @ np.asarray(w))


def torus_norm(pair: GroupPair, v: np.ndarray) -> float:
    return float(np.sqrt(max(torus_inner(pair, v, v), 0.0)))


def torus_diagonal(pair: GroupPair) -> np.ndarray:
    """Diagonals of the torus basis matrices, shape (rank_G, n)."""
    return np.real(np.array([np.diag(pair.basis_G[i]) for i in pair.a_idx]))


def exp_torus(pair: GroupPair, v: np.ndarray) -> GroupElement:
    """a_v = exp(v) for a torus vector in ``a_basis`` coordinates (batched)."""
    diag = np.asarray(v, float) @ torus_diagonal(pair)
    out = np.zeros(diag.shape + (pair.n,), dtype=pair.dtype)
    idx = np.arange(pair.n)
    out[..., idx, idx] = np.exp(diag)
    return out


def exp_lie(pair: GroupPair, X: LieVec) -> GroupElement:
    M = to_matrix(pair, X)
    g = scipy.linalg.expm(M)
    return g if pair.is_complex else g.real


def log_lie(pair: GroupPair, g: GroupElement) -> LieVec:
    """Principal logarithm in coordinates; meaningful near the identity."""
    L = scipy.linalg.logm(g)
    return to_coords(pair, L)


def block_dets(pair: GroupPair, g: GroupElement) -> np.ndarray:
    return np.array([np.linalg.det(g[..., a:b, a:b]) for a, b in pair.blocks])


def check_group_element(pair: GroupPair, g: GroupElement, tol: float = 1e-10) -> None:
    g = np.asarray(g)
    if g.shape != (pair.n, pair.n):
        raise ValueError(f"expected a {pair.n}x{pair.n} matrix, got {g.shape}")
    dets = block_dets(pair, g)
    if np.any(np.abs(dets - 1.0) > tol):
        raise ValueError(f"determinant {dets} is not 1")


def adjoint_action(pair: GroupPair, g: GroupElement) -> np.ndarray:
    """Matrix of Ad_g on coordinates."""
    g = np.asarray(g)
    dets = block_dets(pair, g)
    if np.any(np.abs(dets) < 1e-300):
        raise ValueError("singular group element")
    gi = np.linalg.inv(g)
    images = np.einsum("ab,ibc,cd->iad", g, pair.basis_G, gi)
    return to_coords(pair, images).T


def op_norm(pair: GroupPair, A: np.ndarray) -> float:
    """Operator norm of a coordinate map with respect to B_theta."""
    L = np.linalg.cholesky(pair.gram)
    Ao = L.T @ A @ np.linalg.inv(L.T)
    return float(np.linalg.norm(Ao, 2))


def random_lievec(pair: GroupPair, rng: np.random.Generator, scale: float = 1.0) -> LieVec:
    """Random element with B_theta-norm distributed around ``scale``."""
    L = np.linalg.cholesky(pair.gram)
    z = rng.standard_normal(pair.dim_G) / np.sqrt(pair.dim_G)
    return scale * np.linalg.solve(L.T, z)


def random_element(pair: GroupPair, rng: np.random.Generator, scale: float = 1.0) -> GroupElement:
    return exp_lie(pair, random_lievec(pair, rng, scale))


def random_h_element(pair: GroupPair, rng: np.random.Generator, scale: float = 1.0) -> GroupElement:
    X = random_lievec(pair, rng, scale)
    X[pair.dim_H:] = 0.0
    return exp_lie(pair, X)


# --------------------------------------------------------------------------
# Restricted roots


@dataclass(frozen=True)
class Root:
    vector: np.ndarray  # in torus coordinates, identified through the inner product
    values: np.ndarray  # alpha evaluated on the torus basis
    multiplicity: int
    space: np.ndarray  # B_theta-orthonormal LieVec basis of the root space, rows


@dataclass(frozen=True, eq=False)
class RootDatum:
    """Restricted root data of G or of H, always measured with g's Killing form."""

    which: str
    torus_basis: np.ndarray  # LieVecs, rows
    torus_gram: np.ndarray
    roots: tuple[Root, ...]
    positive_roots: tuple[Root, ...]
    simple_roots: tuple[Root, ...]
    two_rho: np.ndarray
    delta_2rho: float
    v_2rho: np.ndarray
    c_phi: float
    m_phi_plus: int
    eta1: float
    m_space: np.ndarray  # orthonormal LieVec basis of the centraliser of a in k
    algebra_idx: tuple[int, ...]

    @property
    def rank(self) -> int:
        return self.torus_basis.shape[0]

    def inner(self, v: np.ndarray, w: np.ndarray) -> float:
        return float(np.asarray(v) @ self.torus_gram @ np.asarray(w))

    def norm(self, v: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(v, v), 0.0)))

    def evaluate(self, root: Root, v: np.ndarray) -> float:
        return float(root.values @ np.asarray(v))

    def u_plus_basis(self) -> np.ndarray:
        """Sum of the negative root spaces (contracting under conjugation by a_{tv})."""
        return np.vstack([self._neg(r).space for r in self.positive_roots])

    def u_minus_basis(self) -> np.ndarray:
        return np.vstack([r.space for r in self.positive_roots])

    def _neg(self, root: Root) -> Root:
        for r in self.roots:
            if np.allclose(r.values, -root.values, atol=1e-6):
                return r
        raise ValueError("root system not closed under negation")

    def to_json(self) -> dict:
        def rj(r: Root) -> dict:
            return {"vector": r.vector.tolist(), "values": r.values.tolist(),
                    "multiplicity": r.multiplicity}

        return {
            "which": self.which,
            "rank": self.rank,
            "roots": [rj(r) for r in self.roots],
            "positive_roots": [rj(r) for r in self.positive_roots],
            "simple_roots": [rj(r) for r in self.simple_roots],
            "two_rho": self.two_rho.tolist(),
            "delta_2rho": self.delta_2rho,
            "v_2rho": self.v_2rho.tolist(),
            "c_phi": self.c_phi,
            "m_phi_plus": self.m_phi_plus,
            "eta1": self.eta1,
        }


def _lex_positive(values: np.ndarray, tol: float) -> bool:
    for x in values:
        if abs(x) > tol:
            return x > 0
    return False


@functools.lru_cache(maxsize=None)
def _cached_datum(pid: PairId, which: str) -> RootDatum:
    return _root_datum(get_pair(pid), which)


def compute_root_datum(pair: GroupPair, which: str = "G") -> RootDatum:
    if which not in ("G", "H"):
        raise ValueError("which must be 'G' or 'H'")
    return _cached_datum(pair.id, which)


def _root_datum(pair: GroupPair, which: str) -> RootDatum:
    tol = ROOT_CLUSTER_TOL
    if which == "G":
        idx = list(range(pair.dim_G))
        torus_idx = list(pair.a_idx)
    else:
        idx = list(pair.embed_H)
        torus_idx = [H_TORUS_IDX]
    gram = pair.gram[np.ix_(idx, idx)]
    torus_basis = np.eye(pair.dim_G)[torus_idx]
    torus_gram = pair.gram[np.ix_(torus_idx, torus_idx)]
    ads = [pair.ad[i][np.ix_(idx, idx)] for i in torus_idx]

    # Symmetric frame: y = L^T x turns B_theta-self-adjoint ad's into symmetric matrices.
    L = np.linalg.cholesky(gram)
    Linv_T = np.linalg.inv(L.T)
    sym = [L.T @ A @ Linv_T for A in ads]
    weights = np.sqrt(np.array([2.0, 3.0, 5.0, 7.0]))[: len(sym)]
    generic = sum(w * S for w, S in zip(weights, sym))
    generic = 0.5 * (generic + generic.T)
    _, Q = np.linalg.eigh(generic)

    joint = np.array([[q @ S @ q for S in sym] for q in Q.T])
    for k, q in enumerate(Q.T):
        for i, S in enumerate(sym):
            if np.linalg.norm(S @ q - joint[k, i] * q) > 1e3 * tol:
                raise ValueError("torus generators are not jointly diagonalised; ambiguous clusters")

    clusters: list[list[int]] = []
    centers: list[np.ndarray] = []
    for k, lam in enumerate(joint):
        for c, center in enumerate(centers):
            if np.linalg.norm(lam - center) < tol:
                clusters[c].append(k)
                break
        else:
            clusters.append([k])
            centers.append(lam)
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            if np.linalg.norm(centers[i] - centers[j]) < 1e3 * tol:
                raise ValueError(
                    f"eigenvalue clusters {centers[i]} and {centers[j]} are ambiguous at tol {tol}"
                )

    torus_gram_inv = np.linalg.inv(torus_gram)
    full = np.zeros((len(idx), pair.dim_G))
    full[np.arange(len(idx)), idx] = 1.0
    roots, zero_space = [], None
    for members, center in zip(clusters, centers):
        vals = np.mean(joint[members], axis=0)
        space = (Linv_T @ Q[:, members]).T @ full  # orthonormal LieVecs
        if np.linalg.norm(vals) < tol:
            zero_space = space
            continue
        roots.append(Root(vector=torus_gram_inv @ vals, values=vals,
                          multiplicity=len(members), space=space))
    roots.sort(key=lambda r: tuple(-r.values))

    positive = tuple(r for r in roots if _lex_positive(r.values, tol))
    pos_vals = [r.values for r in positive]
    simple = tuple(
        r for r in positive
        if not any(
            np.allclose(r.values, a + b, atol=1e-6)
            for i, a in enumerate(pos_vals) for b in pos_vals[i:]
        )
    )
    two_rho = sum(r.multiplicity * r.vector for r in positive)
    delta = float(np.sqrt(two_rho @ torus_gram @ two_rho))
    v_2rho = two_rho / delta
    c_phi = max(float(np.sqrt(r.vector @ torus_gram @ r.vector)) for r in roots)
    eta1 = min(float(np.sqrt(r.vector @ torus_gram @ r.vector)) for r in simple)

    # m = centraliser of a inside k: theta-fixed part of the zero root space
    m_space = np.zeros((0, pair.dim_G))
    if zero_space is not None and zero_space.shape[0] > len(torus_idx):
        Z = zero_space
        G_z = Z @ pair.gram @ Z.T
        T_z = np.linalg.solve(G_z, Z @ pair.gram @ pair.theta @ Z.T)
        w, V = np.linalg.eig(T_z)
        fixed = V[:, np.abs(w - 1.0) < 1e-6].real
        if fixed.size:
            m_space = _orthonormalise(pair, fixed.T @ Z)

    return RootDatum(
        which=which,
        torus_basis=torus_basis,
        torus_gram=torus_gram,
        roots=tuple(roots),
        positive_roots=positive,
        simple_roots=simple,
        two_rho=two_rho,
        delta_2rho=delta,
        v_2rho=v_2rho,
        c_phi=c_phi,
        m_phi_plus=int(sum(r.multiplicity for r in positive)),
        eta1=eta1,
        m_space=m_space,
        algebra_idx=tuple(idx),
    )


def _orthonormalise(pair: GroupPair, rows: np.ndarray) -> np.ndarray:
    L = np.linalg.cholesky(pair.gram)
    Y = rows @ L
    Qm, _ = np.linalg.qr(Y.T)
    return np.linalg.solve(L.T, Qm).T


def _project(pair: GroupPair, X: LieVec, rows: np.ndarray) -> LieVec:
    """B_theta-orthogonal projection onto the span of orthonormal ``rows``."""
    if rows.shape[0] == 0:
        return np.zeros(pair.dim_G)
    return (rows @ pair.gram @ X) @ rows


# --------------------------------------------------------------------------
# Splitting k = k* + m and the product chart u+ u- a m


@dataclass(frozen=True)
class KStarSplit:
    star: LieVec
    m: LieVec
    plus: LieVec  # projection of ``star`` to u+


def plus_projection(pair: GroupPair, datum: RootDatum, X: LieVec) -> LieVec:
    return _project(pair, np.asarray(X, float), datum.u_plus_basis())


def iota_plus(pair: GroupPair, w: LieVec) -> LieVec:
    return np.asarray(w, float) + cartan_involution(pair, w)


def kstar_split(pair: GroupPair, omega: LieVec, datum: RootDatum | None = None) -> KStarSplit:
    datum = datum or compute_root_datum(pair, "G")
    omega = np.asarray(omega, float)
    _check_dims(pair, omega)
    scale = max(norm(pair, omega), 1.0)
    if norm(pair, cartan_involution(pair, omega) - omega) > 1e-10 * scale:
        raise ValueError("input is not in the compact subalgebra k")
    m = _project(pair, omega, datum.m_space)
    star = omega - m
    return KStarSplit(star=star, m=m, plus=plus_projection(pair, datum, star))


@dataclass(frozen=True)
class NKAMCoords:
    s_plus: LieVec
    s_minus: LieVec
    tau: np.ndarray  # torus coordinates of the datum
    xi: LieVec
    residual: float
    iterations: int


def _chart_product(pair: GroupPair, blocks: list[np.ndarray], x: np.ndarray) -> GroupElement:
    out = pair.identity()
    start = 0
    for rows in blocks:
        k = rows.shape[0]
        if k:
            out = out @ exp_lie(pair, x[start:start + k] @ rows)
        start += k
    return out


def nkam_coords(
    pair: GroupPair,
    omega: LieVec,
    datum: RootDatum | None = None,
    r0: float = NEWTON_CHART_RADIUS,
    max_iter: int = 100,
) -> NKAMCoords:
    """Solve exp(omega) = exp(s+) exp(s-) exp(tau) exp(xi) by damped Newton."""
    datum = datum or compute_root_datum(pair, "G")
    omega = np.asarray(omega, float)
    if norm(pair, omega) >= r0:
        raise ValueError(f"|omega| = {norm(pair, omega):.3g} is outside the chart radius {r0}")
    blocks = [datum.u_plus_basis(), datum.u_minus_basis(), datum.torus_basis, datum.m_space]
    target_inv = np.linalg.inv(exp_lie(pair, omega))
    dim = sum(b.shape[0] for b in blocks)

    def residual(x: np.ndarray) -> np.ndarray:
        return log_lie(pair, target_inv @ _chart_product(pair, blocks, x))

    def solve_step(J: np.ndarray, r: np.ndarray) -> np.ndarray:
        return np.linalg.lstsq(J, r, rcond=None)[0]

    x = np.zeros(dim)
    r = residual(x)
    h = 1e-6
    it = 0
    for it in range(1, max_iter + 1):
        J = np.empty((pair.dim_G, dim))
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = h
            J[:, j] = (residual(x + e) - residual(x - e)) / (2 * h)
        step = solve_step(J, r)
        lam = 1.0
        while True:
            x_new = x - lam * step
            r_new = residual(x_new)
            if np.linalg.norm(r_new) < np.linalg.norm(r) or lam < 1e-4:
                break
            lam *= 0.5
        improved = np.linalg.norm(r_new) < np.linalg.norm(r)
        if improved:
            x, r = x_new, r_new
        if np.linalg.norm(r) < 1e-15 or not improved:
            break
    product = _chart_product(pair, blocks, x)
    res = float(np.linalg.norm(product - np.linalg.inv(target_inv)))
    if res > 1e-9:
        raise ValueError(f"Newton did not converge (residual {res:.3g}); input outside chart")

    sizes = np.cumsum([0] + [b.shape[0] for b in blocks])
    parts = [x[sizes[i]:sizes[i + 1]] for i in range(4)]
    return NKAMCoords(
        s_plus=parts[0] @ blocks[0],
        s_minus=parts[1] @ blocks[1],
        tau=parts[2],
        xi=parts[3] @ blocks[3] if blocks[3].shape[0] else np.zeros(pair.dim_G),
        residual=res,
        iterations=it,
    )
