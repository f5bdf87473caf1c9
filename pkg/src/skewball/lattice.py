"""Exact enumeration of lattice balls {gamma in SL2(Z[i]) : d(o, gamma o) < T}.

With the Killing normalisation on SL2(C), d(o, g o) = 4 log sigma_1(g) and
sigma_1^2 + sigma_1^{-2} = ||g||_HS^2, so membership is decided by the integer
||gamma||_HS^2 up to a final floating cut.  Rows (a, b) are enumerated by norm,
completed to determinant one by a Gaussian Bezout identity, and the solution
fibre (c0 + k a, d0 + k b), k in Z[i], is swept over an exactly bounded disc.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numba
import numpy as np

KILLING_SCALE = 4.0  # d(o, g o) = KILLING_SCALE * log sigma_1 for SL2(C)
T_MAX = 14.0
BOUNDARY_FLAG_TOL = 1e-9
CACHE_ENV = "SKEWBALL_CACHE_DIR"


@dataclass(frozen=True, order=True)
class GaussianInt:
    re: int
    im: int

    def __add__(self, o: GaussianInt) -> GaussianInt:
        return GaussianInt(self.re + o.re, self.im + o.im)

    def __sub__(self, o: GaussianInt) -> GaussianInt:
        return GaussianInt(self.re - o.re, self.im - o.im)

    def __mul__(self, o: GaussianInt) -> GaussianInt:
        return GaussianInt(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def __neg__(self) -> GaussianInt:
        return GaussianInt(-self.re, -self.im)

    def conj(self) -> GaussianInt:
        return GaussianInt(self.re, -self.im)

    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def divmod_nearest(self, y: GaussianInt) -> tuple[GaussianInt, GaussianInt]:
        """Quotient rounded to the nearest Gaussian integer, and the remainder."""
        n = y.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian integer")
        p = self * y.conj()
        q = GaussianInt((2 * p.re + n) // (2 * n), (2 * p.im + n) // (2 * n))
        return q, self - q * y


ZERO, ONE = GaussianInt(0, 0), GaussianInt(1, 0)
UNITS = (GaussianInt(1, 0), GaussianInt(0, 1), GaussianInt(-1, 0), GaussianInt(0, -1))


def zi_bezout(x: GaussianInt, y: GaussianInt) -> tuple[GaussianInt, GaussianInt, GaussianInt]:
    """(g, u, v) with u x + v y = g = gcd(x, y) up to a unit."""
    if x == ZERO and y == ZERO:
        raise ValueError("gcd(0, 0) is undefined")
    r0, s0, t0 = x, ONE, ZERO
    r1, s1, t1 = y, ZERO, ONE
    while r1 != ZERO:
        q, r = r0.divmod_nearest(r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return r0, s0, t0


def disp_from_hs(hs2: np.ndarray) -> np.ndarray:
    """d(o, g o) from the exact integer ||g||_HS^2 of a determinant-one matrix."""
    gap = np.maximum(np.asarray(hs2, float) - 2.0, 0.0)
    return KILLING_SCALE * np.arcsinh(0.5 * np.sqrt(gap))


def hs_bound(T: float) -> int:
    """Largest integer ||g||_HS^2 that can have d(o, g o) < T (plus a safety unit)."""
    return int(math.floor(2 * math.cosh(T / 2))) + 1


@dataclass(frozen=True)
class LatticeElement:
    a: GaussianInt
    b: GaussianInt
    c: GaussianInt
    d: GaussianInt
    disp: float

    def matrix(self) -> np.ndarray:
        return np.array([[complex(self.a), complex(self.b)], [complex(self.c), complex(self.d)]])

    def key(self) -> tuple[int, ...]:
        return (self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.d.re, self.d.im)

    def det(self) -> GaussianInt:
        return self.a * self.d - self.b * self.c


class LatticeBall:
    """Lattice ball stored as an (N, 8) integer array of (re, im) entry pairs."""

    def __init__(self, T: float, entries: np.ndarray, order: bool = True):
        entries = np.asarray(entries, dtype=np.int64).reshape(-1, 8)
        hs2 = np.sum(entries * entries, axis=1)
        disp = disp_from_hs(hs2)
        keep = disp < T
        entries, hs2, disp = entries[keep], hs2[keep], disp[keep]
        if order:
            perm = np.lexsort(tuple(entries[:, ::-1].T) + (hs2,))
            entries, disp = entries[perm], disp[perm]
        self.T = float(T)
        self.entries = entries
        self.disp = disp

    def __len__(self) -> int:
        return self.entries.shape[0]

    def __iter__(self) -> Iterator[LatticeElement]:
        for row, d in zip(self.entries.tolist(), self.disp.tolist()):
            yield LatticeElement(
                GaussianInt(row[0], row[1]), GaussianInt(row[2], row[3]),
                GaussianInt(row[4], row[5]), GaussianInt(row[6], row[7]), d,
            )

    def keys(self) -> set[tuple[int, ...]]:
        return set(map(tuple, self.entries.tolist()))

    def matrices(self) -> np.ndarray:
        e = self.entries.astype(float)
        z = e[:, 0::2] + 1j * e[:, 1::2]
        return z.reshape(-1, 2, 2)

    def inverse_matrices(self) -> np.ndarray:
        m = self.matrices()
        out = np.empty_like(m)
        out[:, 0, 0], out[:, 1, 1] = m[:, 1, 1], m[:, 0, 0]
        out[:, 0, 1], out[:, 1, 0] = -m[:, 0, 1], -m[:, 1, 0]
        return out

    def near_boundary(self) -> np.ndarray:
        """Indices of elements whose displacement is within the flag tolerance of T."""
        return np.nonzero(np.abs(self.disp - self.T) < BOUNDARY_FLAG_TOL)[0]

    def restrict(self, T: float) -> LatticeBall:
        if T > self.T:
            raise ValueError("cannot restrict to a larger radius")
        return LatticeBall(T, self.entries[self.disp < T], order=False)


# --------------------------------------------------------------------------
# Kernels


@numba.njit(cache=True)
def _gauss_bezout(xr, xi, yr, yi):
    r0r, r0i, s0r, s0i, t0r, t0i = xr, xi, 1, 0, 0, 0
    r1r, r1i, s1r, s1i, t1r, t1i = yr, yi, 0, 0, 1, 0
    while r1r != 0 or r1i != 0:
        n = r1r * r1r + r1i * r1i
        pr = r0r * r1r + r0i * r1i
        pi = r0i * r1r - r0r * r1i
        qr = (2 * pr + n) // (2 * n)
        qi = (2 * pi + n) // (2 * n)
        rr = r0r - (qr * r1r - qi * r1i)
        ri = r0i - (qr * r1i + qi * r1r)
        sr = s0r - (qr * s1r - qi * s1i)
        si = s0i - (qr * s1i + qi * s1r)
        tr = t0r - (qr * t1r - qi * t1i)
        ti = t0i - (qr * t1i + qi * t1r)
        r0r, r0i, r1r, r1i = r1r, r1i, rr, ri
        s0r, s0i, s1r, s1i = s1r, s1i, sr, si
        t0r, t0i, t1r, t1i = t1r, t1i, tr, ti
    return r0r, r0i, s0r, s0i, t0r, t0i


@numba.njit(cache=True)
def _isqrt(n):
    r = int(math.sqrt(n))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


@numba.njit(cache=True)
def _enumerate_kernel(row_bound, hs_max, real_only, out):
    count = 0
    ra = _isqrt(row_bound)
    for ar in range(-ra, ra + 1):
        for ai in range(-ra, ra + 1):
            if real_only and ai != 0:
                continue
            na = ar * ar + ai * ai
            if na > row_bound:
                continue
            rb = _isqrt(row_bound - na)
            for br in range(-rb, rb + 1):
                for bi in range(-rb, rb + 1):
                    if real_only and bi != 0:
                        continue
                    n = na + br * br + bi * bi
                    if n > row_bound or n == 0:
                        continue
                    gr, gi, ur, ui, vr, vi = _gauss_bezout(ar, ai, br, bi)
                    if gr * gr + gi * gi != 1:
                        continue
                    if real_only and gi != 0:
                        continue
                    # a u + b v = g, so with g^{-1} = conj(g): d0 = u conj(g), c0 = -v conj(g)
                    d0r = ur * gr + ui * gi
                    d0i = ui * gr - ur * gi
                    c0r = -(vr * gr + vi * gi)
                    c0i = -(vi * gr - vr * gi)
                    # N(c0 + k a) + N(d0 + k b) = n |k - k*|^2 + m0
                    pr = -(c0r * ar + c0i * ai + d0r * br + d0i * bi)
                    pi = -(c0i * ar - c0r * ai + d0i * br - d0r * bi)
                    ksr = pr / n
                    ksi = pi / n
                    budget = hs_max - n
                    if budget < 0:
                        continue
                    rad = math.sqrt(budget / n) + 1.0
                    k_lo_r = int(math.floor(ksr - rad))
                    k_hi_r = int(math.ceil(ksr + rad))
                    k_lo_i = int(math.floor(ksi - rad))
                    k_hi_i = int(math.ceil(ksi + rad))
                    if real_only:
                        k_lo_i = 0
                        k_hi_i = 0
                    for kr in range(k_lo_r, k_hi_r + 1):
                        for ki in range(k_lo_i, k_hi_i + 1):
                            cr = c0r + kr * ar - ki * ai
                            ci = c0i + kr * ai + ki * ar
                            dr = d0r + kr * br - ki * bi
                            di = d0i + kr * bi + ki * br
                            if n + cr * cr + ci * ci + dr * dr + di * di > hs_max:
                                continue
                            if count >= out.shape[0]:
                                return -1
                            out[count, 0] = ar
                            out[count, 1] = ai
                            out[count, 2] = br
                            out[count, 3] = bi
                            out[count, 4] = cr
                            out[count, 5] = ci
                            out[count, 6] = dr
                            out[count, 7] = di
                            count += 1
    return count


def enumerate_ball(T: float, real_only: bool = False, t_max: float = T_MAX) -> LatticeBall:
    """All gamma in SL2(Z[i]) (or SL2(Z) with ``real_only``) with d(o, gamma o) < T."""
    if T > t_max:
        raise ValueError(f"T = {T} exceeds T_max = {t_max}; enumeration cost grows like e^T")
    if T <= 0:
        return LatticeBall(T, np.zeros((0, 8), np.int64))
    hs_max = hs_bound(T)
    # each row has N(a) + N(b) <= sigma_1^2 < e^{T/2}
    row_bound = int(math.floor(math.exp(T / 2))) + 1
    capacity = int(12 * math.exp(T)) + 4096
    while True:
        out = np.empty((capacity, 8), dtype=np.int64)
        count = _enumerate_kernel(row_bound, hs_max, real_only, out)
        if count >= 0:
            return LatticeBall(T, out[:count])
        capacity *= 2


def brute_force_ball(T: float, entry_bound: int | None = None) -> LatticeBall:
    """Exhaustive search over all quadruples with |re|, |im| <= entry_bound."""
    if entry_bound is None:
        entry_bound = int(math.isqrt(hs_bound(T)))
    if entry_bound > 20:
        raise ValueError("entry_bound above 20 is too expensive for exhaustive search")
    r = np.arange(-entry_bound, entry_bound + 1)
    zr, zi = (x.ravel() for x in np.meshgrid(r, r, indexing="ij"))
    nz = zr * zr + zi * zi
    # (b, c, d) triples as index grids, a handled by an explicit loop
    B, C, D = (x.ravel() for x in np.meshgrid(*(np.arange(zr.size),) * 3, indexing="ij"))
    found = []
    for ia in range(zr.size):
        ar, ai = zr[ia], zi[ia]
        detr = ar * zr[D] - ai * zi[D] - (zr[B] * zr[C] - zi[B] * zi[C])
        deti = ar * zi[D] + ai * zr[D] - (zr[B] * zi[C] + zi[B] * zr[C])
        hit = (detr == 1) & (deti == 0)
        if not hit.any():
            continue
        b, c, d = B[hit], C[hit], D[hit]
        rows = np.stack([np.full(b.size, ar), np.full(b.size, ai), zr[b], zi[b],
                         zr[c], zi[c], zr[d], zi[d]], axis=1)
        hs2 = nz[ia] + nz[b] + nz[c] + nz[d]
        found.append(rows[disp_from_hs(hs2) < T])
    entries = np.concatenate(found) if found else np.zeros((0, 8), np.int64)
    return LatticeBall(T, entries)


def growth_exponent(Ts: list[float], counts: list[int]) -> float:
    """Least-squares slope of log |Gamma_T| against T."""
    return float(np.polyfit(np.asarray(Ts, float), np.log(np.asarray(counts, float)), 1)[0])


# --------------------------------------------------------------------------
# Cache


def cache_dir() -> Path:
    root = os.environ.get(CACHE_ENV)
    path = Path(root) if root else Path.home() / ".cache" / "skewball"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cache_file(T: float) -> Path:
    return cache_dir() / f"gamma_ball_T{T!r}.npy"


def lattice_ball(T: float, use_cache: bool = True, t_max: float = T_MAX) -> LatticeBall:
    """Enumerated ball, reusing any cached ball of radius at least T."""
    if not use_cache:
        return enumerate_ball(T, t_max=t_max)
    best = None
    for f in cache_dir().glob("gamma_ball_T*.npy"):
        try:
            t_file = float(f.stem[len("gamma_ball_T"):])
        except ValueError:
            continue
        if t_file >= T and (best is None or t_file < best[0]):
            best = (t_file, f)
    if best is not None:
        return LatticeBall(best[0], np.load(best[1])).restrict(T)
    ball = enumerate_ball(T, t_max=t_max)
    tmp = _cache_file(T).with_suffix(".tmp.npy")
    np.save(tmp, ball.entries.astype(np.int32))
    os.replace(tmp, _cache_file(T))
    return ball
