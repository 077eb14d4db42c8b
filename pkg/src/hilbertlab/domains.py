"""Properly convex domains in the affine chart and their three oracles.

Every domain exposes a *level* function that is negative inside, zero on
the boundary and positive outside, plus

* ``contains``: strict membership,
* ``exit_param``: the parameter at which a ray leaves the domain,
* ``supporting_hyperplane``: the unique supporting functional at a C1 point.

``exit_param`` also accepts *anchored* points ``anchor + offset`` where the
anchor is a boundary point whose level is taken to be exactly zero.  Points
within ~1e-16 of the boundary cannot be stored as plain chart coordinates,
but their offsets from a boundary anchor can, and the level increments are
evaluated without cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidGeometry, NonUniqueSupport, NumericalFailure, OutsideDomain
from .projective import PointLike, ProjPoint, as_chart

BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class AffineFunctional:
    """``f(x) = normal . x - offset`` with ``normal`` of unit length."""

    normal: np.ndarray
    offset: float

    def __call__(self, x) -> np.ndarray:
        return np.asarray(x, float) @ self.normal - self.offset

    def __repr__(self):
        return f"AffineFunctional(normal={np.round(self.normal, 12).tolist()}, offset={self.offset:.12g})"


@dataclass(frozen=True, eq=False)
class ChordEndpoints:
    a: ProjPoint
    b: ProjPoint


def _rows(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


class ConvexDomain:
    kind = "abstract"
    strictly_convex_c1 = False

    dim: int
    scale: float
    center: np.ndarray

    # -- subclass hooks -------------------------------------------------------
    def level(self, x) -> np.ndarray:
        raise NotImplementedError

    def _exit(self, base: np.ndarray, off: np.ndarray, u: np.ndarray, anchored: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _normal(self, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- public oracles -------------------------------------------------------
    def contains(self, x: PointLike):
        """Strict membership; boundary points are outside.  Accepts (k, n) arrays."""
        if isinstance(x, ProjPoint):
            if not x.in_chart:
                return False
            x = x.chart
        x = np.asarray(x, dtype=float)
        return self.level(x) < 0

    def exit_param(self, x, u, anchor=None) -> np.ndarray:
        """Largest ``s > 0`` with ``x + s*u`` in the closure of the domain.

        With ``anchor`` given, the start point is ``anchor + x`` and the anchor
        is treated as lying exactly on the boundary.
        """
        xs, single = _rows(x)
        us, _ = _rows(u)
        xs, us = np.broadcast_arrays(xs, us)
        if anchor is None:
            base, off = xs, np.zeros_like(xs)
        else:
            base, _ = _rows(anchor)
            base, off = np.broadcast_arrays(base, xs)
        s = self.exit_mixed(base, off, us, np.full(base.shape[0], anchor is not None))
        return s[0] if single else s

    def exit_mixed(self, base, off, u, anchored) -> np.ndarray:
        """Row-wise exit parameters; rows flagged ``anchored`` use ``base`` as a boundary anchor."""
        if np.any(~np.any(u != 0, axis=1)):
            raise InvalidGeometry("ray direction must be nonzero")
        return self._exit(base, off, u, np.asarray(anchored, bool))

    def ray_boundary(self, x: PointLike, direction) -> np.ndarray:
        """Boundary point hit by the ray from interior ``x`` along ``direction``."""
        xc = as_chart(x)
        d = np.asarray(direction, dtype=float)
        s = self.exit_param(xc, d)
        return xc + (s[..., None] if np.ndim(s) else s) * d

    def chord(self, x: PointLike, y: PointLike) -> ChordEndpoints:
        xc, yc = as_chart(x), as_chart(y)
        u = yc - xc
        if not np.any(u):
            raise InvalidGeometry("a chord needs two distinct points")
        a = xc - self.exit_param(xc, -u) * u
        b = yc + self.exit_param(yc, u) * u
        return ChordEndpoints(ProjPoint.from_chart(a), ProjPoint.from_chart(b))

    def on_boundary(self, xi, tol: float = 1e-10):
        return np.abs(self.level(np.asarray(xi, float))) <= tol

    def supporting_hyperplane(self, xi: PointLike) -> AffineFunctional:
        x = as_chart(xi)
        if not self.on_boundary(x, 1e-9):
            raise InvalidGeometry("point is not on the boundary")
        nrm = self._normal(x)
        nrm = nrm / np.linalg.norm(nrm)
        return AffineFunctional(nrm, float(nrm @ x))

    def boundary_regularity(self, xi: PointLike) -> dict:
        """C1 / extremality flags at a boundary point."""
        return {"c1": True, "extremal": True, "strongly_extremal": True}

    # -- sampling helpers -----------------------------------------------------
    def sample_interior(self, rng: np.random.Generator, k: int, shrink: float = 1.0) -> np.ndarray:
        """Points ``center + shrink*(p - center)`` with ``p`` uniform in the domain."""
        lo, hi = self.bounding_box()
        out = np.empty((0, self.dim))
        while out.shape[0] < k:
            p = rng.uniform(lo, hi, size=(max(2 * k, 64), self.dim))
            out = np.vstack([out, p[self.contains(p)]])
        out = out[:k]
        return self.center + shrink * (out - self.center)

    def sample_boundary(self, rng: np.random.Generator, k: int) -> np.ndarray:
        d = rng.standard_normal((k, self.dim))
        c = np.broadcast_to(self.center, d.shape)
        return c + self.exit_param(c, d)[:, None] * d

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


def _solve_quadratic_exit(alpha, beta, gamma) -> np.ndarray:
    """Positive root of ``alpha s^2 + 2 beta s + gamma`` with ``gamma < 0 < alpha``."""
    disc = np.sqrt(np.maximum(beta * beta - alpha * gamma, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(beta > 0, -gamma / (beta + disc), (disc - beta) / alpha)
    return s


class Ellipsoid(ConvexDomain):
    """``{x : (x - c)^T A (x - c) < 1}`` with ``A`` symmetric positive definite."""

    kind = "ellipsoid"
    strictly_convex_c1 = True

    def __init__(self, center, shape):
        c = np.asarray(center, dtype=float)
        A = np.asarray(shape, dtype=float)
        if A.shape != (c.size, c.size):
            raise InvalidGeometry(f"shape matrix must be {c.size}x{c.size}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * np.abs(A).max()):
            raise InvalidGeometry("shape matrix must be symmetric")
        A = 0.5 * (A + A.T)
        w = np.linalg.eigvalsh(A)
        if w.min() <= 0:
            raise InvalidGeometry("shape matrix must be positive definite")
        self.center = c
        self.A = A
        self.dim = c.size
        self.scale = float(2.0 / np.sqrt(w.min()))
        # chart affine map sending the unit ball onto the ellipsoid
        w, V = np.linalg.eigh(A)
        self._L = V @ np.diag(1.0 / np.sqrt(w)) @ V.T

    @classmethod
    def unit_ball(cls, n: int = 2) -> "Ellipsoid":
        return cls(np.zeros(n), np.eye(n))

    def level(self, x) -> np.ndarray:
        z = np.asarray(x, float) - self.center
        return np.einsum("...i,ij,...j->...", z, self.A, z) - 1.0

    def _exit(self, base, off, u, anchored):
        zb = base - self.center
        Au = u @ self.A
        alpha = np.einsum("ki,ki->k", u, Au)
        beta = np.einsum("ki,ki->k", zb + off, Au)
        Aoff = off @ self.A
        lvl0 = np.where(anchored, 0.0, self.level(base))
        gamma = lvl0 + 2.0 * np.einsum("ki,ki->k", zb, Aoff) + np.einsum("ki,ki->k", off, Aoff)
        if np.any(gamma >= 0):
            raise OutsideDomain("ray start is not inside the ellipsoid")
        return _solve_quadratic_exit(alpha, beta, gamma)

    def _normal(self, xi):
        return self.A @ (xi - self.center)

    def bounding_box(self):
        half = np.sqrt(np.diag(np.linalg.inv(self.A)))
        return self.center - half, self.center + half

    def sample_interior(self, rng, k, shrink=1.0):
        g = rng.standard_normal((k, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rng.uniform(size=(k, 1)) ** (1.0 / self.dim)
        return self.center + shrink * (r * g) @ self._L.T

    def chart_affine(self) -> np.ndarray:
        """Homogeneous matrix of the affine map unit ball -> this ellipsoid."""
        n = self.dim
        T = np.eye(n + 1)
        T[:n, :n] = self._L
        T[:n, n] = self.center
        return T

    def describe(self):
        return {"kind": "ellipsoid", "center": self.center.tolist(), "shape": self.A.tolist()}


class PNormBall(ConvexDomain):
    """``{x : sum |x_i / scale|^p < 1}`` for finite ``p >= 2``."""

    kind = "pball"
    strictly_convex_c1 = True

    def __init__(self, p: float, scale: float = 1.0, dim: int = 2):
        if not np.isfinite(p) or p < 2:
            raise InvalidGeometry("p-ball needs finite p >= 2")
        if scale <= 0:
            raise InvalidGeometry("p-ball scale must be positive")
        self.p = float(p)
        self.radius = float(scale)
        self.dim = int(dim)
        self.center = np.zeros(self.dim)
        self.scale = 2.0 * self.radius * np.sqrt(self.dim)

    def level(self, x) -> np.ndarray:
        z = np.abs(np.asarray(x, float)) / self.radius
        return np.sum(z ** self.p, axis=-1) - 1.0

    def _increments(self, b, v):
        p, sig = self.p, self.radius
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = v / b
            # expm1 form only where cancellation threatens; large ratios are safe directly
            stable = (b != 0) & (ratio > -0.5) & (ratio < 1.0)
            inc_stable = (np.abs(b) / sig) ** p * np.expm1(p * np.log1p(np.where(stable, ratio, 0.0)))
        inc_direct = (np.abs(b + v) / sig) ** p - (np.abs(b) / sig) ** p
        return np.sum(np.where(stable, inc_stable, inc_direct), axis=-1)

    def _exit(self, base, off, u, anchored):
        p, sig = self.p, self.radius
        lvl0 = np.where(anchored, 0.0, self.level(base))
        if np.any(lvl0 + self._increments(base, off) >= 0):
            raise OutsideDomain("ray start is not inside the p-ball")
        unorm = np.linalg.norm(u, axis=1)
        s = (np.linalg.norm(base + off, axis=1) + sig * np.sqrt(self.dim)) / unorm * 1.01 + 1e-300
        active = np.ones(s.shape, bool)
        for _ in range(300):
            if not active.any():
                break
            i = np.flatnonzero(active)
            v = off[i] + s[i, None] * u[i]
            f = lvl0[i] + self._increments(base[i], v)
            z = base[i] + v
            fp = np.sum(p * np.sign(z) * (np.abs(z) / sig) ** (p - 1) / sig * u[i], axis=1)
            step = f / fp
            done = (f <= 0) | (step <= 4 * np.finfo(float).eps * s[i])
            s[i] = np.where(f > 0, s[i] - step, s[i])
            active[i[done]] = False
        else:
            raise NumericalFailure("p-ball boundary solve did not converge")
        return s

    def _normal(self, xi):
        z = xi / self.radius
        return np.sign(z) * np.abs(z) ** (self.p - 1)

    def bounding_box(self):
        return -self.radius * np.ones(self.dim), self.radius * np.ones(self.dim)

    def describe(self):
        return {"kind": "pball", "p": self.p, "scale": self.radius, "dim": self.dim}


class HalfspacePolytope(ConvexDomain):
    """``{x : normals @ x < offsets}``; rows are rescaled to unit normals."""

    kind = "polytope"
    strictly_convex_c1 = False

    def __init__(self, normals, offsets):
        N = np.atleast_2d(np.asarray(normals, dtype=float))
        c = np.asarray(offsets, dtype=float).ravel()
        if N.shape[0] != c.size:
            raise InvalidGeometry("need one offset per inequality")
        nn = np.linalg.norm(N, axis=1)
        if np.any(nn == 0):
            raise InvalidGeometry("zero normal in polytope inequality")
        self.normals = N / nn[:, None]
        self.offsets = c / nn
        self.dim = N.shape[1]
        lo, hi = [], []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            for sign, store in ((1.0, lo), (-1.0, hi)):
                res = linprog(sign * e, A_ub=self.normals, b_ub=self.offsets,
                              bounds=[(None, None)] * self.dim, method="highs")
                if res.status == 3:
                    raise InvalidGeometry("polytope is unbounded")
                if res.status != 0:
                    raise InvalidGeometry(f"polytope LP failed: {res.message}")
                store.append(res.x[i])
        self._lo, self._hi = np.array(lo), np.array(hi)
        # Chebyshev center: maximize r with N x + r <= c
        cost = np.zeros(self.dim + 1)
        cost[-1] = -1.0
        A = np.hstack([self.normals, np.ones((c.size, 1))])
        res = linprog(cost, A_ub=A, b_ub=self.offsets,
                      bounds=[(None, None)] * self.dim + [(0, None)], method="highs")
        if res.status != 0 or res.x[-1] <= 0:
            raise InvalidGeometry("polytope has empty interior")
        self.center = res.x[:-1]
        self.inradius = float(res.x[-1])
        self.scale = float(np.linalg.norm(self._hi - self._lo))

    @classmethod
    def simplex(cls, dim: int = 2) -> "HalfspacePolytope":
        """Standard simplex ``{x_i > 0, sum x_i < 1}``."""
        N = np.vstack([-np.eye(dim), np.ones((1, dim))])
        c = np.concatenate([np.zeros(dim), [1.0]])
        return cls(N, c)

    def level(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.max(x @ self.normals.T - self.offsets, axis=-1)

    def _exit(self, base, off, u, anchored):
        slack0 = self.offsets - base @ self.normals.T
        # facets through an anchor are taken to pass through it exactly
        tol = BOUNDARY_RTOL * max(self.scale, 1.0) * 1e3
        slack0 = np.where(anchored[:, None] & (np.abs(slack0) <= tol), 0.0, slack0)
        slack = slack0 - off @ self.normals.T
        if np.any(slack <= 0):
            raise OutsideDomain("ray start is not inside the polytope")
        rate = u @ self.normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(rate > 0, slack / rate, np.inf)
        return t.min(axis=1)

    def active_facets(self, xi, tol: Optional[float] = None) -> np.ndarray:
        tol = BOUNDARY_RTOL * max(self.scale, 1.0) * 1e3 if tol is None else tol
        return np.flatnonzero(np.abs(np.asarray(xi, float) @ self.normals.T - self.offsets) <= tol)

    def supporting_hyperplane(self, xi: PointLike) -> AffineFunctional:
        x = as_chart(xi)
        if not self.on_boundary(x, 1e-9):
            raise InvalidGeometry("point is not on the boundary")
        act = self.active_facets(x)
        if act.size != 1:
            raise NonUniqueSupport(f"{act.size} facets meet at this boundary point")
        return AffineFunctional(self.normals[act[0]].copy(), float(self.offsets[act[0]]))

    def boundary_regularity(self, xi: PointLike) -> dict:
        act = self.active_facets(as_chart(xi))
        if act.size == 0:
            raise InvalidGeometry("point is not on the boundary")
        rank = np.linalg.matrix_rank(self.normals[act]) if act.size else 0
        vertex = rank == self.dim
        return {"c1": act.size == 1, "extremal": bool(vertex), "strongly_extremal": bool(vertex)}

    def bounding_box(self):
        return self._lo.copy(), self._hi.copy()

    def describe(self):
        return {"kind": "polytope", "normals": self.normals.tolist(), "offsets": self.offsets.tolist()}


def contains(D: ConvexDomain, x: PointLike) -> bool:
    return bool(D.contains(x))


def ray_boundary(D: ConvexDomain, x: PointLike, direction) -> ProjPoint:
    if not D.contains(x):
        raise OutsideDomain("ray start is not inside the domain")
    return ProjPoint.from_chart(D.ray_boundary(x, direction))


def supporting_hyperplane(D: ConvexDomain, xi: PointLike) -> AffineFunctional:
    return D.supporting_hyperplane(xi)


# -- automorphisms ---------------------------------------------------------------


def lorentz_boost(n: int, axis: np.ndarray, rapidity: float) -> np.ndarray:
    """Boost of ``O(n,1)`` (coordinates ``(x_1..x_n, t)``) along a unit spatial axis."""
    e = np.asarray(axis, float)
    e = e / np.linalg.norm(e)
    M = np.eye(n + 1)
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    M[:n, :n] += (ch - 1.0) * np.outer(e, e)
    M[:n, n] = sh * e
    M[n, :n] = sh * e
    M[n, n] = ch
    return M


def random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_automorphism(D: ConvexDomain, rng: np.random.Generator, size: float = 1.0) -> np.ndarray:
    """A random element of Aut(D) as a homogeneous matrix.

    Ellipsoids get a rotation times a boost of rapidity up to ``size``;
    p-balls a signed permutation; polytopes that are simplices a positive
    diagonal scaling in barycentric coordinates.
    """
    n = D.dim
    if isinstance(D, Ellipsoid):
        R = np.eye(n + 1)
        R[:n, :n] = random_rotation(rng, n)
        ax = rng.standard_normal(n)
        B = lorentz_boost(n, ax, rng.uniform(-size, size))
        T = D.chart_affine()
        return T @ B @ R @ np.linalg.inv(T)
    if isinstance(D, PNormBall):
        P = np.eye(n)[rng.permutation(n)] * rng.choice([-1.0, 1.0], size=n)[:, None]
        M = np.eye(n + 1)
        M[:n, :n] = P
        return M
    if isinstance(D, HalfspacePolytope) and D.normals.shape[0] == n + 1:
        # homogeneous facet functionals give barycentric-style coordinates
        F = np.hstack([-D.normals, D.offsets[:, None]])
        scal = np.exp(rng.uniform(-size, size, size=n + 1))
        return np.linalg.inv(F) @ np.diag(scal) @ F
    raise InvalidGeometry(f"no automorphism sampler for {D.kind}")
