"""Hilbert metric, chords, horofunctions, Gromov products, shadows.

Batched internals work on triples ``(base, off, anchored)`` of shape
``(k, n), (k, n), (k,)``: a point is ``base + off`` and, when ``anchored``,
``base`` is a boundary point treated as exact.  The public functions accept
:class:`ProjPoint` values or plain chart arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from .domains import ConvexDomain, Ellipsoid
from .errors import DegenerateChord, InvalidGeometry, NumericalFailure
from .projective import PointLike, ProjPoint, as_chart

BUSEMANN_TIMES = (8.0, 12.0, 16.0)
BUSEMANN_MAX_ERR = 1e-7


def rounding_floor(d) -> np.ndarray:
    """Attainable accuracy for quantities read off a chart point at distance ``d``.

    Such a point sits about ``2 exp(-2d)`` from the boundary, so one ulp of its
    coordinates moves distances and horofunctions by roughly ``eps * exp(2d)``.
    """
    return 4.0 * np.finfo(float).eps * np.exp(2.0 * np.asarray(d, float))
# rounding level of a Busemann difference of two ~16-unit distances
_BUSEMANN_NOISE = 2e-14
_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)
# beyond this chord logit, points are carried relative to a boundary anchor
_ANCHOR_LOGIT = 6.0


# -- packing --------------------------------------------------------------------


def _pack(p) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    if isinstance(p, ProjPoint):
        p = [p]
        single = True
    else:
        single = False
    if isinstance(p, (list, tuple)) and p and isinstance(p[0], ProjPoint):
        base = np.array([q.anchor if q.is_anchored else q.chart for q in p], dtype=float)
        off = np.array([q.offset if q.is_anchored else np.zeros(q.dim) for q in p], dtype=float)
        anch = np.array([q.is_anchored for q in p])
        return base, off, anch, single
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        arr = arr[None]
        single = True
    return arr, np.zeros_like(arr), np.zeros(arr.shape[0], bool), single


def _unpack(base, off, anch, i) -> ProjPoint:
    if anch[i]:
        return ProjPoint.anchored(base[i], off[i])
    return ProjPoint.from_chart(base[i] + off[i])


def _dist_core(D: ConvexDomain, xb, xo, xa, yb, yo, ya) -> np.ndarray:
    u = (yb - xb) + (yo - xo)
    delta = np.linalg.norm(u, axis=1)
    out = np.zeros(delta.shape)
    nz = delta > 0
    if not nz.any():
        return out
    u, delta = u[nz], delta[nz]
    A = D.exit_mixed(xb[nz], xo[nz], -u, xa[nz]) * delta
    B = D.exit_mixed(yb[nz], yo[nz], u, ya[nz]) * delta
    out[nz] = 0.5 * np.log1p(delta * (A + B + delta) / (A * B))
    return out


def hilbert_distance(D: ConvexDomain, x, y):
    """``1/2 log`` of the cross-ratio of ``x, y`` with the chord endpoints.

    Accepts single points or stacks; returns a float or an array.
    """
    xb, xo, xa, xs = _pack(x)
    yb, yo, ya, ys = _pack(y)
    if xb.shape[0] != yb.shape[0]:
        xb, yb = np.broadcast_arrays(xb, yb)
        xo, yo = np.broadcast_arrays(xo, yo)
        xa, ya = np.broadcast_arrays(xa, ya)
    d = _dist_core(D, xb, xo, xa, yb, yo, ya)
    return float(d[0]) if (xs and ys) else d


# -- chords ---------------------------------------------------------------------


class ChordBatch:
    """Stack of unit-speed chords ``t -> point at signed distance t from origin``.

    Each chord stores its endpoints ``a`` (t -> -inf) and ``b`` (t -> +inf)
    and the logit ``ell0`` of the origin's affine position on ``[a, b]``.
    """

    def __init__(self, D: ConvexDomain, a: np.ndarray, b: np.ndarray, ell0: np.ndarray):
        self.D = D
        self.a = np.atleast_2d(np.asarray(a, float))
        self.b = np.atleast_2d(np.asarray(b, float))
        self.ell0 = np.atleast_1d(np.asarray(ell0, float))
        if np.any(np.linalg.norm(self.b - self.a, axis=1) == 0):
            raise DegenerateChord("chord endpoints coincide")

    def __len__(self):
        return self.ell0.size

    @classmethod
    def from_points(cls, D, x, direction) -> "ChordBatch":
        """Chords through interior points ``x`` (origin) along ``direction``."""
        xb, xo, xa, _ = _pack(x)
        u = np.asarray(direction, float)
        if u.ndim == 1:
            u = np.broadcast_to(u, xb.shape)
        sa = D.exit_mixed(xb, xo, -u, xa)
        sb = D.exit_mixed(xb, xo, u, xa)
        x = xb + xo
        return cls(D, x - sa[:, None] * u, x + sb[:, None] * u, np.log(sa / sb))

    @classmethod
    def from_endpoints(cls, D, a, b, lam=0.5) -> "ChordBatch":
        a = np.atleast_2d(np.asarray(a, float))
        b = np.atleast_2d(np.asarray(b, float))
        lam = np.broadcast_to(np.asarray(lam, float), (a.shape[0],))
        return cls(D, a, b, np.log(lam / (1.0 - lam)))

    @classmethod
    def toward_boundary(cls, D, x, xi, packed=None) -> "ChordBatch":
        """Chords from interior ``x`` (origin) to the boundary points ``xi`` (= b)."""
        xb, xo, xa = packed if packed is not None else _pack(x)[:3]
        xi = np.atleast_2d(np.asarray(xi, float))
        v = xi - (xb + xo)
        s = D.exit_mixed(xb, xo, -v, xa)
        a = (xb + xo) - s[:, None] * v
        return cls(D, a, xi, np.log(s))

    def points_at(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Packed points at parameters ``t`` (shape (k,)), anchored near the ends."""
        L = self.ell0 + 2.0 * np.asarray(t, float)
        ab = self.b - self.a
        near_a = L < -_ANCHOR_LOGIT
        near_b = L > _ANCHOR_LOGIT
        lam = expit(L)
        base = np.where(near_a[:, None], self.a, np.where(near_b[:, None], self.b, self.a))
        off = np.where(
            near_b[:, None],
            -expit(-L)[:, None] * ab,
            lam[:, None] * ab,
        )
        mid = ~(near_a | near_b)
        if mid.any():
            # plain chart coordinates are accurate this far from the ends
            base = base.copy()
            off = off.copy()
            base[mid] = base[mid] + off[mid]
            off[mid] = 0.0
        return base, off, near_a | near_b

    def params_of(self, x) -> np.ndarray:
        """Signed parameter of points already on the chords."""
        xb, xo, xa, _ = _pack(x)
        ab = self.b - self.a
        n2 = np.einsum("ki,ki->k", ab, ab)
        lam = np.einsum("ki,ki->k", (xb - self.a) + xo, ab) / n2
        one_minus = np.einsum("ki,ki->k", (self.b - xb) - xo, ab) / n2
        return 0.5 * (np.log(lam / one_minus) - self.ell0)

    def row(self, i) -> "GeodesicChord":
        return GeodesicChord(ChordBatch(self.D, self.a[i], self.b[i], self.ell0[i]))


class GeodesicChord:
    """Unit-speed straight-line geodesic with ``point_at(0) = origin``."""

    def __init__(self, batch: ChordBatch):
        if len(batch) != 1:
            raise ValueError("GeodesicChord wraps a single chord")
        self._batch = batch
        self.domain = batch.D

    @classmethod
    def through(cls, D: ConvexDomain, x: PointLike, y: PointLike) -> "GeodesicChord":
        """Chord with origin ``x`` heading toward ``y``."""
        xc = x if isinstance(x, ProjPoint) else ProjPoint.from_chart(x)
        u = as_chart(y) - as_chart(xc)
        if not np.any(u):
            raise DegenerateChord("need two distinct points")
        return cls(ChordBatch.from_points(D, xc, u))

    @classmethod
    def from_direction(cls, D: ConvexDomain, x: PointLike, direction) -> "GeodesicChord":
        return cls(ChordBatch.from_points(D, x if isinstance(x, ProjPoint) else as_chart(x), direction))

    @classmethod
    def from_endpoints(cls, D: ConvexDomain, a, b, lam: float = 0.5) -> "GeodesicChord":
        """Chord from boundary point ``a`` to ``b`` with origin at affine position ``lam``."""
        if np.linalg.norm(as_chart(a) - as_chart(b)) <= 1e-12 * D.scale:
            raise DegenerateChord("chord endpoints coincide")
        return cls(ChordBatch.from_endpoints(D, as_chart(a), as_chart(b), lam))

    @property
    def batch(self) -> ChordBatch:
        return self._batch

    @property
    def endpoints(self):
        from .domains import ChordEndpoints

        return ChordEndpoints(ProjPoint.from_chart(self._batch.a[0]), ProjPoint.from_chart(self._batch.b[0]))

    @property
    def a(self) -> np.ndarray:
        return self._batch.a[0]

    @property
    def b(self) -> np.ndarray:
        return self._batch.b[0]

    @property
    def origin(self) -> ProjPoint:
        return self.point_at(0.0)

    def point_at(self, t: float) -> ProjPoint:
        base, off, anch = self._batch.points_at(np.array([float(t)]))
        return _unpack(base, off, anch, 0)

    def param_of(self, p: PointLike) -> float:
        return float(self._batch.params_of(p if isinstance(p, ProjPoint) else as_chart(p))[0])


def geodesic_point_at(G: GeodesicChord, t: float) -> ProjPoint:
    return G.point_at(t)


# -- Busemann functions -----------------------------------------------------------


def _require_smooth(D: ConvexDomain):
    if not D.strictly_convex_c1:
        raise InvalidGeometry("horofunctions need a strictly convex domain with C1 boundary")


def _aitken(f1, f2, f3):
    d1 = f2 - f1
    d2 = f3 - f2
    den = d2 - d1
    noise = _BUSEMANN_NOISE * np.maximum(1.0, np.abs(f3))
    settled = np.abs(d2) <= 10 * noise
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = f3 - d2 * d2 / den
        ratio = d2 / d1
    good = np.isfinite(acc) & (np.abs(ratio) < 0.9)
    value = np.where(settled | ~good, f3, acc)
    err = np.where(settled, np.abs(d2) + noise, np.where(good, np.abs(acc - f3) + noise, np.inf))
    return value, err


def _busemann_core(D: ConvexDomain, xi, px, py, times, shift):
    xb, xo, xa = px
    yb, yo, ya = py
    chords = ChordBatch.toward_boundary(D, None, xi, packed=(xb, xo, xa))
    anchored = np.ones(xi.shape[0], bool)
    f = []
    for t0 in times:
        t = t0 + shift
        L = chords.ell0 + 2.0 * t
        w = -expit(-L)[:, None] * (chords.b - chords.a)
        f.append(t - _dist_core(D, yb, yo, ya, xi, w, anchored))
    return _aitken(*f[-3:])


def busemann_batch(D: ConvexDomain, xi, x, y, times=BUSEMANN_TIMES, strict: bool = True):
    """Vectorized ``beta_xi(x, y)``; returns ``(values, error_bounds)``.

    ``z_t`` is the point at distance ``t`` from ``x`` on ``[x, xi)``, carried
    relative to the anchor ``xi`` so that ``d(x, z_t) = t`` holds exactly.
    """
    _require_smooth(D)
    xi = np.atleast_2d(np.asarray(xi, float))
    xb, xo, xa, _ = _pack(x)
    yb, yo, ya, _ = _pack(y)
    k = max(xi.shape[0], xb.shape[0], yb.shape[0])
    xi = np.broadcast_to(xi, (k, xi.shape[1]))
    xb, xo, xa = (np.broadcast_to(v, (k,) + v.shape[1:]) for v in (xb, xo, xa))
    yb, yo, ya = (np.broadcast_to(v, (k,) + v.shape[1:]) for v in (yb, yo, ya))
    val, err = _busemann_core(D, xi, (xb, xo, xa), (yb, yo, ya), times, 0.0)
    retry = np.flatnonzero(~(err <= BUSEMANN_MAX_ERR))
    if retry.size:
        # for far-apart x, y the samples z_t must run well past y before the differences settle
        px = tuple(v[retry] for v in (xb, xo, xa))
        py = tuple(v[retry] for v in (yb, yo, ya))
        shift = np.ceil(_dist_core(D, *px, *py))
        with np.errstate(all="ignore"):
            v2, e2 = _busemann_core(D, xi[retry], px, py, times, shift)
        better = np.isfinite(e2) & ~(e2 >= err[retry])
        val[retry[better]] = v2[better]
        err[retry[better]] = e2[better]
    same = np.all((xb + xo) == (yb + yo), axis=1) & np.all(xb == yb, axis=1)
    val = np.where(same, 0.0, val)
    err = np.where(same, 0.0, err)
    if strict and np.any(err > BUSEMANN_MAX_ERR):
        raise NumericalFailure(
            f"Busemann extrapolation did not settle (residual {np.max(err):.3g})"
        )
    return val, err


def busemann(D: ConvexDomain, xi: PointLike, x: PointLike, y: PointLike, with_error: bool = False):
    """Horofunction ``beta_xi(x, y) = lim d(x, z) - d(y, z)`` as ``z -> xi``."""
    val, err = busemann_batch(D, as_chart(xi), x if isinstance(x, ProjPoint) else as_chart(x),
                              y if isinstance(y, ProjPoint) else as_chart(y))
    if with_error:
        return float(val[0]), float(err[0])
    return float(val[0])


@dataclass(frozen=True, eq=False)
class HoroballSpec:
    """Horoball ``{y : beta_xi(x, y) > 0}`` centred at boundary point ``xi``."""

    domain: ConvexDomain
    xi: np.ndarray
    x: np.ndarray

    def contains(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        vals, _ = busemann_batch(self.domain, self.xi, self.x, y)
        return vals > 0


# -- Gromov products --------------------------------------------------------------


def gromov_batch(D: ConvexDomain, x, xi, eta, strict: bool = True):
    """``<xi, eta>_x = 1/2 (beta_xi(x, u) + beta_eta(x, u))`` with ``u`` the chord midpoint."""
    _require_smooth(D)
    xi = np.atleast_2d(np.asarray(xi, float))
    eta = np.atleast_2d(np.asarray(eta, float))
    xi, eta = np.broadcast_arrays(xi, eta)
    if np.any(np.linalg.norm(xi - eta, axis=1) <= 1e-9 * D.scale):
        raise DegenerateChord("Gromov product of a boundary point with itself")
    u = 0.5 * (xi + eta)
    b1, e1 = busemann_batch(D, xi, x, u, strict=strict)
    b2, e2 = busemann_batch(D, eta, x, u, strict=strict)
    return np.maximum(0.5 * (b1 + b2), 0.0), 0.5 * (e1 + e2)


def gromov_product(D: ConvexDomain, x: PointLike, xi: PointLike, eta: PointLike) -> float:
    val, _ = gromov_batch(D, x if isinstance(x, ProjPoint) else as_chart(x), as_chart(xi), as_chart(eta))
    return float(val[0])


# -- point-to-line distance --------------------------------------------------------


def _dist_to_params(D, zb, zo, za, chords: ChordBatch, t):
    pb, po, pa = chords.points_at(t)
    return _dist_core(D, zb, zo, za, pb, po, pa)


def _golden_batch(f, lo, hi, tol):
    a, b = lo.copy(), hi.copy()
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c, None), f(d, None)
    for _ in range(200):
        act = (b - a) > tol
        if not act.any():
            break
        left = act & (fc < fd)
        right = act & ~left
        # left: minimum in [a, d]; right: in [c, b]
        b = np.where(left, d, b)
        a = np.where(right, c, a)
        nc = np.where(left, b - _GOLDEN * (b - a), d)
        nd = np.where(right, a + _GOLDEN * (b - a), c)
        fnew = f(np.where(left, nc, nd), act)
        fc, fd = np.where(left, fnew, np.where(right, fd, fc)), np.where(right, fnew, np.where(left, fc, fd))
        c, d = np.where(act, nc, c), np.where(act, nd, d)
    tmin = np.where(fc < fd, c, d)
    return tmin, np.minimum(fc, fd)


def distance_to_chords(D: ConvexDomain, z, chords: ChordBatch, t_min=None, tol: float = 1e-10):
    """Batched ``min_t d(z_i, chord_i(t))`` over ``t >= t_min`` (``None`` = whole line).

    Returns ``(values, minimizing parameters)``.
    """
    zb, zo, za, _ = _pack(z)
    k = len(chords)
    zb, zo, za = (np.broadcast_to(v, (k,) + v.shape[1:]) for v in (zb, zo, za))
    lower = np.full(k, -np.inf) if t_min is None else np.broadcast_to(np.asarray(t_min, float), (k,))

    def f(t, rows):
        if rows is None:
            return _dist_to_params(D, zb, zo, za, chords, t)
        out = np.zeros(k)
        if rows.any():
            sub = ChordBatch(D, chords.a[rows], chords.b[rows], chords.ell0[rows])
            out[rows] = _dist_to_params(D, zb[rows], zo[rows], za[rows], sub, t[rows])
        return out

    # start from the Euclidean foot point
    zc = zb + zo
    ab = chords.b - chords.a
    lam = np.einsum("ki,ki->k", zc - chords.a, ab) / np.einsum("ki,ki->k", ab, ab)
    lam = np.clip(lam, 1e-6, 1 - 1e-6)
    t0 = np.clip(0.5 * (np.log(lam / (1 - lam)) - chords.ell0), lower, 40.0)
    h = np.full(k, 0.5)
    f0 = f(t0, None)
    fr = f(t0 + h, None)
    tl = np.maximum(t0 - h, lower)
    fl = f(tl, None)
    lo, hi = tl.copy(), t0 + h
    # march downhill with doubling steps until the function turns up
    going_right = fr < f0
    going_left = ~going_right & (fl < f0) & (tl < t0)
    prev, cur, fcur = t0.copy(), np.where(going_right, t0 + h, tl), np.where(going_right, fr, fl)
    moving = going_right | going_left
    step = h.copy()
    for _ in range(60):
        if not moving.any():
            break
        step = np.where(moving, 2 * step, step)
        nxt = np.where(going_right, cur + step, np.maximum(cur - step, lower))
        nxt = np.clip(nxt, -40.0, 40.0)
        fn = f(np.where(moving, nxt, cur), moving)
        up = moving & ((fn >= fcur) | (nxt == cur))
        lo = np.where(up & going_right, prev, np.where(up & going_left, nxt, lo))
        hi = np.where(up & going_right, nxt, np.where(up & going_left, prev, hi))
        adv = moving & ~up
        prev = np.where(adv, cur, prev)
        cur = np.where(adv, nxt, cur)
        fcur = np.where(adv, fn, fcur)
        moving = adv
    tmin, fmin = _golden_batch(f, lo, hi, tol)
    if D.strictly_convex_c1:
        tmin, fmin = _polish(f, tmin, fmin, lower)
    return fmin, tmin


def _polish(f, t, ft, lower, h=1e-5):
    """One finite-difference Newton step; golden section alone stalls at ~1e-8 in t."""
    tp, tm = t + h, np.maximum(t - h, lower)
    fp, fm = f(tp, None), f(tm, None)
    interior = (tm == t - h)
    curv = (fp - 2 * ft + fm) / (h * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = -(fp - fm) / (2 * h) / curv
    ok = interior & (curv > 0) & (np.abs(step) < 1e-6) & np.isfinite(step)
    cand = np.where(ok, t + step, t)
    cand = np.maximum(cand, lower)
    fc = f(cand, None)
    better = ok & (fc <= ft + 1e-15)
    return np.where(better, cand, t), np.where(better, fc, ft)


def distance_to_line(D: ConvexDomain, z: PointLike, G: GeodesicChord, ray: bool = False):
    """``min_t d(z, G(t))`` (``t >= 0`` when ``ray``); returns ``(value, argmin point)``."""
    zz = z if isinstance(z, ProjPoint) else as_chart(z)
    vals, ts = distance_to_chords(D, zz, G.batch, 0.0 if ray else None)
    return float(vals[0]), G.point_at(float(ts[0]))


# -- shadows ----------------------------------------------------------------------


def _lorentz(X, Y):
    return X[..., -1] * Y[..., -1] - np.einsum("...i,...i->...", X[..., :-1], Y[..., :-1])


def _to_ball_homogeneous(D: Ellipsoid, p):
    p = np.atleast_2d(np.asarray(p, float))
    Tinv = np.linalg.inv(D.chart_affine())
    H = np.hstack([p, np.ones((p.shape[0], 1))]) @ Tinv.T
    return H / H[:, -1:]


def ellipsoid_displacement(D: Ellipsoid, x, M, logdet) -> np.ndarray:
    """``d(x, g x)`` for automorphisms ``g`` of an ellipsoid, read off the invariant form.

    ``M`` is a matrix (or stack) representing ``g`` and ``logdet`` its log|det|.
    No chart coordinates of ``g x`` are formed, so this stays accurate far
    beyond the distances at which ``g x`` is numerically on the boundary.
    """
    M = np.asarray(M, float)
    single = M.ndim == 2
    M = np.atleast_3d(M) if not single else M[None]
    logdet = np.atleast_1d(np.asarray(logdet, float))
    T = D.chart_affine()
    X = np.linalg.solve(T, np.append(as_chart(x), 1.0))
    Y = np.einsum("ij,kjl,l->ki", np.linalg.inv(T), M, T @ X)
    lam = np.exp(logdet / (D.dim + 1))
    ch = np.abs(_lorentz(X[None], Y)) / (_lorentz(X, X) * lam)
    d = np.arccosh(np.maximum(ch, 1.0))
    return float(d[0]) if single else d


def _ellipsoid_shadow_cosh(D: Ellipsoid, src, src_on_boundary, y, xi):
    """cosh of the distance from ``y`` to the ray (or line) from ``src`` toward ``xi``."""
    S = _to_ball_homogeneous(D, src)
    P = _to_ball_homogeneous(D, y)
    Xi = _to_ball_homogeneous(D, xi)
    if src_on_boundary:
        H = S
    else:
        s = D.exit_param(np.broadcast_to(src, xi.shape), np.atleast_2d(src) - xi)
        back = np.atleast_2d(src) + s[:, None] * (np.atleast_2d(src) - xi)
        H = _to_ball_homogeneous(D, back)
    a = _lorentz(P, Xi)
    b = _lorentz(P, H)
    qP = _lorentz(P, P)
    line = np.sqrt(2.0 * a * b / (_lorentz(Xi, H) * qP))
    if src_on_boundary:
        return line
    c = _lorentz(S, Xi)
    e = _lorentz(S, H)
    to_src = _lorentz(P, S) / np.sqrt(qP * _lorentz(S, S))
    return np.where(b * c >= e * a, line, to_src)


class Shadow:
    """Closed shadow ``O_r(x, y)``: boundary points whose ray from ``x`` meets ``B(y, r)``.

    For a boundary source ``x`` the bi-infinite chord ``(x xi)`` is used.
    """

    def __init__(self, D: ConvexDomain, x, y, r: float):
        if r <= 0:
            raise InvalidGeometry("shadow radius must be positive")
        self.domain = D
        self.x = as_chart(x)
        self.y = as_chart(y)
        if np.array_equal(self.x, self.y):
            raise InvalidGeometry("shadow source and target coincide")
        self.r = float(r)
        self.source_on_boundary = not bool(D.contains(self.x))

    def distances(self, xi, fast: bool = True) -> np.ndarray:
        xi = np.atleast_2d(np.asarray(xi, float))
        D = self.domain
        if fast and isinstance(D, Ellipsoid):
            ch = _ellipsoid_shadow_cosh(D, self.x, self.source_on_boundary, self.y, xi)
            return np.arccosh(np.maximum(ch, 1.0))
        k = xi.shape[0]
        if self.source_on_boundary:
            chords = ChordBatch.from_endpoints(D, np.broadcast_to(self.x, xi.shape), xi)
            tmin = None
        else:
            chords = ChordBatch.toward_boundary(D, np.broadcast_to(self.x, xi.shape), xi)
            tmin = 0.0
        vals, _ = distance_to_chords(D, np.broadcast_to(self.y, (k, D.dim)), chords, tmin)
        return vals

    def contains(self, xi, fast: bool = True):
        d = self.distances(xi, fast)
        out = d <= self.r
        return bool(out[0]) if np.ndim(xi) == 1 else out


def shadow_contains(S: Shadow, xi) -> bool:
    return S.contains(xi)


def boundary_projection(D: ConvexDomain, x, p) -> np.ndarray:
    """Boundary points hit by the rays from ``x`` through the points ``p``."""
    p = np.atleast_2d(np.asarray(p, float))
    x = np.broadcast_to(np.asarray(x, float), p.shape)
    v = p - x
    return x + D.exit_param(x, v)[:, None] * v


# -- convexity of distance -----------------------------------------------------------


def crampon_slack(D: ConvexDomain, G1: GeodesicChord, G2: GeodesicChord, T: float,
                  speeds=(1.0, 1.0), n_grid: int = 51) -> float:
    """``min_t [d(l1(0), l2(0)) + d(l1(T), l2(T)) - d(l1(t), l2(t))]`` over a grid."""
    if T <= 0:
        raise InvalidGeometry("T must be positive")
    ts = np.linspace(0.0, T, n_grid)
    b1 = ChordBatch(D, np.repeat(G1.batch.a, n_grid, 0), np.repeat(G1.batch.b, n_grid, 0),
                    np.repeat(G1.batch.ell0, n_grid))
    b2 = ChordBatch(D, np.repeat(G2.batch.a, n_grid, 0), np.repeat(G2.batch.b, n_grid, 0),
                    np.repeat(G2.batch.ell0, n_grid))
    x = b1.points_at(speeds[0] * ts)
    y = b2.points_at(speeds[1] * ts)
    d = _dist_core(D, *x, *y)
    return float(np.min(d[0] + d[-1] - d))


def crampon_gap(D: ConvexDomain, G1: GeodesicChord, G2: GeodesicChord, T: float,
                speeds=(1.0, 1.0), tol: float = 1e-9) -> bool:
    return crampon_slack(D, G1, G2, T, speeds) >= -tol
