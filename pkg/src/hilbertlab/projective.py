"""Projective primitives: points, maps up to scale, spectra, cross-ratios.

Points live in RP^n with the affine chart fixed as ``x_{n+1} = 1``.  Most
functions accept either a :class:`ProjPoint` or a plain array of chart
coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DegenerateChord, InvalidGeometry, InvalidMap, NumericalFailure

EPS = np.finfo(float).eps
DEDUP_GRID = 1e-9
# entries below this (relative to unit Frobenius norm) never decide the sign
_SIGN_FLOOR = 1e-8
_COLLINEAR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProjPoint:
    """A point of RP^n stored by homogeneous coordinates."""

    coords: np.ndarray
    # optional exact representation ``anchor + offset`` (chart) with the
    # anchor on a domain boundary; used for points too close to the boundary
    # to be resolved by their chart coordinates alone
    anchor: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).copy()
        if c.ndim != 1 or not np.any(c):
            raise InvalidGeometry("homogeneous coordinates must be a nonzero vector")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        if (self.anchor is None) != (self.offset is None):
            raise InvalidGeometry("anchor and offset must be given together")

    @classmethod
    def from_chart(cls, chart) -> "ProjPoint":
        chart = np.asarray(chart, dtype=float)
        return cls(np.append(chart, 1.0))

    @classmethod
    def anchored(cls, anchor, offset) -> "ProjPoint":
        """The chart point ``anchor + offset`` with ``anchor`` on the boundary."""
        a = np.array(anchor, dtype=float)
        o = np.array(offset, dtype=float)
        return cls(np.append(a + o, 1.0), anchor=a, offset=o)

    @property
    def is_anchored(self) -> bool:
        return self.anchor is not None

    @property
    def dim(self) -> int:
        return self.coords.size - 1

    @property
    def in_chart(self) -> bool:
        return self.coords[-1] != 0.0

    @property
    def chart(self) -> np.ndarray:
        if not self.in_chart:
            raise InvalidGeometry("point lies on the hyperplane at infinity")
        return self.coords[:-1] / self.coords[-1]

    def normalized(self) -> "ProjPoint":
        """Representative with last coordinate 1 if possible, else unit norm."""
        c = self.coords
        if c[-1] != 0.0:
            if c[-1] == 1.0:
                return self
            return ProjPoint(c / c[-1])
        u = c / np.linalg.norm(c)
        nz = np.flatnonzero(np.abs(u) > _SIGN_FLOOR)
        if nz.size and u[nz[0]] < 0:
            u = -u
        if np.array_equal(u, c):
            return self
        return ProjPoint(u)

    def same_as(self, other: "ProjPoint", tol: float = 1e-9) -> bool:
        a = self.coords / np.linalg.norm(self.coords)
        b = other.coords / np.linalg.norm(other.coords)
        return min(np.linalg.norm(a - b), np.linalg.norm(a + b)) <= tol

    def __repr__(self):
        if self.in_chart:
            return f"ProjPoint(chart={np.array2string(self.chart, precision=6)})"
        return f"ProjPoint([{':'.join(f'{v:.6g}' for v in self.coords)}])"


PointLike = Union[ProjPoint, Sequence[float], np.ndarray]


def as_chart(p: PointLike) -> np.ndarray:
    """Chart coordinates of ``p`` as a float array (copies plain arrays)."""
    if isinstance(p, ProjPoint):
        return p.chart
    return np.array(p, dtype=float)


def to_homogeneous(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.concatenate([x, np.ones(x.shape[:-1] + (1,))], axis=-1)


def from_homogeneous(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[..., :-1] / X[..., -1:]


def normalize_matrix(m: np.ndarray) -> np.ndarray:
    """Canonical PGL representative: unit Frobenius norm, first significant entry positive.

    Idempotent bit-for-bit. Works on a single matrix or a stack.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim == 2:
        return normalize_matrix(m[None])[0]
    flat = m.reshape(m.shape[0], -1)
    nrm = np.linalg.norm(flat, axis=1)
    if np.any(nrm == 0):
        raise InvalidMap("zero matrix has no projective class")
    scale = np.where(np.abs(nrm - 1.0) > 1e-14, nrm, 1.0)
    out = flat / scale[:, None]
    first = np.argmax(np.abs(out) > _SIGN_FLOOR, axis=1)
    signs = np.sign(out[np.arange(out.shape[0]), first])
    signs[signs == 0] = 1.0
    out = out * signs[:, None]
    return out.reshape(m.shape)


def dedup_keys(normalized: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Grid keys of normalized matrices.

    Returns ``(keys, near)`` where ``keys`` is an int64 array of shape (k, d)
    and ``near`` flags entries within 1e-12 of a rounding boundary; callers
    that need exact class equality must also probe the alternate rounding of
    those entries (see :func:`alternate_keys`).
    """
    flat = normalized.reshape(normalized.shape[0], int(np.prod(normalized.shape[1:]))) / DEDUP_GRID
    keys = np.rint(flat).astype(np.int64)
    frac = flat - np.floor(flat)
    near = np.abs(frac - 0.5) < 1e-3
    return keys, near


def alternate_keys(key: np.ndarray, near_row: np.ndarray, value_row: np.ndarray):
    """All roundings of one key that differ only at near-boundary entries."""
    idx = np.flatnonzero(near_row)
    if idx.size == 0:
        return []
    out = []
    for mask in range(1, 1 << idx.size):
        alt = key.copy()
        for bit, j in enumerate(idx):
            if mask >> bit & 1:
                lo = np.floor(value_row[j] / DEDUP_GRID)
                alt[j] = int(lo) if alt[j] != lo else int(lo) + 1
        out.append(alt)
    return out


def _normalize_logscale(m: np.ndarray, logdet: Optional[float],
                        sign: Optional[float] = None) -> tuple[np.ndarray, float, float]:
    """Representative scaled by a power of two (exact), plus its log|det| and det sign.

    A sign passed in (tracked through products) wins over ``slogdet``, which
    can come out as 0 for badly conditioned products.
    """
    if logdet is None or sign is None:
        s, ld = np.linalg.slogdet(m)
        if logdet is None:
            if s == 0:
                raise InvalidMap("matrix is singular")
            logdet = ld
        if sign is None:
            sign = s
    flat = m.ravel()
    first = flat[np.argmax(np.abs(flat) > _SIGN_FLOOR * np.abs(flat).max())]
    e = np.frexp(np.linalg.norm(m))[1]
    flip = 1.0 if first >= 0 else -1.0
    out = np.ldexp(m, -e) * flip
    return out, float(logdet - m.shape[0] * e * np.log(2.0)), float(sign) * flip ** m.shape[0]


@dataclass(eq=False)
class ProjectiveMap:
    """An element of PGL(n+1, R) with an exactly tracked inverse.

    ``matrix`` is rescaled by a power of two, so integer and dyadic
    products stay exact; :meth:`key` uses the canonical form.  When the map is built as a word
    in generators, ``inverse`` is accumulated from the generator inverses,
    which keeps the smallest eigenvalue modulus accurate long after a
    direct inversion would have lost it.  ``logdet`` and ``inv_logdet`` are
    log|det| of the two stored representatives; together they fix the
    scalar relating the stored inverse to the true one.  ``det_sign`` and
    ``inv_det_sign`` are their determinant signs (0 when unknown).
    """

    matrix: np.ndarray
    word: Optional[tuple] = None
    inverse: Optional[np.ndarray] = None
    check: bool = field(default=True, repr=False)
    logdet: Optional[float] = field(default=None, repr=False)
    inv_logdet: Optional[float] = field(default=None, repr=False)
    det_sign: Optional[float] = field(default=None, repr=False)
    inv_det_sign: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidMap(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidMap("matrix has non-finite entries")
        if self.check:
            cond = np.linalg.cond(m)
            if not np.isfinite(cond) or cond > 1e14:
                raise InvalidMap(f"matrix is numerically singular (cond={cond:.3g})")
        self.matrix, self.logdet, self.det_sign = _normalize_logscale(m, self.logdet, self.det_sign)
        if self.inverse is not None:
            self.inverse, self.inv_logdet, self.inv_det_sign = _normalize_logscale(
                np.asarray(self.inverse, float), self.inv_logdet, self.inv_det_sign)
        if self.word is not None:
            self.word = tuple(int(w) for w in self.word)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def inv_matrix(self) -> np.ndarray:
        if self.inverse is None:
            self.inverse, self.inv_logdet, self.inv_det_sign = _normalize_logscale(
                np.linalg.inv(self.matrix), -self.logdet, self.det_sign)
        return self.inverse

    @property
    def log_inverse_scale(self) -> float:
        """``log|k|`` where ``inv_matrix = k * matrix^{-1}``."""
        self.inv_matrix
        return (self.logdet + self.inv_logdet) / self.size

    def inv(self) -> "ProjectiveMap":
        word = None if self.word is None else tuple(-w for w in reversed(self.word))
        inv = self.inv_matrix
        return ProjectiveMap(inv, word=word, inverse=self.matrix, check=False,
                             logdet=self.inv_logdet, inv_logdet=self.logdet,
                             det_sign=self.inv_det_sign, inv_det_sign=self.det_sign)

    def __matmul__(self, other: "ProjectiveMap") -> "ProjectiveMap":
        word = None
        if self.word is not None and other.word is not None:
            word = reduce_word(self.word + other.word)
        return ProjectiveMap(
            self.matrix @ other.matrix,
            word=word,
            inverse=other.inv_matrix @ self.inv_matrix,
            check=False,
            logdet=self.logdet + other.logdet,
            inv_logdet=self.inv_logdet + other.inv_logdet,
            det_sign=self.det_sign * other.det_sign,
            inv_det_sign=self.inv_det_sign * other.inv_det_sign,
        )

    def power(self, n: int) -> "ProjectiveMap":
        if n < 0:
            return self.inv().power(-n)
        result = ProjectiveMap(np.eye(self.size), inverse=np.eye(self.size), check=False)
        base = ProjectiveMap(self.matrix, inverse=self.inv_matrix, check=False,
                             logdet=self.logdet, inv_logdet=self.inv_logdet,
                             det_sign=self.det_sign, inv_det_sign=self.inv_det_sign)
        k = n
        while k:
            if k & 1:
                result = result @ base
            k >>= 1
            if k:
                base = base @ base
        if self.word is not None:
            result.word = reduce_word(self.word * n)
        return result

    def conj(self, h: "ProjectiveMap") -> "ProjectiveMap":
        """``h g h^{-1}``."""
        return h @ self @ h.inv()

    def apply(self, points) -> np.ndarray:
        """Act on chart points (array of shape (..., n))."""
        return apply_matrix(self.matrix, points)

    def apply_point(self, p: ProjPoint) -> ProjPoint:
        return ProjPoint(self.matrix @ p.coords)

    @property
    def kappa(self) -> float:
        """``||g|| * ||g^{-1}||`` in the operator 2-norm (scale invariant)."""
        return float(np.linalg.norm(self.matrix, 2) * np.linalg.norm(self.inv_matrix, 2)
                     * np.exp(-self.log_inverse_scale))

    def key(self) -> bytes:
        keys, _ = dedup_keys(normalize_matrix(self.matrix)[None])
        return keys[0].tobytes()


def apply_matrix(m: np.ndarray, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return from_homogeneous(to_homogeneous(pts) @ m.T)


def reduce_word(word) -> tuple:
    out: list[int] = []
    for w in word:
        if out and out[-1] == -w:
            out.pop()
        else:
            out.append(int(w))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class EigenSummary:
    moduli: np.ndarray
    top_is_simple_real: bool
    attracting_point: Optional[ProjPoint]
    repelling_point: Optional[ProjPoint]
    top_gap: float
    cluster_tol: float


def cluster_tolerance(size: int) -> float:
    """Relative modulus spread produced by rounding inside a Jordan block of ``size``."""
    return max(1e-9, 10.0 * EPS ** (1.0 / size))


def _cluster_log_moduli(logs: np.ndarray, tol: float) -> np.ndarray:
    """Replace each run of nearly equal log-moduli by its mean (sorted input)."""
    out = logs.copy()
    start = 0
    for i in range(1, logs.size + 1):
        if i == logs.size or logs[i - 1] - logs[i] > tol:
            out[start:i] = logs[start:i].mean()
            start = i
    return out


def _real_vector(v: np.ndarray) -> np.ndarray:
    # a complex eigenvector of a real eigenvalue is a complex multiple of a real one
    j = np.argmax(np.abs(v))
    w = v / v[j]
    return np.real(w)


def _dominant_modulus_power(m: np.ndarray, iters: int = 2000) -> float:
    rng = np.random.default_rng(0)
    v = rng.standard_normal(m.shape[0])
    log_scale = 0.0
    prev = None
    for k in range(iters):
        v = m @ v
        nrm = np.linalg.norm(v)
        if nrm == 0:
            return 0.0
        v /= nrm
        log_scale += np.log(nrm)
        est = log_scale / (k + 1)
        if prev is not None and abs(est - prev) < 1e-13 and k > 50:
            break
        prev = est
    return float(np.exp(log_scale / (k + 1)))


def _eig(m: np.ndarray):
    try:
        return np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigen-solver failed: {exc}") from exc


def eigen_summary(g: Union[ProjectiveMap, np.ndarray]) -> EigenSummary:
    """Sorted eigenvalue moduli plus attracting/repelling fixed points.

    Moduli are those of the representative with ``|det| = 1``.
    Moduli that agree to within the Jordan-block rounding scale are merged
    to their geometric mean, so the product of moduli is preserved and a
    unipotent matrix reports all moduli equal.
    """
    if not isinstance(g, ProjectiveMap):
        g = ProjectiveMap(np.asarray(g, float))
    m = g.matrix
    vals, vecs = _eig(m)
    mods = np.abs(vals)
    order = np.argsort(-mods, kind="stable")
    vals, vecs, mods = vals[order], vecs[:, order], mods[order]
    if np.any(mods == 0):
        raise NumericalFailure("singular matrix in eigen_summary")
    tol = cluster_tolerance(m.shape[0])
    logs = _cluster_log_moduli(np.log(mods), tol)
    # report the unimodular representative so the moduli are scale free
    moduli = np.exp(logs - g.logdet / m.shape[0])
    size = m.shape[0]

    def simple_real(i_ext: int, i_next: int) -> bool:
        if logs[i_ext] == logs[i_next]:
            return False
        return abs(vals[i_ext].imag) <= 1e-12 * mods[i_ext]

    top = simple_real(0, 1) if size > 1 else False
    bottom = simple_real(size - 1, size - 2) if size > 1 else False
    attracting = ProjPoint(_real_vector(vecs[:, 0])).normalized() if top else None
    repelling = ProjPoint(_real_vector(vecs[:, -1])).normalized() if bottom else None
    gap = float(np.expm1(logs[0] - logs[1])) if size > 1 else 0.0
    return EigenSummary(moduli, bool(top), attracting, repelling, gap, float(tol))


def top_log_modulus(m: np.ndarray) -> float:
    """Log of the largest eigenvalue modulus, averaged over its rounding cluster."""
    try:
        vals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError:
        return float(np.log(_dominant_modulus_power(m)))
    with np.errstate(divide="ignore"):  # underflowed bottom eigenvalues do not matter here
        logs = np.sort(np.log(np.abs(vals)))[::-1]
    tol = cluster_tolerance(m.shape[0])
    logs = _cluster_log_moduli(logs, tol)
    return float(logs[0])


def cross_ratio(a: PointLike, x: PointLike, y: PointLike, b: PointLike) -> float:
    """``|ay| |bx| / (|ax| |by|)`` for four collinear chart points in order a, x, y, b."""
    a, x, y, b = (as_chart(p) for p in (a, x, y, b))
    span = b - a
    length = np.linalg.norm(span)
    if length == 0:
        raise DegenerateChord("chord endpoints coincide")
    u = span / length
    for p in (x, y):
        r = p - a
        resid = r - (r @ u) * u
        if np.linalg.norm(resid) > _COLLINEAR_TOL * max(length, 1.0):
            raise InvalidGeometry("points are not collinear")
    ax = np.linalg.norm(x - a)
    by = np.linalg.norm(b - y)
    if ax == 0 or by == 0:
        raise DegenerateChord("interior point coincides with a chord endpoint")
    return float(np.linalg.norm(y - a) * np.linalg.norm(b - x) / (ax * by))


# -- representations -------------------------------------------------------------


def sym_square(m2) -> np.ndarray:
    """SL(2,R) -> SO(2,1): action ``S -> g S g^T`` on ``S = [[t+x, y], [y, t-x]]``.

    Coordinates are ordered ``(x, y, t)`` so the invariant cone is
    ``t^2 = x^2 + y^2`` and the unit disk is the projectivized interior.
    """
    g = np.asarray(m2, dtype=float)
    if g.shape != (2, 2):
        raise InvalidMap("symmetric square needs a 2x2 matrix")

    def to_sym(v):
        x, y, t = v
        return np.array([[t + x, y], [y, t - x]])

    def from_sym(S):
        return np.array([(S[0, 0] - S[1, 1]) / 2, (S[0, 1] + S[1, 0]) / 2, (S[0, 0] + S[1, 1]) / 2])

    cols = [from_sym(g @ to_sym(e) @ g.T) for e in np.eye(3)]
    return np.column_stack(cols)


def sl2c_to_so31(m2) -> np.ndarray:
    """SL(2,C) -> SO(3,1): action ``H -> g H g^*`` on ``H = [[t+z, x+iy], [x-iy, t-z]]``.

    Coordinates are ordered ``(x, y, z, t)``.
    """
    g = np.asarray(m2, dtype=complex)
    if g.shape != (2, 2):
        raise InvalidMap("expected a 2x2 complex matrix")

    def to_herm(v):
        x, y, z, t = v
        return np.array([[t + z, x + 1j * y], [x - 1j * y, t - z]])

    def from_herm(H):
        return np.real(np.array([(H[0, 1] + H[1, 0]) / 2, (H[0, 1] - H[1, 0]) / 2j,
                                 (H[0, 0] - H[1, 1]) / 2, (H[0, 0] + H[1, 1]) / 2]))

    cols = [from_herm(g @ to_herm(e) @ g.conj().T) for e in np.eye(4)]
    return np.column_stack(cols)


def rotation_block(n: int, theta: float, i: int = 0, j: int = 1) -> np.ndarray:
    """Homogeneous rotation by ``theta`` in the chart plane ``(x_i, x_j)``."""
    M = np.eye(n + 1)
    c, s = np.cos(theta), np.sin(theta)
    M[i, i], M[i, j], M[j, i], M[j, j] = c, -s, s, c
    return M
