"""Patterson-Sullivan constructions and the counting experiments built on them."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import linregress

from .domains import ConvexDomain
from .errors import DegenerateChord, InsufficientData, InvalidGeometry, OutsideDomain, SubcriticalParameter
from .geometry import (
    GeodesicChord,
    Shadow,
    boundary_projection,
    busemann,
    busemann_batch,
    gromov_product,
    hilbert_distance,
)
from .groups import GroupScenario, OrbitBall, orbit_ball, primitive_conjugacy_classes
from .projective import ProjPoint, ProjectiveMap, apply_matrix, as_chart


def _pmap(fn, items: list, threads: int) -> list:
    """Order-preserving map, optionally on a thread pool."""
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _chunks(n: int, size: int) -> list:
    return [(a, min(a + size, n)) for a in range(0, n, size)]


# -- measures ----------------------------------------------------------------------


@dataclass(eq=False)
class AtomicMeasure:
    """Finite sum of weighted Dirac masses at interior points."""

    domain: ConvexDomain
    points: np.ndarray
    weights: np.ndarray
    label: str = "mu"
    base: Optional[np.ndarray] = None
    interior: Optional[np.ndarray] = None  # atoms well inside the enumerated ball
    index: Optional[np.ndarray] = None  # orbit-ball row of each atom

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, float))
        self.weights = np.asarray(self.weights, float).ravel()
        if self.points.shape[0] != self.weights.size:
            raise InvalidGeometry("one weight per atom is required")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise InvalidGeometry("atom weights must be positive and finite")

    def __len__(self):
        return self.weights.size

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    @property
    def atoms(self) -> list:
        return [(ProjPoint.from_chart(p), float(w)) for p, w in zip(self.points, self.weights)]

    def mass(self, mask) -> float:
        return math.fsum(self.weights[np.asarray(mask, bool)])

    def directions(self, source=None) -> np.ndarray:
        """Boundary points of the rays from ``source`` (default: the base point) through the atoms.

        Rows for atoms sitting at ``source`` are NaN.
        """
        src = self.base if source is None else as_chart(source)
        out = np.full(self.points.shape, np.nan)
        away = np.any(self.points != src, axis=1)
        out[away] = boundary_projection(self.domain, src, self.points[away])
        return out

    def pushforward(self, g: ProjectiveMap) -> "AtomicMeasure":
        base = None if self.base is None else g.apply(self.base)
        return AtomicMeasure(self.domain, g.apply(self.points), self.weights.copy(),
                             f"{g.word or 'g'}_*{self.label}", base, self.interior, None)


def match_atoms(D: ConvexDomain, P: np.ndarray, Q: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """For each row of ``P`` the row of ``Q`` at Hilbert distance below ``tol``, or -1."""
    P = np.atleast_2d(P)
    Q = np.atleast_2d(Q)
    k = min(4, Q.shape[0])
    _, cand = cKDTree(Q).query(P, k=k)
    cand = cand.reshape(P.shape[0], k)
    best = np.full(P.shape[0], -1)
    bestd = np.full(P.shape[0], np.inf)
    for j in range(k):
        d = hilbert_distance(D, P, Q[cand[:, j]])
        better = d < bestd
        best[better] = cand[better, j]
        bestd[better] = d[better]
    best[bestd >= tol] = -1
    return best


# -- Poincare series and critical exponent ---------------------------------------------


@dataclass
class PoincareSeries:
    s: float
    value: float
    shell_edges: np.ndarray  # shell k is [edges[k], edges[k] + 1)
    shell_sums: np.ndarray
    tail_slope: float  # log-slope of the last complete shells; < 0 suggests convergence
    tail_stderr: float

    @property
    def diverging(self) -> bool:
        return self.tail_slope >= 0


def _shell_sums(d: np.ndarray, s: float, radius: float):
    n = int(math.floor(radius))
    k = np.floor(d).astype(np.int64)
    sel = k < n
    sums = np.bincount(k[sel], weights=np.exp(-s * d[sel]), minlength=n)
    return np.arange(n, dtype=float), sums


def _slope_fit(r, y):
    """Least-squares slope with an error bar that includes lack of fit.

    Sparse orbits make ``log N`` step-like; the largest residual spread over
    the window bounds the slope change such steps can cause.
    """
    fit = linregress(r, y)
    resid = y - (fit.intercept + fit.slope * r)
    return float(fit.slope), float(fit.stderr + 2.0 * np.abs(resid).max() / (r[-1] - r[0]))


def _tail_fit(edges, sums, window: int = 6):
    ok = sums > 0
    e, v = edges[ok][-window:], sums[ok][-window:]
    if e.size < 3:
        return np.nan, np.inf
    return _slope_fit(e, np.log(v))


def poincare_series(S: GroupScenario, B: OrbitBall, s: float, window: int = 6) -> PoincareSeries:
    """Partial sum of ``exp(-s d(o, gamma o))`` over the ball, with per-shell tail diagnostic."""
    if s < 0:
        raise InvalidGeometry("s must be non-negative")
    value = math.fsum(np.exp(-s * B.distances))
    edges, sums = _shell_sums(B.distances, s, B.radius)
    slope, err = _tail_fit(edges, sums, window)
    return PoincareSeries(float(s), value, edges, sums, slope, err)


@dataclass
class CriticalExponentEstimate:
    delta_hat: float
    fit_stderr: float
    radii_used: np.ndarray
    counts_used: np.ndarray
    method: str = "log-count slope"
    bracket: tuple = (np.nan, np.nan)  # Poincare divergence bracket
    bracket_error: float = np.inf
    ball_size: int = 0

    @property
    def bracket_mid(self) -> float:
        return 0.5 * (self.bracket[0] + self.bracket[1])

    @property
    def consistent(self) -> bool:
        """Slope and Poincare bracket agree within their combined errors."""
        return abs(self.delta_hat - self.bracket_mid) <= self.fit_stderr + self.bracket_error


def poincare_bracket(B: OrbitBall, s_max: float = 4.0, step: float = 0.005, window: int = 6):
    """Grid interval where the shell-sum slope changes sign, and an error bar for it."""
    grid = np.arange(0.0, s_max + step / 2, step)
    edges, _ = _shell_sums(B.distances, 0.0, B.radius)
    slopes = []
    for s in grid:
        _, sums = _shell_sums(B.distances, s, B.radius)
        slopes.append(_tail_fit(edges, sums, window))
    sl = np.array([v[0] for v in slopes])
    if not np.all(np.isfinite(sl)):
        raise InsufficientData("too few non-empty shells for a Poincare bracket")
    neg = np.flatnonzero(sl < 0)
    if neg.size == 0 or neg[0] == 0:
        return (0.0, 0.0) if neg.size else (s_max, np.inf), np.inf
    i = neg[0]
    lo, hi = float(grid[i - 1]), float(grid[i])
    err = 0.5 * (hi - lo) + max(slopes[i - 1][1], slopes[i][1])
    return (lo, hi), err


def critical_exponent(S: GroupScenario, radius: float = 10.0, ball: Optional[OrbitBall] = None,
                      window: int = 6, threads: int = 1) -> CriticalExponentEstimate:
    """Slope of ``log N(r)`` over the top unit radii, cross-checked by the Poincare bracket."""
    B = ball if ball is not None else orbit_ball(S, radius, threads=threads)
    R = int(math.floor(B.radius + 1e-12))
    if R < 8 and ball is None:
        raise InsufficientData("critical exponent needs an orbit ball of radius at least 8")
    radii = np.arange(max(1, R - window + 1), R + 1, dtype=float)
    counts = B.count_within(radii)
    ok = counts > 1
    radii, counts = radii[ok], counts[ok]
    if radii.size < 4:
        raise InsufficientData(f"only {radii.size} usable radii (need 4)")
    slope, err = _slope_fit(radii, np.log(counts))
    bracket, berr = poincare_bracket(B, window=window)
    return CriticalExponentEstimate(max(0.0, slope), err, radii, counts,
                                    "log-count slope", bracket, berr, len(B))


# -- conformal densities ---------------------------------------------------------------


def _orbit_distances(S: GroupScenario, B: OrbitBall, x) -> np.ndarray:
    # from the basepoint the matrix-exact ball distances beat the chart points
    if np.array_equal(x, S.basepoint):
        return B.distances
    return hilbert_distance(S.domain, B.points, np.broadcast_to(x, B.points.shape))


def ps_density(S: GroupScenario, B: OrbitBall, x, s: float, delta_hat: Optional[float] = None,
               margin: float = 2.0) -> AtomicMeasure:
    """``mu_{x,s}``: atoms at the orbit points with weights ``exp(-s d(gamma o, x))``.

    Weights are divided by the basepoint series ``sum exp(-s d(gamma o, o))``,
    so ``mu_{o,s}`` has mass one and the family shares one normalization.
    """
    D = S.domain
    x = as_chart(x)
    if not D.contains(x):
        raise OutsideDomain("ps_density needs an interior point x")
    if delta_hat is None:
        delta_hat = critical_exponent(S, ball=B).delta_hat
    if s <= delta_hat:
        raise SubcriticalParameter(f"s = {s:g} is not above the critical exponent estimate {delta_hat:g}")
    norm = math.fsum(np.exp(-s * B.distances))
    w = np.exp(-s * _orbit_distances(S, B, x)) / norm
    interior = B.distances < B.radius - margin
    return AtomicMeasure(D, B.points.copy(), w, f"mu_x,s={s:g}", x, interior, np.arange(len(B)))


def conformality_check(S: GroupScenario, B: OrbitBall, x, x2, s: float, delta_hat: float,
                       n_far: int = 20) -> dict:
    """Weight ratios of ``mu_{x2,s}`` to ``mu_{x,s}``: exact identity and far-atom Busemann limit."""
    mu1 = ps_density(S, B, x, s, delta_hat)
    mu2 = ps_density(S, B, x2, s, delta_hat)
    D = S.domain
    x, x2 = as_chart(x), as_chart(x2)
    ratio = mu2.weights / mu1.weights
    d1 = _orbit_distances(S, B, x)
    d2 = _orbit_distances(S, B, x2)
    exact = np.exp(-s * (d2 - d1))
    far = np.argsort(-B.distances, kind="stable")[:n_far]
    xi = boundary_projection(D, S.basepoint, B.points[far])
    beta, _ = busemann_batch(D, xi, x2, x)
    limit = np.exp(-s * beta)
    return {
        "exact_rel_err": float(np.max(np.abs(ratio / exact - 1.0))),
        "far_rel_err": float(np.max(np.abs(ratio[far] / limit - 1.0))),
        "far_distances": B.distances[far],
    }


def equivariance_check(S: GroupScenario, B: OrbitBall, x, s: float, delta_hat: float,
                       generator: int = 0, match_tol: float = 1e-6) -> dict:
    """Compare ``g_* mu_{x,s}`` with ``mu_{gx,s}`` on atoms present in both."""
    g = S.gens[generator]
    x = as_chart(x)
    mu = ps_density(S, B, x, s, delta_hat)
    gx = g.apply(x)
    mug = ps_density(S, B, gx, s, delta_hat)
    img = apply_matrix(g.matrix, B.points)
    inside = S.domain.contains(img)
    rows = np.flatnonzero(inside)
    idx = np.full(len(B), -1)
    idx[rows] = match_atoms(S.domain, img[rows], B.points, match_tol)
    ok = np.flatnonzero(idx >= 0)
    if ok.size == 0:
        raise InsufficientData("no atoms survive the push-forward")
    rel = np.abs(mu.weights[ok] / mug.weights[idx[ok]] - 1.0)
    return {"matched": int(ok.size), "max_rel_err": float(rel.max()), "pairs": (ok, idx[ok])}


# -- shadow lemma ------------------------------------------------------------------------


@dataclass
class ShadowAudit:
    r: float
    band: tuple
    distances: np.ndarray
    masses: np.ndarray
    normalized: np.ndarray  # mass * exp(delta_hat * d)
    ratio: float
    ratio_alt: float  # same statistic on the alternative band
    bound: float
    stable: bool
    passed: bool

    @property
    def min(self) -> float:
        return float(self.normalized.min())

    @property
    def max(self) -> float:
        return float(self.normalized.max())


def shadow_masses(mu: AtomicMeasure, targets: np.ndarray, r: float, threads: int = 1,
                  chunk: int = 64, boundary_only: bool = True) -> np.ndarray:
    """``mu(O_r(x, y))`` for every target ``y``, atoms counted through their boundary directions.

    By default only the boundary-proxy atoms (near the edge of the ball) are
    used: they stand in for the limit measure, while a near atom would put its
    weight on the single boundary point its ray happens to hit.
    """
    D = mu.domain
    x = mu.base
    keep = np.any(mu.points != x, axis=1)
    if boundary_only and mu.interior is not None:
        keep &= ~mu.interior
    dirs = mu.directions()[keep]
    w = mu.weights[keep]
    targets = np.atleast_2d(targets)

    def work(span):
        a, b = span
        out = []
        for y in targets[a:b]:
            inside = Shadow(D, x, y, r).distances(dirs) <= r
            out.append(math.fsum(w[inside]))
        return out

    parts = _pmap(work, _chunks(targets.shape[0], chunk), threads)
    return np.array([v for p in parts for v in p])


def shadow_lemma_audit(S: GroupScenario, B: OrbitBall, mu: AtomicMeasure, r: float, delta_hat: float,
                       band: Optional[tuple] = None, bound: float = 1e3, threads: int = 1) -> ShadowAudit:
    """``mu(O_r(x, gamma x)) * exp(delta_hat d(x, gamma x))`` over a distance band."""
    if r <= 0:
        raise InvalidGeometry("shadow radius must be positive")
    lo, hi = band if band is not None else (4.0, B.radius - 2.0)
    x = mu.base
    if np.array_equal(x, S.basepoint):
        gx, d = B.points, B.distances
    else:
        gx = np.array([apply_matrix(m, x) for m in B.matrices])
        d = hilbert_distance(S.domain, np.broadcast_to(x, gx.shape), gx)
    sel = np.flatnonzero((d >= lo) & (d <= hi))
    if sel.size == 0:
        raise InsufficientData(f"no orbit points in the band [{lo:g}, {hi:g}]")
    m = shadow_masses(mu, gx[sel], r, threads)
    norm = m * np.exp(delta_hat * d[sel])
    pos = norm > 0
    ratio = float(norm.max() / norm[pos].min()) if pos.all() else np.inf
    alt = d[sel] <= hi - 1.0
    na = norm[alt]
    ratio_alt = float(na.max() / na.min()) if na.size and np.all(na > 0) else np.inf
    stable = bool(np.isfinite(ratio_alt) and max(ratio, ratio_alt) / min(ratio, ratio_alt) < 2.0)
    return ShadowAudit(float(r), (lo, hi), d[sel], m, norm, ratio, ratio_alt, bound, stable,
                       bool(ratio <= bound and stable))


# -- Hopf coordinates and the Sullivan density ---------------------------------------------


@dataclass(eq=False)
class HopfVector:
    """Unit tangent vector as (backward endpoint, forward endpoint, time)."""

    xi_minus: np.ndarray
    eta_plus: np.ndarray
    t: float
    basepoint: np.ndarray

    def __post_init__(self):
        self.xi_minus = as_chart(self.xi_minus)
        self.eta_plus = as_chart(self.eta_plus)
        self.basepoint = as_chart(self.basepoint)
        self.t = float(self.t)

    def chord(self, D: ConvexDomain) -> GeodesicChord:
        if np.linalg.norm(self.xi_minus - self.eta_plus) <= 1e-9 * D.scale:
            raise DegenerateChord("Hopf endpoints coincide")
        if not D.contains(0.5 * (self.xi_minus + self.eta_plus)):
            raise DegenerateChord("the chord between the endpoints does not meet the domain")
        return GeodesicChord.from_endpoints(D, self.xi_minus, self.eta_plus)

    def footpoint(self, D: ConvexDomain) -> ProjPoint:
        """The point ``p`` of the chord with ``beta_eta(o, p) = t``."""
        G = self.chord(D)
        shift = busemann(D, self.eta_plus, self.basepoint, G.origin)
        return G.point_at(self.t - shift)

    def flip(self, D: ConvexDomain) -> "HopfVector":
        """Reverse the orientation, keeping the footpoint."""
        gp = gromov_product(D, self.basepoint, self.xi_minus, self.eta_plus)
        return HopfVector(self.eta_plus, self.xi_minus, 2.0 * gp - self.t, self.basepoint)


def hopf_coordinates(D: ConvexDomain, p, v, o) -> HopfVector:
    """Hopf coordinates of the unit tangent vector at ``p`` pointing along ``v``."""
    p = as_chart(p)
    v = np.asarray(v, float)
    if not D.contains(p):
        raise OutsideDomain("footpoint must be interior")
    eta = D.ray_boundary(p, v)
    xi = D.ray_boundary(p, -v)
    return HopfVector(xi, eta, busemann(D, eta, o, p), o)


def sullivan_density(mu: AtomicMeasure, v: HopfVector, delta: float,
                     weight_xi: float = 1.0, weight_eta: float = 1.0) -> float:
    """``exp(2 delta <xi, eta>_x) * w(xi) * w(eta)`` with ``x`` the base point of ``mu``."""
    if delta <= 0:
        raise InvalidGeometry("delta must be positive")
    D = mu.domain
    v.chord(D)
    gp = gromov_product(D, mu.base, v.xi_minus, v.eta_plus)
    return float(np.exp(2.0 * delta * gp) * weight_xi * weight_eta)


def conformal_factor(D: ConvexDomain, xi, x, y, delta: float) -> float:
    """``d mu_x / d mu_y (xi) = exp(-delta beta_xi(x, y))``."""
    return float(np.exp(-delta * busemann(D, xi, x, y)))


# -- counting experiments -----------------------------------------------------------------


@dataclass
class OrbitCountTable:
    radii: np.ndarray
    counts: np.ndarray
    normalized: np.ndarray  # N(t) exp(-delta_hat t)
    delta_hat: float
    plateau: float
    drift: float
    drift_bound: float
    passed: bool
    ball_size: int = 0


def orbit_counting_experiment(S: GroupScenario, x=None, y=None, radii: Sequence[float] = (8, 9, 10, 11, 12),
                              delta_hat: Optional[float] = None, drift_bound: float = 0.25,
                              ball: Optional[OrbitBall] = None, threads: int = 1) -> OrbitCountTable:
    """``N(t) = #{gamma : d(x, gamma y) <= t}`` and the plateau of ``N(t) exp(-delta_hat t)``."""
    radii = np.asarray(radii, float)
    if np.any(np.diff(radii) <= 0):
        raise InvalidGeometry("radii must be increasing")
    o = S.basepoint
    x = o if x is None else as_chart(x)
    y = o if y is None else as_chart(y)
    D = S.domain
    at_o = np.array_equal(x, o) and np.array_equal(y, o)
    extra = 0.0 if at_o else float(hilbert_distance(D, o, x) + hilbert_distance(D, o, y))
    R = float(radii[-1]) + extra
    B = ball if ball is not None and ball.radius >= R else orbit_ball(S, R, threads=threads)
    if at_o:
        counts = B.count_within(radii)
    else:
        gy = np.array([apply_matrix(m, y) for m in B.matrices])
        d = np.sort(hilbert_distance(D, np.broadcast_to(x, gy.shape), gy))
        counts = np.searchsorted(d, radii, side="right")
    if delta_hat is None:
        delta_hat = critical_exponent(S, ball=B).delta_hat
    norm = counts * np.exp(-delta_hat * radii)
    top = norm[-3:]
    plateau = float(np.mean(top))
    drift = float((top.max() - top.min()) / plateau) if plateau > 0 else np.inf
    return OrbitCountTable(radii, counts, norm, float(delta_hat), plateau, drift, drift_bound,
                           bool(drift < drift_bound), len(B))


@dataclass
class GeodesicCountTable:
    lengths: np.ndarray
    counts: np.ndarray
    normalized: np.ndarray  # #G(l) delta l exp(-delta l)
    delta_hat: float
    complete_length: float
    top_quartile: np.ndarray
    bottom_quartile: np.ndarray
    n_classes: int
    passed: bool


def geodesic_counting_experiment(S: GroupScenario, max_len: int, delta_hat: Optional[float] = None,
                                 n_grid: int = 40, delta_radius: float = 12.0, threads: int = 1,
                                 band: tuple = (0.5, 2.0)) -> GeodesicCountTable:
    """Cumulative counts of oriented primitive closed geodesics against ``e^{dl}/(dl)``."""
    C = primitive_conjugacy_classes(S, max_len, oriented=True)
    if delta_hat is None:
        delta_hat = critical_exponent(S, radius=delta_radius, threads=threads).delta_hat
    top = min(C.complete_length, float(C.lengths.max()))
    grid = np.linspace(float(C.lengths.min()), top, n_grid)
    counts = np.searchsorted(C.lengths, grid, side="right")
    norm = counts * delta_hat * grid * np.exp(-delta_hat * grid)
    q = max(1, n_grid // 4)
    tq, bq = norm[-q:], norm[:q]
    passed = bool(np.all((tq >= band[0]) & (tq <= band[1]))
                  and np.mean(np.abs(tq - 1.0)) < np.mean(np.abs(bq - 1.0)))
    return GeodesicCountTable(grid, counts, norm, float(delta_hat), float(C.complete_length), tq, bq,
                              len(C), passed)


def generator_caps(S: GroupScenario, r: float, x=None) -> list:
    """Shadows ``O_r(x, g x)`` for every letter ``g`` (generators and inverses, in letter order)."""
    x = S.basepoint if x is None else as_chart(x)
    caps = []
    for M in S.letters:
        caps.append(Shadow(S.domain, x, apply_matrix(M, x), r))
    return caps


@dataclass
class EquidistributionTable:
    radii: np.ndarray
    nu: np.ndarray  # (configs, radii, 4): nu_t for (A,B), (A',B'), (A,B'), (A',B)
    cross_ratios: np.ndarray  # (configs, radii)
    mu_cross_ratios: np.ndarray  # (configs,)
    rel_err: np.ndarray  # at the top radius
    tolerance: float
    passed: bool


def equidistribution_experiment(S: GroupScenario, x=None, y=None, boxes: Sequence = (),
                                radii: Sequence[float] = (8, 9, 10, 11, 12), delta_hat: Optional[float] = None,
                                mu_s: Optional[float] = None, tolerance: float = 0.3,
                                ball: Optional[OrbitBall] = None, threads: int = 1) -> EquidistributionTable:
    """Cross-ratios of ``nu_t(A x B)`` against the product ``mu_x(A) mu_y(B)``.

    ``boxes`` is a list of configurations ``((A, A'), (B, B'))``; the ``A`` caps
    are shadows seen from ``x`` and the ``B`` caps shadows seen from ``y``.
    """
    radii = np.asarray(radii, float)
    o = S.basepoint
    x = o if x is None else as_chart(x)
    y = o if y is None else as_chart(y)
    D = S.domain
    extra = 0.0 if (np.array_equal(x, o) and np.array_equal(y, o)) else float(
        hilbert_distance(D, o, x) + hilbert_distance(D, o, y))
    R = float(radii[-1]) + extra
    B = ball if ball is not None and ball.radius >= R else orbit_ball(S, R, threads=threads)
    if delta_hat is None:
        delta_hat = critical_exponent(S, ball=B).delta_hat
    gy = np.array([apply_matrix(m, y) for m in B.matrices])
    gix = np.array([apply_matrix(m, x) for m in B.inverses])
    d = hilbert_distance(D, np.broadcast_to(x, gy.shape), gy)
    nz = d > 0
    fwd = np.full(gy.shape, np.nan)
    bwd = np.full(gix.shape, np.nan)
    fwd[nz] = boundary_projection(D, x, gy[nz])
    bwd[nz] = boundary_projection(D, y, gix[nz])

    def hits(cap: Shadow, pts):
        out = np.zeros(len(pts), bool)
        out[nz] = cap.distances(pts[nz]) <= cap.r
        return out

    s_mu = mu_s if mu_s is not None else delta_hat * 1.02
    mu_x = ps_density(S, B, x, s_mu, delta_hat)
    mu_y = ps_density(S, B, y, s_mu, delta_hat)

    nus, crs, mucr = [], [], []
    for (A, A2), (Bc, B2) in boxes:
        fa, fa2 = hits(A, fwd), hits(A2, fwd)
        bb, bb2 = hits(Bc, bwd), hits(B2, bwd)
        combos = [(fa, bb), (fa2, bb2), (fa, bb2), (fa2, bb)]
        table = np.array([[np.count_nonzero(f & b & (d <= t)) for f, b in combos] for t in radii], float)
        if np.any(table[-1] == 0):
            raise InsufficientData("a cap pair has no orbit hits at the largest radius")
        table *= np.exp(-delta_hat * radii)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            crs.append(table[:, 0] * table[:, 1] / (table[:, 2] * table[:, 3]))
        nus.append(table)
        mA, mA2 = shadow_masses(mu_x, np.array([A.y, A2.y]), A.r)
        mB, mB2 = shadow_masses(mu_y, np.array([Bc.y, B2.y]), Bc.r)
        mucr.append((mA * mB) * (mA2 * mB2) / ((mA * mB2) * (mA2 * mB)))
    crs = np.array(crs)
    mucr = np.array(mucr)
    rel = np.abs(crs[:, -1] / mucr - 1.0)
    return EquidistributionTable(radii, np.array(nus), crs, mucr, rel, tolerance, bool(np.all(rel <= tolerance)))
