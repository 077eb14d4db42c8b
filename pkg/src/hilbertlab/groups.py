"""Discrete subgroups of Aut(Omega): orbit balls, spectra, conjugacy classes.

Letters are indexed ``0..2m-1``: letter ``2i`` is generator ``i`` and
``2i+1`` its inverse.  Words exposed to users use signed generator numbers
``+(i+1)`` / ``-(i+1)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domains import ConvexDomain, Ellipsoid
from .errors import (
    BudgetExceeded,
    InvalidGeometry,
    InvalidMap,
    NotBiproximal,
    SpectralAmbiguity,
    UnsupportedScenario,
)
from .geometry import ellipsoid_displacement, hilbert_distance
from .projective import (
    ProjectiveMap,
    alternate_keys,
    cluster_tolerance,
    dedup_keys,
    eigen_summary,
    normalize_matrix,
    top_log_modulus,
)

ELL_FLOOR = 1e-9


def letter_to_signed(j: int) -> int:
    return j // 2 + 1 if j % 2 == 0 else -(j // 2 + 1)


def signed_to_letter(s: int) -> int:
    return 2 * (s - 1) if s > 0 else 2 * (-s - 1) + 1


@dataclass
class GroupScenario:
    """Generators acting on a domain plus a basepoint and enumeration limits."""

    domain: ConvexDomain
    generators: Sequence
    basepoint: np.ndarray
    free_group: bool = False
    max_word_length: int = 64
    max_radius: float = 30.0
    prune_slack: Optional[float] = None
    budget: int = 10_000_000
    name: str = "custom"
    validate: bool = True
    gens: list = field(init=False, repr=False)

    def __post_init__(self):
        self.basepoint = np.asarray(self.basepoint, dtype=float)
        if not self.domain.contains(self.basepoint):
            raise InvalidGeometry("basepoint must lie inside the domain")
        self.gens = []
        raw = []
        for i, g in enumerate(self.generators):
            if isinstance(g, ProjectiveMap):
                raw.append((g.matrix, g.inv_matrix))
                g = ProjectiveMap(g.matrix, word=(i + 1,), inverse=g.inverse, check=True,
                                  logdet=g.logdet, inv_logdet=g.inv_logdet,
                                  det_sign=g.det_sign, inv_det_sign=g.inv_det_sign)
            else:
                m = np.asarray(g, float)
                g = ProjectiveMap(m, word=(i + 1,))
                raw.append((m, _exact_inverse(m)))
            if g.size != self.domain.dim + 1:
                raise InvalidMap(f"generator {i + 1} has size {g.size}, domain needs {self.domain.dim + 1}")
            self.gens.append(g)
        if not self.gens:
            raise InvalidMap("scenario needs at least one generator")
        if self.validate:
            self._check_preserves()
        # letters keep the raw entries up to powers of two, so products of
        # integer (or dyadic) generators stay exact
        L, Li = [], []
        for m, mi in raw:
            L += [m, mi]
            Li += [mi, m]
        L, Li = np.array(L), np.array(Li)
        ld = np.array([np.linalg.slogdet(m)[1] for m in L])
        lid = np.array([np.linalg.slogdet(m)[1] for m in Li])
        self.letters, self.letter_logdet = _normalize_stack(L, ld)
        self.letters_inv, self.letter_inv_logdet = _normalize_stack(Li, lid)
        o_h = np.append(self.basepoint, 1.0)
        imgs = self.letters @ o_h
        self.letter_disp = hilbert_distance(self.domain, np.broadcast_to(self.basepoint, (len(L), self.domain.dim)),
                                            imgs[:, :-1] / imgs[:, -1:])
        if self.prune_slack is None:
            self.prune_slack = float(self.letter_disp.max())

    @property
    def rank(self) -> int:
        return len(self.gens)

    @property
    def size(self) -> int:
        return self.domain.dim + 1

    def _check_preserves(self, n: int = 1000):
        rng = np.random.default_rng(12345)
        pts = self.domain.sample_interior(rng, n, shrink=0.999)
        for i, g in enumerate(self.gens):
            for h, label in ((g.matrix, f"generator {i + 1}"), (g.inv_matrix, f"inverse of generator {i + 1}")):
                img = pts @ h[:-1, :-1].T + h[:-1, -1]
                w = pts @ h[-1, :-1] + h[-1, -1]
                if np.any(w == 0) or np.any(np.sign(w) != np.sign(w[0])):
                    raise InvalidMap(f"{label} sends interior points to infinity")
                img = img / w[:, None]
                if np.max(self.domain.level(img)) > 1e-9:
                    raise InvalidMap(f"{label} does not preserve the domain")

    def word_matrix(self, word) -> ProjectiveMap:
        g = ProjectiveMap(np.eye(self.size), inverse=np.eye(self.size), check=False, word=())
        for s in word:
            h = self.gens[abs(s) - 1]
            g = g @ (h if s > 0 else h.inv())
        return g


CHART_HORIZON = 16.0


def _exact_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse, snapped to a dyadic grid when that makes ``m @ inv`` exactly the identity."""
    inv = np.linalg.inv(m)
    for bits in (0, 10, 20, 30):
        cand = np.ldexp(np.rint(np.ldexp(inv, bits)), -bits)
        if np.array_equal(m @ cand, np.eye(m.shape[0])):
            return cand
    return inv


# -- orbit balls --------------------------------------------------------------------


@dataclass
class OrbitBall:
    scenario: GroupScenario
    radius: float
    matrices: np.ndarray
    inverses: np.ndarray
    logdet: np.ndarray
    inv_logdet: np.ndarray
    points: np.ndarray
    distances: np.ndarray
    lengths: np.ndarray
    stats: dict
    # discovery index of each element and the search tree (parent, last letter)
    tree_index: np.ndarray = field(repr=False, default=None)
    tree_parent: np.ndarray = field(repr=False, default=None)
    tree_letter: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return self.distances.size

    def word(self, i: int) -> tuple:
        out = []
        j = int(self.tree_index[i])
        while j > 0:
            out.append(letter_to_signed(int(self.tree_letter[j])))
            j = int(self.tree_parent[j])
        return tuple(reversed(out))

    def element(self, i: int) -> ProjectiveMap:
        return ProjectiveMap(self.matrices[i], word=self.word(i), inverse=self.inverses[i], check=False,
                             logdet=float(self.logdet[i]), inv_logdet=float(self.inv_logdet[i]))

    @property
    def elements(self):
        for i in range(len(self)):
            yield self.element(i), self.points[i], float(self.distances[i])

    def count_within(self, r) -> np.ndarray:
        """``#{gamma : d(o, gamma o) <= r}`` for each entry of ``r``."""
        return np.searchsorted(self.distances, np.asarray(r, float), side="right")

    def restrict(self, r: float) -> "OrbitBall":
        k = int(self.count_within(r))
        return OrbitBall(self.scenario, r, self.matrices[:k], self.inverses[:k], self.logdet[:k],
                         self.inv_logdet[:k], self.points[:k], self.distances[:k],
                         self.lengths[:k], dict(self.stats), self.tree_index[:k], self.tree_parent,
                         self.tree_letter)

    def word_set(self) -> set:
        return {self.word(i) for i in range(len(self))}


def _normalize_stack(M, logdet):
    """Rescale each matrix by a power of two near its norm (exact in floating point)."""
    nrm = np.sqrt(np.einsum("kij,kij->k", M, M))
    e = np.frexp(nrm)[1]
    return np.ldexp(M, -e[:, None, None]), logdet - M.shape[1] * e * np.log(2.0)


def _expand_chunk(S: GroupScenario, M, Mi, ld, lid, last, o_h, cut):
    """One-letter right extensions of a frontier chunk that land within ``cut``."""
    m2 = S.letters.shape[0]
    F = M.shape[0]
    newM = np.einsum("fij,ljk->flik", M, S.letters).reshape(F * m2, S.size, S.size)
    newMi = np.einsum("lij,fjk->flik", S.letters_inv, Mi).reshape(F * m2, S.size, S.size)
    nld = (ld[:, None] + S.letter_logdet[None, :]).ravel()
    nlid = (lid[:, None] + S.letter_inv_logdet[None, :]).ravel()
    newM, nld = _normalize_stack(newM, nld)
    newMi, nlid = _normalize_stack(newMi, nlid)
    parent = np.repeat(np.arange(F), m2)
    letter = np.tile(np.arange(m2), F)
    keep = np.ones(F * m2, bool)
    if S.free_group:
        keep &= letter != (np.repeat(last, m2) ^ 1)
    img = newM @ o_h
    pts = img[:, :-1] / img[:, -1:]
    d = np.full(F * m2, np.inf)
    if isinstance(S.domain, Ellipsoid):
        # the invariant form gives d(o, gamma o) without chart round-off
        d[keep] = ellipsoid_displacement(S.domain, S.basepoint, newM[keep], nld[keep])
    else:
        keep &= S.domain.contains(pts)
        if keep.any():
            d[keep] = hilbert_distance(S.domain, np.broadcast_to(S.basepoint, (int(keep.sum()), S.domain.dim)),
                                       pts[keep])
    c = np.flatnonzero(keep & (d <= cut))
    return newM[c], newMi[c], nld[c], nlid[c], pts[c], d[c], parent[c], letter[c], F * m2


def orbit_ball(S: GroupScenario, radius: float, budget: Optional[int] = None, threads: int = 1,
               chunk: int = 20000) -> OrbitBall:
    """All ``gamma`` with ``d(o, gamma o) <= radius``, found by pruned breadth-first search.

    A word is extended only while ``d(o, gamma o) <= radius + S.prune_slack``;
    outside ellipsoids, never past ``CHART_HORIZON`` unless the radius itself
    is larger.
    Output is sorted by distance (rounded to 1e-12) and then by word in
    shortlex order, which is the breadth-first discovery order.
    """
    if radius > S.max_radius:
        raise InvalidGeometry(f"radius {radius} exceeds scenario max_radius {S.max_radius}")
    budget = S.budget if budget is None else budget
    N = S.size
    o_h = np.append(S.basepoint, 1.0)
    cut = radius + S.prune_slack
    if not isinstance(S.domain, Ellipsoid):
        # beyond CHART_HORIZON chart coordinates cannot separate points from the boundary
        cut = min(cut, max(radius, CHART_HORIZON))
    maxlen = S.max_word_length

    store = {k: [] for k in ("M", "Mi", "ld", "lid", "pts", "d", "parent", "letter", "len")}

    def push(M, Mi, ld, lid, pts, d, parent, letter, ln):
        for k, v in zip(store, (M, Mi, ld, lid, pts, d, parent, letter, ln)):
            store[k].append(v)

    push(np.eye(N)[None], np.eye(N)[None], np.zeros(1), np.zeros(1), S.basepoint[None].copy(),
         np.zeros(1), np.zeros(1, np.int64), np.full(1, -1, np.int16), np.zeros(1, np.int32))
    key0, _ = dedup_keys((np.eye(N) / np.sqrt(N))[None])
    seen = {key0[0].tobytes()}
    total = 1
    collisions = 0
    generated = 0

    fM, fMi, fld, flid = store["M"][0], store["Mi"][0], store["ld"][0], store["lid"][0]
    fidx, flast = np.zeros(1, np.int64), np.array([-2])
    depth = 0
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while fM.shape[0] and depth < maxlen:
            depth += 1
            bounds = list(range(0, fM.shape[0], chunk)) + [fM.shape[0]]
            jobs = [(fM[a:b], fMi[a:b], fld[a:b], flid[a:b], flast[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
            if pool is not None:
                parts = list(pool.map(lambda j: _expand_chunk(S, *j, o_h, cut), jobs))
            else:
                parts = [_expand_chunk(S, *j, o_h, cut) for j in jobs]
            offs = np.cumsum([0] + [b - a for a, b in zip(bounds[:-1], bounds[1:])])
            newM, newMi, nld, nlid, npts, nd = (np.concatenate([p[i] for p in parts]) for i in range(6))
            parent = np.concatenate([p[6] + offs[k] for k, p in enumerate(parts)])
            letter = np.concatenate([p[7] for p in parts])
            generated += sum(p[8] for p in parts)
            cand = np.arange(nd.size)
            keys, near = dedup_keys(normalize_matrix(newM[cand]) if cand.size else newM[cand])
            accepted = []
            for r, i in enumerate(cand):
                kb = keys[r].tobytes()
                dup = kb in seen
                if not dup and near[r].any():
                    vals = normalize_matrix(newM[i]).ravel()
                    dup = any(a.tobytes() in seen for a in alternate_keys(keys[r], near[r], vals))
                if dup:
                    if not S.free_group:
                        continue
                    # distinct reduced words with one matrix: ping-pong failure
                    collisions += 1
                seen.add(kb)
                accepted.append(i)
            acc = np.array(accepted, dtype=np.int64)
            if total + acc.size > budget:
                fr = nd[acc] if acc.size else np.array([np.inf])
                cutoff = max(0.0, float(fr.min()) - S.prune_slack)
                partial = _assemble(S, min(cutoff, radius), store, {"budget_hit": True})
                raise BudgetExceeded(f"orbit enumeration exceeded the budget of {budget} elements",
                                     partial=partial, cutoff=cutoff)
            push(newM[acc], newMi[acc], nld[acc], nlid[acc], npts[acc], nd[acc], fidx[parent[acc]],
                 letter[acc].astype(np.int16), np.full(acc.size, depth, np.int32))
            fidx = total + np.arange(acc.size, dtype=np.int64)
            total += acc.size
            fM, fMi, fld, flid = newM[acc], newMi[acc], nld[acc], nlid[acc]
            flast = letter[acc]
    finally:
        if pool is not None:
            pool.shutdown()
    stats = {"explored": int(total), "generated": int(generated), "key_collisions": int(collisions),
             "depth": int(depth), "prune_slack": float(S.prune_slack), "cut": float(cut),
             "word_limited": bool(depth >= maxlen and fM.shape[0] > 0)}
    return _assemble(S, radius, store, stats)


def _assemble(S, radius, store, stats) -> OrbitBall:
    cat = {k: np.concatenate(v) for k, v in store.items()}
    d = cat["d"]
    sel = np.flatnonzero(d <= radius)
    # lexsort: last key is primary; discovery index breaks distance ties
    order = sel[np.lexsort([sel, np.round(d[sel], 12)])]
    return OrbitBall(S, radius, cat["M"][order], cat["Mi"][order], cat["ld"][order], cat["lid"][order],
                     cat["pts"][order], d[order], cat["len"][order], stats, order, cat["parent"],
                     cat["letter"])


# -- spectra -------------------------------------------------------------------------


def _top_cluster_logs(stack: np.ndarray) -> np.ndarray:
    """Batched log of the top eigenvalue modulus averaged over its rounding cluster."""
    vals = np.linalg.eigvals(stack)
    logs = -np.sort(-np.log(np.abs(vals)), axis=1)
    tol = cluster_tolerance(stack.shape[1])
    same = np.cumprod(np.concatenate([np.ones((logs.shape[0], 1), bool),
                                      (logs[:, :-1] - logs[:, 1:]) <= tol], axis=1), axis=1).astype(bool)
    return np.sum(np.where(same, logs, 0.0), axis=1) / same.sum(axis=1)


def translation_lengths(M: np.ndarray, Minv: np.ndarray, logdet: np.ndarray, inv_logdet: np.ndarray) -> np.ndarray:
    """Batched ``1/2 log(lambda_1 / lambda_{n+1})`` using the tracked inverses."""
    N = M.shape[1]
    ell = 0.5 * (_top_cluster_logs(M) + _top_cluster_logs(Minv) - (logdet + inv_logdet) / N)
    return np.where(ell < ELL_FLOOR, 0.0, ell)


def translation_length(g) -> float:
    """``1/2 log(lambda_1 / lambda_{n+1})``; values below 1e-9 are reported as 0."""
    if not isinstance(g, ProjectiveMap):
        g = ProjectiveMap(np.asarray(g, float))
    ell = 0.5 * (top_log_modulus(g.matrix) + top_log_modulus(g.inv_matrix) - g.log_inverse_scale)
    # log kappa - 2 l measures how far the eigenbasis is from orthogonal; powers of
    # cyclically reduced words stay below ~4, long conjugates go far beyond
    if g.matrix.shape[0] == 3 and ell > 0.5 and math.log(g.kappa) - 2 * ell > 8.0:
        ell = _reciprocal_trace_length(g, ell)
    return 0.0 if ell < ELL_FLOOR else float(ell)


def _reciprocal_trace_length(g: ProjectiveMap, ell: float) -> float:
    """Exact length from traces when the characteristic polynomial is palindromic.

    Scaled to determinant one, ``tr g = tr g^-1`` means the polynomial is
    ``(x - 1)(x^2 - (t - 1) x + 1)``, so ``cosh l = |t - 1| / 2``.  Eigenvalues
    of a product ``h g h^-1`` lose about ``eps kappa(h)^2``, the traces only
    ``eps kappa(h)``.
    """
    g.inv_matrix  # makes sure the inverse and its sign exist
    s, si = g.det_sign, g.inv_det_sign
    if not s or not si:
        return ell
    t = s * np.trace(g.matrix) * np.exp(-g.logdet / 3)
    ti = si * np.trace(g.inv_matrix) * np.exp(-g.inv_logdet / 3)
    if abs(t - ti) > 1e-8 * max(1.0, abs(t)):
        return ell
    ch = 0.5 * abs(0.5 * (t + ti) - 1.0)
    return float(np.arccosh(ch)) if ch > 1 else ell


@dataclass(frozen=True)
class Classification:
    kind: str  # "elliptic" | "parabolic" | "hyperbolic"
    proximal: bool
    biproximal: bool
    rank_one: bool
    translation_length: float


def _proximal(g: ProjectiveMap):
    es = eigen_summary(g)
    if es.moduli.size < 2:
        return False, es
    log_gap = math.log(es.moduli[0] / es.moduli[1])
    tau = es.cluster_tol
    if tau <= log_gap < 10 * tau:
        raise SpectralAmbiguity(f"top spectral gap {log_gap:.3g} is within rounding reach")
    return bool(es.top_is_simple_real and log_gap >= 10 * tau), es


def _interior_fixed_point(g: ProjectiveMap, D: ConvexDomain) -> bool:
    vals = np.linalg.eigvals(g.matrix)
    N = g.size
    c_h = np.append(D.center, 1.0)
    for lam in vals:
        if abs(lam.imag) > 1e-9 * abs(lam):
            continue
        A = g.matrix - lam.real * np.eye(N)
        u, s, vt = np.linalg.svd(A)
        null = vt[s <= 1e-8 * max(s[0], 1.0)]
        if null.size == 0:
            continue
        cands = [null.T @ (null @ c_h)] + list(null) + list(-null)
        for v in cands:
            if abs(v[-1]) < 1e-12:
                continue
            # boundary fixed points of unipotents come out of eigvals with level ~ -1e-11
            x = v[:-1] / v[-1]
            if D.contains(x) and float(D.level(x)) < -1e-8:
                return True
    return False


def classify(g, D: ConvexDomain) -> Classification:
    if not isinstance(g, ProjectiveMap):
        g = ProjectiveMap(np.asarray(g, float))
    ell = translation_length(g)
    prox, es = _proximal(g)
    prox_inv, es_inv = _proximal(g.inv())
    bip = prox and prox_inv
    rank_one = False
    if bip:
        if D.strictly_convex_c1:
            rank_one = True
        else:
            try:
                flags = [D.boundary_regularity(p.chart) for p in (es.attracting_point, es_inv.attracting_point)]
                rank_one = all(f["c1"] and f["strongly_extremal"] for f in flags)
            except InvalidGeometry:
                rank_one = False
    if ell > 0:
        kind = "hyperbolic"
    elif _interior_fixed_point(g, D):
        kind = "elliptic"
    else:
        kind = "parabolic"
    return Classification(kind, prox, bip, rank_one, ell)


def axis_endpoints(g, D: Optional[ConvexDomain] = None, tol: float = 1e-8):
    """``(repelling, attracting)`` fixed points of a biproximal map."""
    if not isinstance(g, ProjectiveMap):
        g = ProjectiveMap(np.asarray(g, float))
    es, es_inv = eigen_summary(g), eigen_summary(g.inv())
    if not (es.top_is_simple_real and es_inv.top_is_simple_real):
        raise NotBiproximal("map is not biproximal")
    plus, minus = es.attracting_point, es_inv.attracting_point
    if D is not None:
        for p in (plus, minus):
            if not p.in_chart or abs(float(D.level(p.chart))) > tol:
                raise InvalidGeometry("axis endpoint is not on the domain boundary")
    return minus, plus


def kappa_distance_audit(S: GroupScenario, B: OrbitBall, radii: Optional[Sequence[float]] = None) -> dict:
    """Spread of ``e^{2 d(o, gamma o)} / kappa(gamma)`` over the ball and over sub-balls."""
    if len(B) == 0:
        raise InvalidGeometry("empty orbit ball")
    s1 = np.linalg.norm(B.matrices, ord=2, axis=(1, 2))
    s2 = np.linalg.norm(B.inverses, ord=2, axis=(1, 2))
    logk = (B.logdet + B.inv_logdet) / S.size
    log_kappa = np.log(s1) + np.log(s2) - logk
    log_ratio = 2 * B.distances - log_kappa
    if radii is None:
        radii = np.arange(max(1.0, np.floor(B.radius) - 3), np.floor(B.radius) + 1)
    spreads = []
    for r in radii:
        m = B.distances <= r
        spreads.append(float(np.exp(log_ratio[m].max() - log_ratio[m].min())))
    spread = float(np.exp(log_ratio.max() - log_ratio.min()))
    stable = bool(np.isfinite(spread) and spreads[-1] <= 2.0 * spreads[0] + 1e-12)
    return {"min": float(np.exp(log_ratio.min())), "max": float(np.exp(log_ratio.max())),
            "max_over_min": spread, "radii": list(map(float, radii)), "spread_by_radius": spreads,
            "stable": stable}


# -- conjugacy classes -----------------------------------------------------------------


@dataclass
class ConjugacyClassList:
    words: list  # canonical cyclic words (signed generator numbers)
    lengths: np.ndarray  # translation lengths
    matrices: np.ndarray
    word_lengths: np.ndarray
    primitive_only: bool = True
    oriented: bool = True
    complete_length: float = np.inf

    def __len__(self):
        return len(self.words)

    @property
    def classes(self):
        for w, m, ell in zip(self.words, self.matrices, self.lengths):
            yield w, m, float(ell)

    def representative(self, i: int) -> ProjectiveMap:
        return ProjectiveMap(self.matrices[i], word=self.words[i], check=False)


def _lyndon_reduced(k: int, max_len: int):
    """Lyndon words over letters 0..k-1 without cyclically adjacent inverse letters."""
    out = {n: [] for n in range(1, max_len + 1)}
    a = [0] * (max_len + 1)

    def gen(t, p, n):
        if t > n:
            if n % p == 0 and p == n and (n == 1 or a[n] != a[1] ^ 1):
                out[n].append(tuple(a[1 : n + 1]))
            return
        j0 = a[t - p]
        if t == 1 or j0 != a[t - 1] ^ 1:
            a[t] = j0
            gen(t + 1, p, n)
        for j in range(j0 + 1, k):
            if t > 1 and j == a[t - 1] ^ 1:
                continue
            a[t] = j
            gen(t + 1, t, n)

    for n in range(1, max_len + 1):
        a[0] = 0
        a[1:] = [0] * max_len
        # t = 1 chooses the first letter freely; p starts at 1
        for j in range(k):
            a[1] = j
            gen(2, 1, n)
    return out


def primitive_conjugacy_classes(S: GroupScenario, max_len: int, oriented: bool = True) -> ConjugacyClassList:
    """Primitive cyclically reduced classes of word length ``<= max_len`` with their lengths."""
    if not S.free_group:
        raise UnsupportedScenario("conjugacy enumeration needs a free (ping-pong) scenario")
    k = S.letters.shape[0]
    by_len = _lyndon_reduced(k, max_len)
    words, ells, mats, wl = [], [], [], []
    complete = np.inf
    for n in range(1, max_len + 1):
        W = np.array(by_len[n], dtype=np.int64).reshape(-1, n)
        if W.shape[0] == 0:
            continue
        M = S.letters[W[:, 0]]
        Mi = S.letters_inv[W[:, 0]]
        ld = S.letter_logdet[W[:, 0]].copy()
        lid = S.letter_inv_logdet[W[:, 0]].copy()
        for i in range(1, n):
            M = M @ S.letters[W[:, i]]
            Mi = S.letters_inv[W[:, i]] @ Mi
            ld += S.letter_logdet[W[:, i]]
            lid += S.letter_inv_logdet[W[:, i]]
            M, ld = _normalize_stack(M, ld)
            Mi, lid = _normalize_stack(Mi, lid)
        ell = translation_lengths(M, Mi, ld, lid)
        if n == max_len:
            complete = float(ell.min())
        for row in W:
            words.append(tuple(letter_to_signed(int(j)) for j in row))
        ells.append(ell)
        mats.append(M)
        wl.append(np.full(W.shape[0], n))
    ells = np.concatenate(ells)
    mats = np.concatenate(mats)
    wl = np.concatenate(wl)
    if not oriented:
        keep = []
        seen = set()
        for i, w in enumerate(words):
            inv = canonical_rotation(tuple(-s for s in reversed(w)))
            c = min(w, inv)
            if c not in seen:
                seen.add(c)
                keep.append(i)
        keep = np.array(keep)
        words = [words[i] for i in keep]
        ells, mats, wl = ells[keep], mats[keep], wl[keep]
    order = np.argsort(ells, kind="stable")
    return ConjugacyClassList([words[i] for i in order], ells[order], mats[order], wl[order],
                              True, oriented, complete)


def canonical_rotation(word: tuple) -> tuple:
    """Lexicographically least rotation in letter order (generator, then its inverse)."""
    lw = [signed_to_letter(s) for s in word]
    best = min(tuple(lw[i:] + lw[:i]) for i in range(len(lw)))
    return tuple(letter_to_signed(j) for j in best)


# -- length spectrum ---------------------------------------------------------------------


def nonarithmeticity_audit(lengths: Sequence[float], tol: float = 1e-6) -> dict:
    """Heuristic: approximate generator of the additive group spanned by ``lengths``.

    A real Euclidean algorithm (``fmod``) stopped at ``tol``.  Floating point
    cannot certify density; a generator below ``tol`` is only consistent with it.
    """
    vals = [float(v) for v in lengths if v > 0]
    if len(vals) < 2:
        raise InvalidGeometry("need at least two positive lengths")
    noise = 1e-12 * max(vals)

    def real_gcd(a, b):
        a, b = max(a, b), min(a, b)
        while b > tol and b > noise:
            a, b = b, math.fmod(a, b)
            # a remainder just under the divisor is the divisor up to rounding
            if a - b <= noise:
                b = 0.0
        return b if b > noise else a

    g = vals[0]
    for v in vals[1:]:
        g = real_gcd(g, v)
        if g <= tol:
            break
    return {"approx_generator": g, "dense_consistent": bool(g < tol), "heuristic": True, "tol": tol,
            "n_lengths": len(vals)}


def orbit_limit_points(S: GroupScenario, B: OrbitBall, min_distance: float) -> np.ndarray:
    """Radial boundary projections of the far orbit points: a sample of the limit set."""
    far = B.distances >= min_distance
    p = B.points[far]
    v = p - S.basepoint
    o = np.broadcast_to(S.basepoint, p.shape)
    return o + S.domain.exit_param(o, v)[:, None] * v
