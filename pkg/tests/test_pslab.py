import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hilbertlab.domains import Ellipsoid, lorentz_boost
from hilbertlab.errors import InvalidGeometry, OutsideDomain, SubcriticalParameter
from hilbertlab.geometry import rounding_floor
from hilbertlab.groups import GroupScenario, orbit_ball, primitive_conjugacy_classes
from hilbertlab.presets import group_preset, schottky_pair
from hilbertlab.projective import ProjectiveMap, sym_square
from hilbertlab.pslab import (
    AtomicMeasure,
    conformal_factor,
    conformality_check,
    critical_exponent,
    equidistribution_experiment,
    equivariance_check,
    generator_caps,
    geodesic_counting_experiment,
    hopf_coordinates,
    orbit_counting_experiment,
    poincare_series,
    ps_density,
    shadow_masses,
    sullivan_density,
)

from oracles import klein_busemann, klein_gromov

DISK = Ellipsoid.unit_ball(2)


@pytest.fixture(scope="module")
def schottky():
    S = group_preset("schottky-2")
    return S, orbit_ball(S, 9.0)


@pytest.fixture(scope="module")
def rank1():
    S = group_preset("parabolic-rank-1")
    return S, orbit_ball(S, 14.0)


# -- Poincare series and critical exponent ----------------------------------------------


def test_poincare_series_at_zero_counts_the_ball(schottky):
    S, B = schottky
    P = poincare_series(S, B, 0.0)
    assert P.value == len(B)
    assert P.shell_sums.sum() == pytest.approx(len(B))
    with pytest.raises(InvalidGeometry):
        poincare_series(S, B, -1.0)


def test_rank1_poincare_series_matches_closed_form(rank1):
    # u^k moves o by arccosh(1 + k^2/2), so the series is an explicit sum over k
    S, B = rank1
    kmax = int(math.sqrt(2 * (math.cosh(14.0) - 1)))
    k = np.arange(-kmax, kmax + 1)
    for s in (0.7, 1.0, 2.0):
        ref = math.fsum(np.exp(-s * np.arccosh(1 + k**2 / 2.0)))
        assert poincare_series(S, B, s).value == pytest.approx(ref, rel=1e-12)


def test_poincare_tail_slope_changes_sign(schottky):
    S, B = schottky
    assert poincare_series(S, B, 0.2).diverging
    assert not poincare_series(S, B, 2.0).diverging


def test_rank1_exponent_is_one_half(rank1):
    S, B = rank1
    est = critical_exponent(S, ball=B)
    assert est.delta_hat == pytest.approx(0.5, abs=0.02)
    lo, hi = est.bracket
    assert lo - est.bracket_error <= 0.5 <= hi + est.bracket_error


def test_schottky_exponent_grows_with_smaller_translation():
    # shorter generators give a bigger limit set, so a larger exponent
    deltas = [critical_exponent(schottky_pair(L), radius=10.0).delta_hat for L in (2.0, 3.0, 4.0)]
    assert deltas[0] > deltas[1] > deltas[2] > 0


# -- Patterson-Sullivan densities --------------------------------------------------------------


def test_ps_density_has_unit_mass_at_the_basepoint(schottky):
    S, B = schottky
    mu = ps_density(S, B, S.basepoint, 1.0, delta_hat=0.75)
    assert mu.total_mass == pytest.approx(1.0, rel=1e-14)
    assert len(mu) == len(B)
    with pytest.raises(SubcriticalParameter):
        ps_density(S, B, S.basepoint, 0.5, delta_hat=0.75)
    with pytest.raises(OutsideDomain):
        ps_density(S, B, [2.0, 0.0], 1.0, delta_hat=0.75)


def test_conformality_and_equivariance(schottky):
    S, B = schottky
    x2 = np.array([0.2, -0.1])
    c = conformality_check(S, B, S.basepoint, x2, 0.9, 0.75)
    assert c["exact_rel_err"] < 1e-9
    assert c["far_rel_err"] < 0.05
    e = equivariance_check(S, B, S.basepoint, 0.9, 0.75)
    assert e["matched"] > len(B) // 4
    # weights come from chart points out to the ball radius: s times the rounding floor there
    assert e["max_rel_err"] < 0.9 * rounding_floor(B.radius)


def test_atomic_measure_validation():
    with pytest.raises(InvalidGeometry):
        AtomicMeasure(DISK, [[0.0, 0.0]], [-1.0])
    with pytest.raises(InvalidGeometry):
        AtomicMeasure(DISK, [[0.0, 0.0], [0.1, 0.0]], [1.0])


def test_shadow_masses_grow_with_radius(schottky):
    S, B = schottky
    mu = ps_density(S, B, S.basepoint, 0.9, 0.75)
    targets = B.points[(B.distances > 3) & (B.distances < 5)][:20]
    m1, m2, m3 = (shadow_masses(mu, targets, r) for r in (1.0, 2.0, 3.0))
    assert np.all(m1 <= m2) and np.all(m2 <= m3)
    assert np.all(m3 <= mu.total_mass)


def test_shadow_masses_thread_independent(schottky):
    S, B = schottky
    mu = ps_density(S, B, S.basepoint, 0.9, 0.75)
    targets = B.points[(B.distances > 3) & (B.distances < 6)]
    assert np.array_equal(shadow_masses(mu, targets, 2.0, threads=1),
                          shadow_masses(mu, targets, 2.0, threads=3, chunk=7))


# -- Hopf coordinates and the Sullivan density ---------------------------------------------------


@settings(max_examples=50)
@given(st.floats(0.0, 0.7), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_hopf_flip_keeps_the_footpoint_and_density(r, phi, theta):
    p = r * np.array([math.cos(phi), math.sin(phi)])
    v = np.array([math.cos(theta), math.sin(theta)])
    o = np.zeros(2)
    h = hopf_coordinates(DISK, p, v, o)
    np.testing.assert_allclose(h.footpoint(DISK).chart, p, atol=1e-9)
    f = h.flip(DISK)
    np.testing.assert_allclose(f.footpoint(DISK).chart, p, atol=1e-9)
    mu = AtomicMeasure(DISK, [[0.0, 0.0]], [1.0], base=o)
    assert sullivan_density(mu, f, 0.7) == pytest.approx(sullivan_density(mu, h, 0.7), rel=1e-9)


def test_sullivan_density_matches_hyperboloid_gromov_product():
    o = np.zeros(2)
    xi, eta = np.array([1.0, 0.0]), np.array([0.0, -1.0])
    h = hopf_coordinates(DISK, [0.3, -0.3], [1.0, 1.0], o)
    mu = AtomicMeasure(DISK, [[0.0, 0.0]], [1.0], base=o)
    gp = klein_gromov(o, h.xi_minus, h.eta_plus)
    assert sullivan_density(mu, h, 1.0) == pytest.approx(math.exp(2 * gp), rel=1e-9)
    # antipodal endpoints have Gromov product 0 at the center, density 1
    h0 = hopf_coordinates(DISK, o, xi, o)
    assert sullivan_density(mu, h0, 1.3) == pytest.approx(1.0, abs=1e-12)
    assert klein_gromov(o, xi, eta) == pytest.approx(0.5 * math.log(2.0), abs=1e-12)


def test_conformal_factor_matches_hyperboloid_busemann():
    xi = np.array([0.6, 0.8])
    x, y = np.array([0.1, 0.2]), np.array([-0.3, 0.05])
    ref = math.exp(-0.8 * klein_busemann(xi, x, y))
    assert conformal_factor(DISK, xi, x, y, 0.8) == pytest.approx(ref, rel=1e-9)


# -- counting -----------------------------------------------------------------------------------


def test_orbit_counting_table(schottky):
    S, B = schottky
    T = orbit_counting_experiment(S, radii=[0.0, 3.0, 6.0, 9.0], delta_hat=0.75, ball=B)
    assert T.counts[0] == 1
    assert np.all(np.diff(T.counts) >= 0)
    assert list(T.counts) == list(B.count_within([0.0, 3.0, 6.0, 9.0]))
    np.testing.assert_allclose(T.normalized, T.counts * np.exp(-0.75 * T.radii))
    with pytest.raises(InvalidGeometry):
        orbit_counting_experiment(S, radii=[3.0, 2.0], delta_hat=0.75, ball=B)


def test_orbit_counting_off_basepoint_agrees_at_the_origin(schottky):
    S, B = schottky
    T = orbit_counting_experiment(S, x=[0.0, 0.0], y=[0.0, 0.0], radii=[4.0, 6.0], delta_hat=0.75, ball=B)
    assert list(T.counts) == list(B.count_within([4.0, 6.0]))


def test_geodesic_counting_small_lengths():
    S = group_preset("schottky-2")
    T = geodesic_counting_experiment(S, 1, delta_hat=0.75, n_grid=4)
    # the four generators and inverses all have translation length 2
    assert T.n_classes == 4
    assert T.counts[-1] == 4


def test_equidistribution_identities(schottky):
    S, _ = schottky
    caps = generator_caps(S, 2.0)
    a, a2, b = caps[0], caps[2], caps[1]
    T = equidistribution_experiment(S, boxes=[((a, a), (b, b)), ((a, a2), (b, caps[3]))],
                                    radii=[6.0, 7.0], delta_hat=0.75)
    # A = A' and B = B' make both cross-ratios identically one
    np.testing.assert_allclose(T.cross_ratios[0], 1.0, rtol=1e-14)
    assert T.mu_cross_ratios[0] == pytest.approx(1.0, rel=1e-14)
    # swapping A and A' inverts the cross-ratio
    U = equidistribution_experiment(S, boxes=[((a2, a), (b, caps[3]))], radii=[6.0, 7.0], delta_hat=0.75)
    np.testing.assert_allclose(U.cross_ratios[0], 1.0 / T.cross_ratios[1], rtol=1e-12)


def test_critical_gap_over_the_cusp():
    # free group on two integer unipotents: a rank-1 cusp (delta_P = 1/2) plus hyperbolic elements
    S = GroupScenario(DISK, [sym_square([[1.0, 4.0], [0.0, 1.0]]), sym_square([[1.0, 0.0], [4.0, 1.0]])],
                      np.zeros(2), free_group=True)
    est = critical_exponent(S, radius=12.0)
    assert est.delta_hat - 2 * est.fit_stderr > 0.5
    assert est.delta_hat < 1.0


def test_geodesic_counts_invariant_under_conjugation():
    S = group_preset("schottky-2")
    h = ProjectiveMap(lorentz_boost(2, [0.3, 1.0], 0.4))
    S2 = GroupScenario(DISK, [g.conj(h).matrix for g in S.gens], h.apply(S.basepoint), free_group=True,
                       prune_slack=2.0)
    a, b = primitive_conjugacy_classes(S, 6), primitive_conjugacy_classes(S2, 6)
    assert len(a) == len(b)
    # compare the spectra, not grid counts: the grid starts exactly on the shortest length
    np.testing.assert_allclose(np.sort(a.lengths), np.sort(b.lengths), atol=1e-9)
