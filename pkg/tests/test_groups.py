import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hilbertlab.domains import Ellipsoid, lorentz_boost
from hilbertlab.errors import BudgetExceeded, InvalidMap, NotBiproximal, UnsupportedScenario
from hilbertlab.geometry import ellipsoid_displacement, hilbert_distance
from hilbertlab.groups import (
    GroupScenario,
    axis_endpoints,
    canonical_rotation,
    classify,
    kappa_distance_audit,
    nonarithmeticity_audit,
    orbit_ball,
    orbit_limit_points,
    primitive_conjugacy_classes,
    translation_length,
)
from hilbertlab.presets import group_preset, schottky_pair
from hilbertlab.projective import ProjectiveMap, ProjPoint, rotation_block, sym_square

from oracles import klein_distance

DISK = Ellipsoid.unit_ball(2)
PHI = (1 + math.sqrt(5)) / 2
BOOST = lorentz_boost(2, [1.0, 0.0], 2.0)  # conjugate to diag(e, 1, 1/e) inside SO(2,1)


def mobius(n):
    """Moebius function, for the necklace count below."""
    out, k = 1, 2
    while k * k <= n:
        if n % k == 0:
            n //= k
            if n % k == 0:
                return 0
            out = -out
        k += 1
    return -out if n > 1 else out


def primitive_class_count(n, rank=2):
    """Oriented primitive conjugacy classes of cyclic length n in the free group."""
    k = rank
    cyc = lambda m: (2 * k - 1) ** m + 1 + (k - 1) * (1 + (-1) ** m)  # cyclically reduced words
    return sum(mobius(n // d) * cyc(d) for d in range(1, n + 1) if n % d == 0) // n


def test_necklace_oracle_small_cases():
    assert [primitive_class_count(n) for n in (1, 2, 3)] == [4, 4, 8]


# -- orbit balls --------------------------------------------------------------------


def test_free_group_growth_by_word_length():
    S = schottky_pair(2.0, max_word_length=2)
    B = orbit_ball(S, 20.0)
    assert len(B) == 1 + 4 + 12
    assert {len(w) for w in B.word_set()} == {0, 1, 2}


def test_radius_zero_is_the_identity():
    B = orbit_ball(group_preset("schottky-2"), 0.0)
    assert len(B) == 1 and B.word(0) == ()


def test_orbit_ball_is_sorted_and_exact():
    S = group_preset("schottky-2")
    B = orbit_ball(S, 8.0)
    assert np.all(np.diff(B.distances) >= -1e-12)  # ties are ordered at 12 digits
    counts = B.count_within(np.arange(0, 9))
    assert np.all(np.diff(counts) >= 0)
    # distances agree with the chart computation and with the word matrices
    for i in range(0, len(B), 37):
        g = S.word_matrix(B.word(i))
        gx = g.apply(S.basepoint)
        assert B.distances[i] == pytest.approx(hilbert_distance(S.domain, S.basepoint, gx), abs=1e-9)


def test_rank1_parabolic_distances_match_closed_form():
    # u^k moves o by arccosh(1 + k^2 / 2) (hyperboloid computation)
    S = group_preset("parabolic-rank-1")
    B = orbit_ball(S, 12.0)
    k = np.array([abs(sum(B.word(i))) for i in range(len(B))])
    np.testing.assert_allclose(B.distances, np.arccosh(1 + k**2 / 2), rtol=1e-13, atol=1e-12)
    assert len(B) == 2 * int(math.sqrt(2 * (math.cosh(12.0) - 1))) + 1


def test_rank2_parabolic_distances_match_closed_form():
    S = group_preset("parabolic-rank-2")
    B = orbit_ball(S, 6.0)
    for i in range(len(B)):
        w = B.word(i)
        m = sum(1 if s == 1 else -1 for s in w if abs(s) == 1)
        n = sum(1 if s == 2 else -1 for s in w if abs(s) == 2)
        assert B.distances[i] == pytest.approx(math.acosh(1 + (m * m + n * n) / 2), abs=1e-11)


def test_budget_exhaustion_reports_partial_ball():
    S = group_preset("surface-genus-2", budget=500)
    with pytest.raises(BudgetExceeded) as e:
        orbit_ball(S, 10.0)
    assert e.value.partial is not None and e.value.cutoff is not None
    complete = orbit_ball(group_preset("surface-genus-2"), e.value.cutoff)
    assert int(e.value.partial.count_within(e.value.cutoff)) == len(complete)


def test_thread_count_does_not_change_the_ball():
    S = group_preset("surface-genus-2")
    B1, B4 = orbit_ball(S, 7.0, threads=1), orbit_ball(S, 7.0, threads=4, chunk=50)
    assert np.array_equal(B1.distances, B4.distances)
    assert np.array_equal(B1.matrices, B4.matrices)


def test_scenario_validation():
    with pytest.raises(InvalidMap):
        GroupScenario(DISK, [np.diag([2.0, 1.0, 1.0])], np.zeros(2))
    with pytest.raises(InvalidMap):
        GroupScenario(DISK, [np.eye(4)], np.zeros(2))


# -- translation lengths and classification -------------------------------------------


def test_translation_length_examples():
    assert translation_length(np.diag([math.e, 1.0, 1 / math.e])) == pytest.approx(1.0, abs=1e-14)
    assert translation_length(np.eye(3)) == 0.0
    assert translation_length(rotation_block(2, 0.7)) == 0.0
    g = sym_square([[2.0, 1.0], [1.0, 1.0]])
    assert translation_length(g) == pytest.approx(4 * math.log(PHI), abs=1e-13)
    assert 4 * math.log(PHI) == pytest.approx(1.92484730, abs=1e-8)
    # displacement of powers grows at rate ell; the invariant form keeps g^12 o resolvable
    o = np.zeros(2)
    g6, g12 = ProjectiveMap(g).power(6), ProjectiveMap(g).power(12)
    d6 = float(ellipsoid_displacement(DISK, o, g6.matrix, g6.logdet))
    d12 = float(ellipsoid_displacement(DISK, o, g12.matrix, g12.logdet))
    assert d6 == pytest.approx(klein_distance(o, g6.apply(o)), abs=1e-6)
    assert (d12 - d6) / 6 == pytest.approx(4 * math.log(PHI), abs=1e-8)
    gN = g12
    assert translation_length(gN) == pytest.approx(12 * 4 * math.log(PHI), rel=1e-12)


def test_classification_examples():
    c = classify(BOOST, DISK)
    assert (c.kind, c.proximal, c.biproximal, c.rank_one) == ("hyperbolic", True, True, True)
    assert c.translation_length == pytest.approx(2.0)
    assert classify(np.eye(3), DISK).kind == "elliptic"
    assert classify(rotation_block(2, 1.0), DISK).kind == "elliptic"
    p = classify(sym_square([[1.0, 1.0], [0.0, 1.0]]), DISK)
    assert p.kind == "parabolic" and p.translation_length == 0.0 and not p.proximal


def test_axis_endpoints():
    minus, plus = axis_endpoints(np.diag([math.e, 1.0, 1 / math.e]))
    assert minus.same_as(ProjPoint([0.0, 0.0, 1.0])) and plus.same_as(ProjPoint([1.0, 0.0, 0.0]))
    g = ProjectiveMap(BOOST)
    m1, p1 = axis_endpoints(g, DISK)
    m2, p2 = axis_endpoints(g.inv(), DISK)
    assert m1.same_as(p2) and p1.same_as(m2)
    with pytest.raises(NotBiproximal):
        axis_endpoints(np.eye(3))


def test_axis_endpoints_lie_in_the_limit_set():
    S = group_preset("schottky-2")
    B = orbit_ball(S, 10.0)
    limit = orbit_limit_points(S, B, 9.0)
    for g in S.gens:
        for p in axis_endpoints(g, S.domain):
            assert np.min(np.linalg.norm(limit - p.chart, axis=1)) < 0.01


@given(st.lists(st.sampled_from([-2, -1, 1, 2]), min_size=1, max_size=4),
       st.lists(st.sampled_from([-2, -1, 1, 2]), min_size=1, max_size=2))
def test_translation_length_conjugation_and_powers(w, h):
    S = group_preset("schottky-2")
    g, hh = S.word_matrix(w), S.word_matrix(h)
    ell = translation_length(g)
    assert translation_length(g.conj(hh)) == pytest.approx(ell, abs=1e-9)
    assert translation_length(g.power(3)) == pytest.approx(3 * ell, abs=1e-9)


def test_kappa_audit_identity_and_lattice():
    S = group_preset("surface-genus-2")
    B = orbit_ball(S, 8.0)
    rep = kappa_distance_audit(S, B)
    # at the identity e^0 / kappa(id) = 1
    assert rep["max"] >= 1.0 - 1e-12 >= rep["min"] - 1e-12 or rep["min"] <= 1.0 <= rep["max"]
    assert rep["stable"]
    assert rep["max_over_min"] < 20


def test_kappa_audit_under_conjugation():
    # kappa(h g h^-1) is within kappa(h)^2 of kappa(g), so the spread moves by at most kappa(h)^4
    S = group_preset("schottky-2")
    h = ProjectiveMap(lorentz_boost(2, [0.3, 1.0], 0.4))
    gens = [g.conj(h).matrix for g in S.gens]
    S2 = GroupScenario(DISK, gens, h.apply(S.basepoint), free_group=True, prune_slack=2.0)
    r1 = kappa_distance_audit(S, orbit_ball(S, 8.0))["max_over_min"]
    r2 = kappa_distance_audit(S2, orbit_ball(S2, 8.0))["max_over_min"]
    assert h.kappa ** -4 <= r2 / r1 <= h.kappa ** 4


# -- conjugacy classes --------------------------------------------------------------------


def test_class_counts_small():
    S = group_preset("schottky-2")
    assert len(primitive_conjugacy_classes(S, 1)) == 4
    assert len(primitive_conjugacy_classes(S, 2)) == 8


def test_class_counts_match_necklace_oracle():
    S = group_preset("schottky-2")
    C = primitive_conjugacy_classes(S, 8)
    per_len = np.bincount(C.word_lengths, minlength=9)[1:]
    assert list(per_len) == [primitive_class_count(n) for n in range(1, 9)]
    unoriented = primitive_conjugacy_classes(S, 6, oriented=False)
    assert len(unoriented) * 2 == len(primitive_conjugacy_classes(S, 6))


def test_class_lengths_are_rotation_invariant():
    S = group_preset("schottky-2")
    C = primitive_conjugacy_classes(S, 5)
    for w, _, ell in list(C.classes)[::7]:
        for i in range(len(w)):
            assert translation_length(S.word_matrix(w[i:] + w[:i])) == pytest.approx(ell, abs=1e-9)


def test_conjugacy_needs_a_free_scenario():
    with pytest.raises(UnsupportedScenario):
        primitive_conjugacy_classes(group_preset("surface-genus-2"), 2)


@given(st.lists(st.sampled_from([-2, -1, 1, 2]), min_size=1, max_size=8))
def test_canonical_rotation_is_a_minimal_rotation(w):
    w = tuple(w)
    c = canonical_rotation(w)
    rots = {w[i:] + w[:i] for i in range(len(w))}
    assert c in rots
    assert canonical_rotation(c) == c
    assert all(canonical_rotation(r) == c for r in rots)


# -- length spectrum ------------------------------------------------------------------------


def test_nonarithmeticity_examples():
    rep = nonarithmeticity_audit([1.0, 2.0])
    assert rep["approx_generator"] == pytest.approx(1.0) and not rep["dense_consistent"]
    rep = nonarithmeticity_audit([1.0, math.sqrt(2)], tol=1e-6)
    assert rep["approx_generator"] < 1e-6 and rep["dense_consistent"]
    S = group_preset("schottky-2")
    C = primitive_conjugacy_classes(S, 5)
    assert nonarithmeticity_audit(C.lengths[:50], tol=1e-6)["dense_consistent"]
