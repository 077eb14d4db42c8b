import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hilbertlab.errors import InvalidGeometry, InvalidMap
from hilbertlab.projective import (
    ProjectiveMap,
    ProjPoint,
    cross_ratio,
    eigen_summary,
    normalize_matrix,
    reduce_word,
    sym_square,
)

from oracles import char_poly_moduli, sym_square_matrix

PHI = (1 + math.sqrt(5)) / 2
floats = st.floats(-3, 3, allow_nan=False)


def test_cross_ratio_on_a_line():
    pts = [np.array([t, 2 * t + 1]) for t in (0.0, 1.0, 2.0, 3.0)]
    assert cross_ratio(*pts) == pytest.approx(4.0, rel=1e-14)


def test_cross_ratio_identity_case():
    a, x, b = np.array([0.0, 0.0]), np.array([0.3, 0.1]), np.array([1.2, 0.4])
    assert cross_ratio(a, x, x, b) == pytest.approx(1.0, abs=1e-15)


def test_cross_ratio_rejects_non_collinear():
    with pytest.raises(InvalidGeometry):
        cross_ratio([0, 0], [1, 0], [2, 0.5], [3, 0])


@given(st.lists(floats, min_size=9, max_size=9), st.floats(0.05, 0.45), st.floats(0.55, 0.95))
def test_cross_ratio_projective_invariance(entries, s, t):
    m = np.eye(3) + 0.2 * np.array(entries).reshape(3, 3)
    if np.linalg.cond(m) > 1e3:
        return
    a, b = np.array([-1.0, 0.3]), np.array([1.0, -0.2])
    pts = np.array([a, a + s * (b - a), a + t * (b - a), b])
    H = np.c_[pts, np.ones(4)] @ m.T
    if np.any(np.abs(H[:, 2]) < 0.05) or np.unique(np.sign(H[:, 2])).size > 1:
        return  # the segment must stay in one affine chart
    img = H[:, :2] / H[:, 2:]
    assert cross_ratio(*img) == pytest.approx(cross_ratio(*pts), rel=1e-10)


def test_projpoint_rejects_zero():
    with pytest.raises(InvalidGeometry):
        ProjPoint(np.zeros(3))


@given(st.lists(floats, min_size=3, max_size=3), st.floats(0.1, 10), st.sampled_from([-1.0, 1.0]))
def test_projpoint_scale_invariance(c, lam, sign):
    c = np.array(c)
    if np.linalg.norm(c) < 1e-3:
        return
    p, q = ProjPoint(c), ProjPoint(sign * lam * c)
    assert p.same_as(q)
    np.testing.assert_allclose(p.normalized().coords, q.normalized().coords, atol=1e-12)


@given(st.lists(floats, min_size=9, max_size=9), st.floats(0.01, 100), st.sampled_from([-1.0, 1.0]))
def test_normalize_matrix_is_scale_free_and_idempotent(entries, lam, sign):
    m = np.array(entries).reshape(3, 3)
    if np.linalg.norm(m) < 1e-3:
        return
    n1 = normalize_matrix(m)
    np.testing.assert_allclose(normalize_matrix(sign * lam * m), n1, atol=1e-14)
    assert np.array_equal(normalize_matrix(n1), n1)


def test_projective_map_rejects_singular():
    with pytest.raises(InvalidMap):
        ProjectiveMap(np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(InvalidMap):
        ProjectiveMap(np.ones((2, 3)))


def test_eigen_summary_diagonal():
    es = eigen_summary(np.diag([math.e, 1.0, 1 / math.e]))
    np.testing.assert_allclose(es.moduli, [math.e, 1.0, 1 / math.e], rtol=1e-13)
    assert es.top_is_simple_real
    assert es.attracting_point.same_as(ProjPoint([1.0, 0.0, 0.0]))
    assert es.repelling_point.same_as(ProjPoint([0.0, 0.0, 1.0]))


def test_eigen_summary_identity_has_no_attracting_point():
    es = eigen_summary(np.eye(3))
    np.testing.assert_allclose(es.moduli, 1.0)
    assert es.attracting_point is None


def test_eigen_summary_symmetric_square_matches_characteristic_polynomial():
    g = [[2.0, 1.0], [1.0, 1.0]]
    ref = char_poly_moduli(sym_square_matrix(g))
    np.testing.assert_allclose(ref, [PHI**4, 1.0, PHI**-4], rtol=1e-12)
    np.testing.assert_allclose(eigen_summary(sym_square(g)).moduli, ref, rtol=1e-12)


def test_sym_square_is_a_representation(rng):
    for _ in range(20):
        a, b = rng.normal(size=(2, 2, 2))
        np.testing.assert_allclose(sym_square(a @ b), sym_square(a) @ sym_square(b), atol=1e-12)
        # conjugate to the monomial-basis construction, so the spectrum agrees
        np.testing.assert_allclose(char_poly_moduli(sym_square(a)), char_poly_moduli(sym_square_matrix(a)),
                                   rtol=1e-8)


def test_sym_square_preserves_the_unit_disk(rng):
    g = sym_square([[2.0, 1.0], [1.0, 1.0]])
    J = np.diag([-1.0, -1.0, 1.0])
    lam = np.abs(np.linalg.det(g)) ** (1 / 3)
    np.testing.assert_allclose(g.T @ J @ g / lam**2, J, atol=1e-12)


@given(st.lists(st.sampled_from([-2, -1, 1, 2]), max_size=12))
def test_reduce_word_is_idempotent_and_reduced(word):
    w = reduce_word(word)
    assert reduce_word(w) == w
    assert all(w[i] != -w[i + 1] for i in range(len(w) - 1))


def test_power_and_inverse_track_logdet():
    m = sym_square([[2.0, 1.0], [1.0, 1.0]])
    g = ProjectiveMap(m)
    g5 = g.power(5)
    direct = np.linalg.matrix_power(m, 5)
    np.testing.assert_allclose(normalize_matrix(g5.matrix), normalize_matrix(direct), atol=1e-13)
    # [[2,1],[1,1]] has the integer inverse [[1,-1],[-1,2]]
    exact_inv = np.linalg.matrix_power(sym_square([[1.0, -1.0], [-1.0, 2.0]]), 5)
    np.testing.assert_allclose(normalize_matrix(g5.inv_matrix), normalize_matrix(exact_inv), atol=1e-13)
    assert g5.logdet == pytest.approx(np.linalg.slogdet(g5.matrix)[1], abs=1e-10)


def test_kappa_is_scale_invariant():
    m = sym_square([[2.0, 1.0], [1.0, 1.0]])
    assert ProjectiveMap(m).kappa == pytest.approx(ProjectiveMap(7.5 * m).kappa, rel=1e-12)
    assert ProjectiveMap(np.eye(3)).kappa == pytest.approx(1.0)
