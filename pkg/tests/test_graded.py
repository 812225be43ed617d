import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nctorus.graded import (AliasingError, GradedElement, MatrixGradedElement, cl_product, component_by_integration,
                            component_projection, deformed_product, element_from_json, element_to_json,
                            fejer_coefficients, fejer_smooth, from_symmetric, matrix_from_json, matrix_to_json,
                            phase_factor, rotate, sample_orbit, star, to_symmetric)

U = GradedElement.monomial(1, 0)
V = GradedElement.monomial(0, 1)


def brute_product(a, b, theta):
    """Independent double loop over support pairs."""
    out = {}
    for (m, n), x in a.terms.items():
        for (m2, n2), y in b.terms.items():
            w = (m + m2, n + n2)
            out[w] = out.get(w, 0) + np.exp(1j * np.pi * theta * (m * n2 - m2 * n)) * x * y
    return out


terms = st.dictionaries(st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
                        st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                        min_size=1, max_size=6)


def test_phase_factor_examples():
    assert abs(phase_factor(0.5, (1, 0), (0, 1)) - 1j) < 1e-15
    assert phase_factor(0.37, (2, -3), (2, -3)) == 1
    a = phase_factor(0.37, (2, -1), (1, 4))
    assert abs(a - np.conj(phase_factor(0.37, (1, 4), (2, -1)))) < 1e-15
    assert abs(abs(a) - 1) < 1e-15


def test_star_examples(rng):
    s = star(U)
    assert s.terms == {(-1, 0): 1}
    a = GradedElement.random(rng, 10, 3)
    assert star(star(a)).dist(a) == 0


def test_torus_relation_coefficient():
    th = 0.29
    uv = deformed_product(U, V, th)
    vu = deformed_product(V, U, th)
    assert abs(uv[(1, 1)] - np.exp(2j * np.pi * th) * vu[(1, 1)]) < 1e-14


def test_theta_zero_is_convolution(rng):
    a, b = GradedElement.random(rng, 5, 2), GradedElement.random(rng, 5, 2)
    from scipy.signal import convolve2d
    c = deformed_product(a, b, 0.0)
    assert np.abs(c.coef - convolve2d(a.coef, b.coef)).max() < 1e-13


def test_product_matches_brute_force(rng):
    a, b = GradedElement.random(rng, 5, 3), GradedElement.random(rng, 5, 3)
    c = deformed_product(a, b, 0.37)
    ref = brute_product(a, b, 0.37)
    assert c.dist(GradedElement.from_terms(ref)) < 1e-13
    assert c.cutoff == a.cutoff + b.cutoff


def test_product_swap_path_matches(rng):
    # dense a, sparse b takes the loop over b
    a = GradedElement.random(rng, 40, 3)
    b = GradedElement.random(rng, 2, 3)
    assert deformed_product(a, b, 0.61).dist(GradedElement.from_terms(brute_product(a, b, 0.61))) < 1e-12


@settings(max_examples=40, deadline=None)
@given(terms, terms, terms, st.floats(-2, 2))
def test_associativity_property(x, y, z, th):
    a, b, c = (GradedElement.from_terms(t) for t in (x, y, z))
    lhs = deformed_product(deformed_product(a, b, th), c, th)
    rhs = deformed_product(a, deformed_product(b, c, th), th)
    assert lhs.dist(rhs) < 1e-11


@settings(max_examples=40, deadline=None)
@given(terms, terms, st.floats(-2, 2))
def test_star_antihomomorphism_property(x, y, th):
    a, b = GradedElement.from_terms(x), GradedElement.from_terms(y)
    assert star(deformed_product(a, b, th)).dist(deformed_product(star(b), star(a), th)) < 1e-12


def test_homogeneous_rule():
    a, b = GradedElement.monomial(2, -1, 1.5), GradedElement.monomial(-1, 3, 2j)
    th = 0.41
    lhs = deformed_product(a, b, th)
    rhs = deformed_product(a, b, 0.0) * phase_factor(th, (2, -1), (-1, 3))
    assert lhs.dist(rhs) == 0


def test_support_in_minkowski_sum(rng):
    a, b = GradedElement.random(rng, 3, 2), GradedElement.random(rng, 3, 2)
    sums = {(p + r, q + s) for p, q in a.support() for r, s in b.support()}
    assert set(deformed_product(a, b, 0.3).support()) <= sums


def test_cap_reports_truncation():
    a = GradedElement.from_terms({(2, 0): 1.0, (0, 0): 1.0})
    c = deformed_product(a, a, 0.2, max_cutoff=2)
    assert c.cutoff == 2
    assert abs(c.tail - 1.0) < 1e-15  # the (4,0) term


def test_one_sided_presentation_isomorphism(rng):
    a, b = GradedElement.random(rng, 5, 2), GradedElement.random(rng, 5, 2)
    th = 0.33
    lhs = to_symmetric(cl_product(a, b, th), th)
    rhs = deformed_product(to_symmetric(a, th), to_symmetric(b, th), th)
    assert lhs.dist(rhs) < 1e-13
    assert from_symmetric(to_symmetric(a, th), th).dist(a) < 1e-15


def test_component_projection():
    h = GradedElement.monomial(2, -1, 3.0)
    assert component_projection(h, (2, -1)).terms == {(2, -1): 3.0}
    assert component_projection(h, (0, 0)).terms == {}
    assert component_projection(U + V, (1, 0)).dist(U) == 0


def test_component_projection_sums_back(rng):
    a = GradedElement.random(rng, 7, 2)
    acc = GradedElement.zeros()
    for w in a.support():
        acc = acc + component_projection(a, w)
    assert acc.dist(a) == 0


def test_component_by_integration():
    one = GradedElement.one()
    assert component_by_integration(sample_orbit(one, 1), (0, 0)).dist(one) < 1e-15
    x = GradedElement.monomial(1, 1, 0.7 - 0.2j)
    got = component_by_integration(sample_orbit(x, 8), (1, 1))
    assert abs(got[(1, 1)] - (0.7 - 0.2j)) < 1e-12
    assert component_by_integration(sample_orbit(x, 8), (0, 0)).l1() < 1e-15


def test_component_by_integration_random(rng):
    a = GradedElement.random(rng, 8, 2)
    samples = sample_orbit(a, 5)
    for w in [(1, -2), (0, 0), (2, 2)]:
        assert component_by_integration(samples, w).dist(component_projection(a, w)) < 1e-13


def test_aliasing_flagged():
    x = GradedElement.monomial(2, 0)
    with pytest.raises(AliasingError):
        component_by_integration(sample_orbit(x, 4), (2, 0))


def test_fejer_examples():
    assert fejer_coefficients(2, (1, 0), standard=False) == 1.5
    assert fejer_coefficients(2, (3, 0), standard=False) == 0
    assert abs(fejer_coefficients(2, (1, 0)) - 2 / 3) < 1e-15
    with pytest.raises(ValueError):
        fejer_coefficients(0, (0, 0))


def test_fejer_lattice_count_matches_set_expression():
    k = 3
    for m in range(-4, 5):
        for n in range(-4, 5):
            count = sum(1 for i in range(m, k + m + 1) for j in range(n, k + n + 1) if 0 <= i <= k and 0 <= j <= k)
            assert fejer_coefficients(k, (m, n), standard=False) == count / k ** 2


def test_fejer_smooth(rng):
    a = GradedElement.monomial(0, 0, 2.0)
    assert fejer_smooth(a, 3)[(0, 0)] == 2.0 * fejer_coefficients(3, (0, 0))
    b = GradedElement.random(rng, 12, 4)
    errs = [fejer_smooth(b, k).dist(b) for k in (4, 16, 64, 256)]
    assert errs == sorted(errs, reverse=True) and errs[-1] < 0.05
    assert fejer_smooth(b, 2).cutoff == 2
    assert abs(fejer_smooth(b, 5).trace() - fejer_coefficients(5, (0, 0)) * b.trace()) < 1e-15


def test_rotation_is_automorphism(rng):
    a, b = GradedElement.random(rng, 5, 2), GradedElement.random(rng, 5, 2)
    t = (0.13, -0.4)
    lhs = rotate(deformed_product(a, b, 0.3), t)
    rhs = deformed_product(rotate(a, t), rotate(b, t), 0.3)
    assert lhs.dist(rhs) < 1e-13


def test_matrix_elements(rng):
    I = MatrixGradedElement.identity(2)
    assert I.projection_defect(0.3) == 0
    half = I * 0.5
    assert abs(half.product(half, 0.3).dist(half) - 0.25) < 1e-15
    m = MatrixGradedElement([[GradedElement.random(rng, 3, 1) for _ in range(2)] for _ in range(2)])
    assert m.star().star().dist(m) == 0


def test_json_round_trip(tmp_path, rng):
    a = GradedElement.random(rng, 6, 2)
    assert element_from_json(json.loads(json.dumps(element_to_json(a)))).dist(a) == 0
    m = MatrixGradedElement([[a, U], [V, a]])
    back = matrix_from_json(json.loads(json.dumps(matrix_to_json(m))))
    assert back.dist(m) == 0
    with pytest.raises(ValueError):
        element_from_json({"cutoff": 1})
