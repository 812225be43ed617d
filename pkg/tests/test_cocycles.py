import numpy as np
import pytest
import scipy.sparse as sp

from nctorus.cocycles import (TAU, PairingReport, ProjectionError, chern_cochain, chern_cocycle_eval,
                              combined_cocycle_eval, contract, deformed_cocycle_eval, double_contraction,
                              evaluate, fredholm_index_oracle, k0_pairing, operator_side_eval, trace_tau)
from nctorus.graded import GradedElement, MatrixGradedElement, deformed_product, rotate, star
from nctorus.projections import bott_projection, powers_rieffel
from nctorus.spectral import build_truncation, represent

U = GradedElement.monomial(1, 0)
V = GradedElement.monomial(0, 1)
TWO_PI_I = 2j * np.pi


def mono(rng, r=2):
    m, n = rng.integers(-r, r + 1, size=2)
    return GradedElement.monomial(int(m), int(n), complex(rng.normal(), rng.normal()))


def leibniz_oracle(a0, a1, a2):
    """tau(a0 (d1 a1 d2 a2 - d2 a1 d1 a2)) by explicit sums over commutative supports."""
    total = 0j
    for (m0, n0), x0 in a0.terms.items():
        for (m1, n1), x1 in a1.terms.items():
            for (m2, n2), x2 in a2.terms.items():
                if m0 + m1 + m2 == 0 and n0 + n1 + n2 == 0:
                    total += x0 * x1 * x2 * TWO_PI_I ** 2 * (m1 * n2 - n1 * m2)
    return total


def test_trace_tau(rng):
    assert trace_tau(GradedElement.one()) == 1
    assert trace_tau(GradedElement.monomial(1, -2)) == 0
    a, b = GradedElement.random(rng, 6, 2), GradedElement.random(rng, 6, 2)
    assert abs(trace_tau(deformed_product(a, b, 0.37)) - trace_tau(deformed_product(b, a, 0.37))) < 1e-13


def test_deformed_trace_is_trace(rng):
    a = GradedElement.random(rng, 6, 2)
    for th in (0.2, 0.9):
        assert deformed_cocycle_eval(TAU, th, [a]) == a.trace()


def test_contract_examples(rng):
    i1 = contract(TAU, 1)
    a = GradedElement.random(rng, 5, 2)
    assert evaluate(i1, [GradedElement.one(), a]) == 0
    assert abs(evaluate(i1, [star(U), U]) + TWO_PI_I) < 1e-14
    with pytest.raises(ValueError):
        contract(TAU, 3)


def test_double_contraction_closed_form(rng):
    phi = double_contraction(TAU)
    assert phi.insertions == (2, 1) and phi.degree == 2
    for _ in range(30):
        args = [mono(rng) for _ in range(3)]
        assert abs(evaluate(phi, args) - leibniz_oracle(*args)) < 1e-10
    args = [GradedElement.random(rng, 4, 2) for _ in range(3)]
    assert abs(evaluate(phi, args) - leibniz_oracle(*args)) < 1e-9


def test_cyclic_symmetry_and_invariance(rng):
    phis = [contract(TAU, 1), contract(TAU, 2), double_contraction(TAU), contract(contract(TAU, 1), 2)]
    for phi in phis:
        n = phi.degree
        for _ in range(20):
            args = [mono(rng) for _ in range(n)]
            w = [sum(a.support()[0][i] for a in args) for i in (0, 1)]
            args.append(GradedElement.monomial(-w[0], -w[1], 0.7))
            lhs = evaluate(phi, args)
            rhs = (-1) ** n * evaluate(phi, [args[-1]] + args[:-1])
            assert abs(lhs - rhs) < 1e-10
            t = (0.37, -0.12)
            assert abs(evaluate(phi, [rotate(a, t) for a in args]) - lhs) < 1e-10


def test_tau_coboundary_vanishes(rng):
    th = 0.37
    for _ in range(10):
        a, b, c = (GradedElement.random(rng, 4, 2) for _ in range(3))
        ab, bc, ca = (deformed_product(x, y, th) for x, y in ((a, b), (b, c), (c, a)))
        # (b tau)(a, b, c) for the 1-cochain psi(x, y) = tau(x y) reduces to the trace property
        val = (deformed_product(ab, c, th).trace() - deformed_product(a, bc, th).trace())
        assert abs(val) < 1e-12
        assert abs(deformed_product(ca, b, th).trace() - deformed_product(a, bc, th).trace()) < 1e-12


def test_deformed_cocycle_examples(rng):
    phi = double_contraction(TAU)
    args = [GradedElement.random(rng, 4, 2) for _ in range(3)]
    assert abs(deformed_cocycle_eval(phi, 0.0, args) - evaluate(phi, args)) < 1e-10
    a = [deformed_product(star(U), star(V), 0.0), U, V]
    for th in (0.25, 0.37):
        assert abs(deformed_cocycle_eval(phi, th, a) - operator_side_eval(phi, th, a)) < 1e-11
    # frozen value: tau(u*v* (d1 u d2 v - d2 u d1 v)) = (2 pi i)^2
    assert abs(deformed_cocycle_eval(phi, 0.3, a) - TWO_PI_I ** 2) < 1e-12


def test_deformed_cocycle_random_agreement(rng):
    phi = double_contraction(TAU)
    for _ in range(10):
        args = [GradedElement.random(rng, 3, 1) for _ in range(3)]
        x = deformed_cocycle_eval(phi, 0.61, args)
        assert abs(x - operator_side_eval(phi, 0.61, args)) < 1e-10


def test_combined_cocycle_examples(rng):
    one = MatrixGradedElement.identity(1)
    assert combined_cocycle_eval(TAU, 0.4, [one]) == 1
    p = powers_rieffel(0.25, 32)
    assert combined_cocycle_eval(TAU, 0.0, [p]) == evaluate(TAU, [p])
    with pytest.raises(ValueError):
        combined_cocycle_eval(TAU, 0.3, [one, one])
    with pytest.raises(ValueError):
        combined_cocycle_eval(TAU, 0.3, [one], [one])


def test_chern_cocycle_examples():
    hilb, dirac, _ = build_truncation(4)
    eye = sp.identity(hilb.dim, format="csr")
    P = represent(bott_projection(4), hilb)
    assert chern_cocycle_eval(2, dirac, [P, sp.identity(P.shape[0], format="csr"), P], hilb) == 0
    assert chern_cocycle_eval(0, dirac, [eye], hilb) == 0
    with pytest.raises(ValueError):
        chern_cocycle_eval(1, dirac, [eye, eye], hilb)


def test_chern_reduced_form_matches_spinor():
    hilb, dirac, _ = build_truncation(4)
    b = bott_projection(4)
    spin = represent(b, hilb)
    lat = represent(b, hilb, spinor=False)
    x = chern_cocycle_eval(2, dirac, [spin] * 3, hilb)
    y = chern_cocycle_eval(2, dirac, [lat] * 3, hilb, spinor=False)
    assert abs(x - y) < 1e-12


def test_k0_pairing_trace():
    r = k0_pairing(TAU, powers_rieffel(1 / 3, 64), 1 / 3, tol=1e-8)
    assert abs(r.value - 1 / 3) < 1e-6
    assert k0_pairing(TAU, MatrixGradedElement.identity(1), 0.5).normalized == 1
    with pytest.raises(ProjectionError):
        k0_pairing(TAU, MatrixGradedElement.identity(1) * 0.5, 0.5)


def test_pairing_report_json():
    r = PairingReport("tau", 0.3, 0.98 + 0j, 0.98 + 0j)
    assert abs(r.integer_distance - 0.02) < 1e-15
    assert set(r.to_json()) == {"cocycle", "theta", "value_re", "value_im", "normalized", "integer_distance"}


def test_index_oracle_trivial_projection():
    r = fredholm_index_oracle(MatrixGradedElement.identity(1), 0.3, 6)
    assert r.index == 0 and r.reliable


def test_double_contraction_pairs_bott_to_integer():
    r = k0_pairing(double_contraction(TAU), bott_projection(8), 0.0, tol=1e-3)
    # frozen: first Chern number of the two-band model at mass 1, in this orientation
    assert r.nearest_integer == -1 and r.integer_distance < 1e-4
