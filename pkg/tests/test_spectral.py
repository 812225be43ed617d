import numpy as np
import pytest
import scipy.sparse as sp

from nctorus.graded import GradedElement, deformed_product, rotate
from nctorus.spectral import (ConvergenceError, TruncatedHilbert, WindowError, boundary_mask, build_truncation,
                              deform_operator, operator_norm, represent, restrict_columns, seminorm_nu,
                              torus_unitary, verify_decay, window_defect, zeta_partial)

U = GradedElement.monomial(1, 0)
V = GradedElement.monomial(0, 1)


def test_build_truncation_n1():
    hilb, dirac, gens = build_truncation(1)
    assert hilb.dim == 18
    vals = np.round(dirac.absD.diagonal().real / (2 * np.pi), 12)
    uniq, counts = np.unique(vals, return_counts=True)
    assert dict(zip(uniq.tolist(), counts.tolist())) == {0.0: 2, 1.0: 8, round(np.sqrt(2), 12): 8}
    with pytest.raises(ValueError):
        build_truncation(0)


def test_dirac_structure():
    hilb, dirac, gens = build_truncation(3)
    D = dirac.D.toarray()
    g = hilb.gamma.toarray()
    assert np.array_equal(g @ D @ g, -D)
    assert np.abs(D - D.conj().T).max() == 0
    i = hilb.index(2, -1, 0)
    j = hilb.index(2, -1, 1)
    assert D[i, j] == 2 * np.pi * (-2 - 1j)
    assert D[j, i] == -2 * np.pi * (2 - 1j)
    # D^2 = |D|^2
    assert np.abs(D @ D - dirac.absD.toarray() ** 2).max() < 1e-10
    F = dirac.F.toarray()
    assert np.abs(F @ F - np.eye(hilb.dim)).max() < 1e-14
    k = hilb.index(0, 0, 0)
    assert F[k, k] == 1 and F[k + 1, k + 1] == 1


def test_torus_equivariance_of_D():
    hilb, dirac, gens = build_truncation(3)
    for t in [(0.1, 0.7), (0.33, -0.2)]:
        Ut = torus_unitary(hilb, t)
        assert abs(Ut @ dirac.D @ Ut.conj().T - dirac.D).max() < 1e-12
    assert abs(gens.h1 @ gens.h2 - gens.h2 @ gens.h1).max() == 0
    t = (0.21, 0.0)
    expm = sp.diags(np.exp(gens.h1.diagonal() * t[0]))
    assert abs(expm - torus_unitary(hilb, t)).max() < 1e-12


def test_represent_basics(rng):
    hilb = TruncatedHilbert(4)
    assert abs(represent(GradedElement.one(), hilb) - sp.identity(hilb.dim)).max() == 0
    Ru = represent(U, hilb)
    x = np.zeros(hilb.dim)
    x[hilb.index(1, 2, 1)] = 1
    y = Ru @ x
    assert y[hilb.index(2, 2, 1)] == 1 and np.count_nonzero(y) == 1
    inner = hilb.interior(3)
    assert abs(operator_norm(restrict_columns(Ru, inner)) - 1) < 1e-12
    a, b = GradedElement.random(rng, 4, 1), GradedElement.random(rng, 4, 1)
    prod = represent(a, hilb) @ represent(b, hilb)
    assert window_defect(prod, represent(deformed_product(a, b, 0.0), hilb), hilb.interior(2)) < 1e-13
    assert boundary_mask(U, hilb).sum() == hilb.dim - hilb.interior(3).sum()


def test_deform_operator_examples(rng):
    hilb = TruncatedHilbert(4)
    T = sp.random(hilb.dim, hilb.dim, density=0.05, random_state=1, format="csr") * (1 + 1j)
    assert abs(deform_operator(T, 0.0, hilb) - T).max() == 0
    th = 0.37
    lhs = deform_operator(T, th, hilb).conj().T
    assert abs(lhs - deform_operator(T.conj().T, th, hilb)).max() < 1e-14
    A, B = represent(U, hilb), represent(V, hilb)
    lhs = deform_operator(A, th, hilb) @ deform_operator(B, th, hilb)
    rhs = np.exp(1j * np.pi * th) * deform_operator(A @ B, th, hilb)
    assert abs(lhs - rhs).max() < 1e-14
    dense = T.toarray()
    assert np.abs(deform_operator(dense, th, hilb) - deform_operator(T, th, hilb).toarray()).max() < 1e-15


def test_deform_operator_equivariance(rng):
    hilb = TruncatedHilbert(4)
    a, b = GradedElement.random(rng, 5, 2), GradedElement.random(rng, 5, 2)
    T = represent(a, hilb) @ represent(b, hilb)
    for t in [(0.3, 0.1), (-0.2, 0.77)]:
        Ut = torus_unitary(hilb, t)
        lhs = Ut @ deform_operator(T, 0.4, hilb) @ Ut.conj().T
        rhs = deform_operator(Ut @ T @ Ut.conj().T, 0.4, hilb)
        assert abs(lhs - rhs).max() < 1e-13


def test_operator_norm(rng):
    assert abs(operator_norm(sp.identity(5, format="csr")) - 1) < 1e-12
    assert abs(operator_norm(sp.diags([3, -4j])) - 4) < 1e-10
    M = rng.normal(size=(50, 50)) + 1j * rng.normal(size=(50, 50))
    assert abs(operator_norm(M, tol=1e-14, maxiter=100000) - np.linalg.svd(M, compute_uv=False)[0]) < 1e-8
    # start vector orthogonal to the range: restart path
    K = np.array([[1.0, -1.0], [1.0, -1.0]])
    assert abs(operator_norm(K) - 2) < 1e-10
    assert operator_norm(np.zeros((3, 3))) == 0.0
    with pytest.raises(ConvergenceError):
        operator_norm(M, tol=1e-16, maxiter=3)


def test_seminorm_examples():
    hilb, dirac, gens = build_truncation(6)
    one = GradedElement.one()
    assert abs(seminorm_nu(one, 0, (0, 0), hilb, dirac, gens) - 1) < 1e-12
    assert seminorm_nu(one, 1, (0, 0), hilb, dirac, gens) == 0
    assert seminorm_nu(one, 0, (1, 1), hilb, dirac, gens) == 0
    val = seminorm_nu(U, 0, (1, 0), hilb, dirac, gens)
    assert abs(val - 2 * np.pi * (1 + 2 * np.pi)) < 1e-9
    with pytest.raises(WindowError, match="N >= 10"):
        seminorm_nu(U, 6, (1, 1), hilb, dirac, gens)


def test_seminorm_rotation_invariant(rng):
    hilb, dirac, gens = build_truncation(7)
    a = GradedElement.random(rng, 4, 1)
    for k, alpha in [(0, (1, 0)), (1, (0, 1))]:
        x = seminorm_nu(a, k, alpha, hilb, dirac, gens)
        y = seminorm_nu(rotate(a, (0.31, -0.17)), k, alpha, hilb, dirac, gens)
        assert abs(x - y) < 1e-8 * max(1, x)


def test_verify_decay_simple_cases():
    hilb = TruncatedHilbert(6)
    rep = verify_decay(represent(GradedElement.monomial(1, 2, 0.5), hilb), hilb, window=4)
    assert set(rep["components"]) == {(1, 2)}
    rep = verify_decay(sp.identity(hilb.dim, format="csr"), hilb)
    assert rep["components"] == {} and rep["C"] == 0


def test_zeta_examples():
    hilb, dirac, _ = build_truncation(1)
    z = zeta_partial(sp.identity(hilb.dim, format="csr"), 4, hilb, dirac)
    want = 8 * (2 * np.pi) ** -4 + 8 * (2 * np.pi * np.sqrt(2)) ** -4
    assert abs(z - want) < 1e-16
    hilb, dirac, _ = build_truncation(4)
    assert zeta_partial(represent(U, hilb), 3, hilb, dirac) == 0
    T = represent(GradedElement.from_terms({(0, 0): 2.0, (1, 1): 1j}), hilb)
    assert zeta_partial(deform_operator(T, 0.3, hilb), 5 + 2j, hilb, dirac) == zeta_partial(T, 5 + 2j, hilb, dirac)
