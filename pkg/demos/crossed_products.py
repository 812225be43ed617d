"""Crossed products by the outer automorphism and their matrix picture."""

import numpy as np

from nctorus.crossed import (CrossedElement, bimodule_check, crossed_multiply, inverse_kernel_map,
                             kernel_map_element, u0_conjugation_check)
from nctorus.graded import GradedElement

theta = 0.3
a = GradedElement.monomial(1, 2, 0.5)
x = CrossedElement.generator(1, 0, a, 6, 6) + CrossedElement.generator(-1, 1, GradedElement.monomial(0, 1), 6, 6)
y = CrossedElement.generator(0, 2, GradedElement.monomial(2, 0, 1j), 6, 6)

# %% Products go over to matrix products of kernels
xy = crossed_multiply(x, y, theta)
lhs = kernel_map_element(xy, theta)
rhs = kernel_map_element(x, theta).matmul(kernel_map_element(y, theta), theta)
print("kernel map multiplicativity defect:", lhs.dist(rhs))
print("round trip defect:", inverse_kernel_map(lhs, theta).dist(xy))

# %% Conjugating by w rotates the coefficient
w, wi = CrossedElement.outer(1, 6, 6), CrossedElement.outer(-1, 6, 6)
f = CrossedElement.generator(0, 1, a, 6, 6)
got = crossed_multiply(crossed_multiply(w, f, theta), wi, theta)
print("w z a w^-1 coefficient:", got.terms[(0, 0)][(1, 2)], "expected", 0.5 * np.exp(4j * np.pi * theta))

# %% The unitary intertwiner, and where its matrix unit actually sits
print(u0_conjugation_check(1, 0, 2, theta, K=4, N=2))

# %% Hilbert bimodule axioms on random samples
print(bimodule_check(theta, samples=20))
