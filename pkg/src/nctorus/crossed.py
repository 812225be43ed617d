"""The discrete crossed product Z x| T x| A and its kernel picture.

A generator x(n, l, a) stands for w^n z^l a: first multiply by a in the
undeformed algebra, then project with the circle character z^l, then apply
the outer unitary w^n. On l^2(Z) (x) A these act by

    a . d_k (x) b     = d_k (x) ab
    z^l . d_k (x) b   = d_k (x) b        if b has first weight l + k, else 0
    w . d_k (x) b     = exp(2 pi i theta n_b) d_{k+1} (x) b

which gives the relations w a = exp(2 pi i theta q) a w, w z^l = z^{l-1} w and
a z^l = z^{l+p} a for a of weight (p, q).

Matrix entries over the deformed algebra use the one-sided presentation
(product phase exp(2 pi i theta m n')); ``graded.to_symmetric`` converts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .graded import (GradedElement, cl_product, cl_star, deformed_product, element_from_json,
                     element_to_json, homogeneous_components, star)

Key = Tuple[int, int]


def _add_into(store: Dict, key, value: GradedElement) -> None:
    store[key] = store[key] + value if key in store else value


def _prune(store: Dict) -> Dict:
    return {k: v for k, v in store.items() if v.coef.any()}


def _max_dist(x: Mapping, y: Mapping) -> float:
    keys = set(x) | set(y)
    zero = GradedElement.zeros()
    return max((x.get(k, zero).dist(y.get(k, zero)) for k in keys), default=0.0)


@dataclass
class CrossedElement:
    """Finite sum of generators w^k z^l a_(k,l), windowed to |k| <= K, |l| <= L."""

    terms: Dict[Key, GradedElement] = field(default_factory=dict)
    K: int = 8
    L: int = 8
    dropped: float = 0.0

    @classmethod
    def generator(cls, n: int, l: int, a: GradedElement, K: int = 8, L: int = 8) -> "CrossedElement":
        return cls({(n, l): a}, K, L)

    @classmethod
    def unit(cls, K: int = 8, L: int = 8) -> "CrossedElement":
        return cls({(0, l): GradedElement.one() for l in range(-L, L + 1)}, K, L)

    @classmethod
    def outer(cls, power: int = 1, K: int = 8, L: int = 8) -> "CrossedElement":
        """w^power, as the sum over all window frequencies."""
        return cls({(power, l): GradedElement.one() for l in range(-L, L + 1)}, K, L)

    @classmethod
    def coefficient(cls, a: GradedElement, K: int = 8, L: int = 8) -> "CrossedElement":
        """The algebra element a, i.e. the sum over l of z^l a."""
        return cls({(0, l): a for l in range(-L, L + 1)}, K, L)

    def __add__(self, other: "CrossedElement") -> "CrossedElement":
        out = dict(self.terms)
        for k, v in other.terms.items():
            _add_into(out, k, v)
        return CrossedElement(_prune(out), self.K, self.L, self.dropped + other.dropped)

    def __sub__(self, other: "CrossedElement") -> "CrossedElement":
        return self + other * -1.0

    def __mul__(self, scalar) -> "CrossedElement":
        return CrossedElement({k: v * scalar for k, v in self.terms.items()}, self.K, self.L, self.dropped)

    __rmul__ = __mul__

    def dist(self, other: "CrossedElement") -> float:
        return _max_dist(self.terms, other.terms)

    def to_json(self) -> dict:
        return {"K": self.K, "L": self.L,
                "terms": [{"k": k, "l": l, "element": element_to_json(v)} for (k, l), v in sorted(self.terms.items())]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "CrossedElement":
        try:
            terms: Dict[Key, GradedElement] = {}
            for t in obj["terms"]:
                _add_into(terms, (int(t["k"]), int(t["l"])), element_from_json(t["element"]))
            return cls(terms, int(obj.get("K", 8)), int(obj.get("L", 8)))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed crossed-product record: {exc}") from exc


def crossed_multiply(x: CrossedElement, y: CrossedElement, theta: float) -> CrossedElement:
    """Twisted convolution.

    x(n1, l1, a) x(n2, l2, b) = [l1 + n2 = l2 + p] exp(-2 pi i theta q n2) x(n1 + n2, l1 + n2, ab)
    for a of weight (p, q); terms leaving the window are dropped and their l1
    mass recorded in ``dropped``.
    """
    K, L = min(x.K, y.K), min(x.L, y.L)
    out: Dict[Key, GradedElement] = {}
    dropped = x.dropped + y.dropped
    for (n1, l1), a in sorted(x.terms.items()):
        comps = homogeneous_components(a)
        for (n2, l2), b in sorted(y.terms.items()):
            for (p, q), ac in comps:
                if l1 + n2 != l2 + p:
                    continue
                term = deformed_product(ac, b, 0.0) * np.exp(-2j * np.pi * theta * q * n2)
                key = (n1 + n2, l1 + n2)
                if abs(key[0]) > K or abs(key[1]) > L:
                    dropped += term.l1()
                    continue
                _add_into(out, key, term)
    return CrossedElement(_prune(out), K, L, dropped)


@dataclass
class MatrixOverDeformed:
    """Finitely supported matrix (i, j) -> element of the deformed algebra (one-sided presentation)."""

    entries: Dict[Key, GradedElement] = field(default_factory=dict)

    def __add__(self, other: "MatrixOverDeformed") -> "MatrixOverDeformed":
        out = dict(self.entries)
        for k, v in other.entries.items():
            _add_into(out, k, v)
        return MatrixOverDeformed(_prune(out))

    def __mul__(self, scalar) -> "MatrixOverDeformed":
        return MatrixOverDeformed({k: v * scalar for k, v in self.entries.items()})

    __rmul__ = __mul__

    def matmul(self, other: "MatrixOverDeformed", theta: float) -> "MatrixOverDeformed":
        out: Dict[Key, GradedElement] = {}
        for (i, j), a in sorted(self.entries.items()):
            for (j2, k), b in sorted(other.entries.items()):
                if j == j2:
                    _add_into(out, (i, k), cl_product(a, b, theta))
        return MatrixOverDeformed(_prune(out))

    def dist(self, other: "MatrixOverDeformed") -> float:
        return _max_dist(self.entries, other.entries)


def kernel_map(n: int, l: int, a: GradedElement, theta: float) -> MatrixOverDeformed:
    """Image of w^n z^l a for homogeneous a of weight (m, n'): one entry at (n - l, m - l)
    with value exp(2 pi i theta l n') a."""
    terms = a.terms
    if len(terms) > 1:
        raise ValueError("kernel_map expects a homogeneous element; use kernel_map_element")
    if not terms:
        return MatrixOverDeformed()
    (m, n2), c = next(iter(terms.items()))
    val = GradedElement.monomial(m, n2, c * np.exp(2j * np.pi * theta * l * n2))
    return MatrixOverDeformed({(n - l, m - l): val})


def kernel_map_element(x: CrossedElement, theta: float) -> MatrixOverDeformed:
    out = MatrixOverDeformed()
    for (n, l), a in sorted(x.terms.items()):
        for _, ac in homogeneous_components(a):
            out = out + kernel_map(n, l, ac, theta)
    return out


def inverse_kernel_map(X: MatrixOverDeformed, theta: float, K: int = 8, L: int = 8) -> CrossedElement:
    """Left inverse of kernel_map: entry (i, j) with component of weight (p, q) comes from
    x(i + p - j, p - j, exp(-2 pi i theta (p - j) q) a)."""
    out: Dict[Key, GradedElement] = {}
    for (i, j), a in sorted(X.entries.items()):
        for (p, q), ac in homogeneous_components(a):
            l = p - j
            _add_into(out, (i + l, l), ac * np.exp(-2j * np.pi * theta * l * q))
    return CrossedElement(_prune(out), K, L)


# U_0 on l^2(Z) (x) H ---------------------------------------------------------
# basis states are tuples (k, m, n, s); operators map a state to [(coef, state)]

def _u0(theta, st):
    k, m, n, s = st
    return [(np.exp(2j * np.pi * theta * n * k), (k + m, m, n, s))]


def _u0_adj(theta, st):
    k, m, n, s = st
    return [(np.exp(-2j * np.pi * theta * n * (k - m)), (k - m, m, n, s))]


def _compose(*ops):
    def run(st):
        vec = [(1.0 + 0j, st)]
        for op in reversed(ops):
            new = []
            for c, s in vec:
                new.extend((c * c2, s2) for c2, s2 in op(s))
            vec = new
        acc: Dict = {}
        for c, s in vec:
            acc[s] = acc.get(s, 0j) + c
        return acc
    return run


def _vec_dist(x: Dict, y: Dict) -> float:
    keys = set(x) | set(y)
    return max((abs(x.get(k, 0j) - y.get(k, 0j)) for k in keys), default=0.0)


def u0_conjugation_check(p: int, q: int, l: int, theta: float, K: int = 8, N: int = 4,
                         tol: float = 1e-12) -> Dict:
    """Check U0* (z^l a) U0 = exp(2 pi i theta q l) e_{-l, p-l} (x) a~, U0* w U0 = shift (x) 1 and
    U0* (1 (x) D) U0 = 1 (x) D on all states with |k| <= K, |m|, |n| <= N.

    a~ is a of weight (p, q) acting with the one-sided phase exp(2 pi i theta p n).
    The report also records whether the matrix unit e_{-l, -(l+p)} would fit.
    """
    def za(st):
        k, m, n, s = st
        if l + k - (m + p) != 0:
            return []
        return [(1.0 + 0j, (k, m + p, n + q, s))]

    def target(st, col):
        k, m, n, s = st
        if k != col:
            return []
        return [(np.exp(2j * np.pi * theta * (q * l + p * n)), (-l, m + p, n + q, s))]

    def w(st):
        k, m, n, s = st
        return [(np.exp(2j * np.pi * theta * n), (k + 1, m, n, s))]

    def shift(st):
        k, m, n, s = st
        return [(1.0 + 0j, (k + 1, m, n, s))]

    def dirac(st):
        k, m, n, s = st
        if s == 0:
            return [(-2 * np.pi * (m + 1j * n), (k, m, n, 1))]
        return [(2 * np.pi * (-m + 1j * n), (k, m, n, 0))]

    conj_za = _compose(lambda s: _u0_adj(theta, s), za, lambda s: _u0(theta, s))
    conj_w = _compose(lambda s: _u0_adj(theta, s), w, lambda s: _u0(theta, s))
    conj_d = _compose(lambda s: _u0_adj(theta, s), dirac, lambda s: _u0(theta, s))
    tgt = _compose(lambda s: target(s, p - l))
    lit = _compose(lambda s: target(s, -(l + p)))
    shf = _compose(shift)
    dd = _compose(dirac)
    worst = {"z^l a": 0.0, "w": 0.0, "D": 0.0, "literal": 0.0}
    where = None
    for k in range(-K, K + 1):
        for m in range(-N, N + 1):
            for n in range(-N, N + 1):
                for s in (0, 1):
                    st = (k, m, n, s)
                    e = _vec_dist(conj_za(st), tgt(st))
                    if e > worst["z^l a"]:
                        worst["z^l a"], where = e, st
                    worst["literal"] = max(worst["literal"], _vec_dist(conj_za(st), lit(st)))
                    worst["w"] = max(worst["w"], _vec_dist(conj_w(st), shf(st)))
                    worst["D"] = max(worst["D"], _vec_dist(conj_d(st), dd(st)))
    ok = max(worst["z^l a"], worst["w"], worst["D"]) <= tol
    return {"op": "u0_conjugation_check", "p": p, "q": q, "l": l, "theta": theta, "K": K, "N": N,
            "position": (-l, p - l), "defect_zla": worst["z^l a"], "defect_w": worst["w"],
            "defect_D": worst["D"], "worst_state": where, "pass": bool(ok),
            "literal_position_fits": bool(worst["literal"] <= tol)}


# bimodule l^2(Z) (x) A --------------------------------------------------------

Vector = Dict[int, GradedElement]


def _vclean(v: Dict) -> Vector:
    return {k: e for k, e in v.items() if e.coef.any()}


def vec_add(x: Vector, y: Vector) -> Vector:
    out = dict(x)
    for k, e in y.items():
        _add_into(out, k, e)
    return _vclean(out)


def vec_dist(x: Vector, y: Vector) -> float:
    return _max_dist(x, y)


def left_element(a: GradedElement, x: Vector) -> Vector:
    return _vclean({k: deformed_product(a, b, 0.0) for k, b in x.items()})


def left_frequency(l: int, x: Vector) -> Vector:
    out: Dict[int, GradedElement] = {}
    for k, b in x.items():
        for (m, n), bc in homogeneous_components(b):
            if l == m - k:
                _add_into(out, k, bc)
    return _vclean(out)


def left_outer(x: Vector, theta: float) -> Vector:
    out: Dict[int, GradedElement] = {}
    for k, b in x.items():
        for (m, n), bc in homogeneous_components(b):
            _add_into(out, k + 1, bc * np.exp(2j * np.pi * theta * n))
    return _vclean(out)


def right_action(x: Vector, s: GradedElement, theta: float) -> Vector:
    """d_k (x) b . s = exp(2 pi i theta k n) d_{k+m} (x) bs for s of weight (m, n)."""
    out: Dict[int, GradedElement] = {}
    for k, b in x.items():
        for (m, n), sc in homogeneous_components(s):
            _add_into(out, k + m, deformed_product(b, sc, 0.0) * np.exp(2j * np.pi * theta * k * n))
    return _vclean(out)


def inner(x: Vector, y: Vector, theta: float) -> GradedElement:
    """A_theta-valued inner product, right linear, with d_j (x) 1 orthonormal.

    <d_k a, d_l b> = [k - m = l - m'] exp(2 pi i theta j (n - n')) a^* b in the
    one-sided presentation, where j = k - m and a, b have weights (m, n), (m', n').
    """
    acc = GradedElement.zeros()
    for k, a in x.items():
        for (m, n), ac in homogeneous_components(a):
            j = k - m
            for l, b in y.items():
                for (m2, n2), bc in homogeneous_components(b):
                    if l - m2 != j:
                        continue
                    val = cl_product(cl_star(ac, theta), bc, theta)
                    acc = acc + val * np.exp(2j * np.pi * theta * j * (n - n2))
    return acc.shrink() if acc.cutoff else acc


def bimodule_check(theta: float, samples: int = 20, seed: int = 0, radius: int = 2, K: int = 3) -> Dict:
    """Randomized check of the bimodule structure on homogeneous vectors."""
    rng = np.random.default_rng(seed)

    def hom():
        m, n = rng.integers(-radius, radius + 1, size=2)
        return GradedElement.monomial(int(m), int(n), complex(rng.normal(), rng.normal()))

    def vec():
        return {int(rng.integers(-K, K + 1)): hom()}

    worst = {k: 0.0 for k in ("unit", "assoc", "left_right", "right_linear", "adjoint_right",
                              "adjoint_left", "displayed_formula")}
    one = GradedElement.one()
    for _ in range(samples):
        x, y = vec(), vec()
        s, s2, a = hom(), hom(), hom()
        l = int(rng.integers(-radius - K, radius + K + 1))
        worst["unit"] = max(worst["unit"], vec_dist(right_action(x, one, theta), x))
        lhs = right_action(right_action(x, s, theta), s2, theta)
        rhs = right_action(x, cl_product(s, s2, theta), theta)
        worst["assoc"] = max(worst["assoc"], vec_dist(lhs, rhs))
        for act in (lambda v: left_element(a, v), lambda v: left_frequency(l, v), lambda v: left_outer(v, theta)):
            d = vec_dist(act(right_action(x, s, theta)), right_action(act(x), s, theta))
            worst["left_right"] = max(worst["left_right"], d)
        ip = inner(x, y, theta)
        worst["right_linear"] = max(worst["right_linear"],
                                    inner(x, right_action(y, s, theta), theta).dist(cl_product(ip, s, theta)))
        worst["adjoint_right"] = max(worst["adjoint_right"],
                                     inner(right_action(x, s, theta), y, theta).dist(
                                         cl_product(cl_star(s, theta), ip, theta)))
        worst["adjoint_left"] = max(worst["adjoint_left"],
                                    inner(left_element(a, x), y, theta).dist(inner(x, left_element(star(a), y), theta)))
        # displayed formula, in the regime k - m = 0 where no extra phase appears
        (m, n), _ = next(iter(s.terms.items()))
        xv, yv = {m: s}, {int(next(iter(s2.terms))[0]): s2}
        want = cl_product(cl_star(s, theta), s2, theta)
        worst["displayed_formula"] = max(worst["displayed_formula"], inner(xv, yv, theta).dist(want))
    return {"op": "bimodule_check", "theta": theta, "samples": samples, **worst,
            "pass": bool(max(worst.values()) < 1e-12)}
