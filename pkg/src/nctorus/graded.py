"""Weight-graded Laurent polynomials on the noncommutative 2-torus.

An element is stored as a dense (2N+1) x (2N+1) complex array of coefficients,
indexed so that ``coef[m + N, n + N]`` is the coefficient of ``u^m v^n``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

Weight = Tuple[int, int]


class AliasingError(ValueError):
    """Raised when a quadrature grid is too coarse for the element it samples."""


def phase_factor(theta: float, w: Weight, w2: Weight) -> complex:
    """Return exp(pi i theta (m n' - m' n)) for w = (m, n), w2 = (m', n')."""
    k = int(w[0]) * int(w2[1]) - int(w2[0]) * int(w[1])
    if k == 0:
        return 1.0 + 0.0j
    return complex(np.exp(1j * np.pi * theta * k))


@dataclass(frozen=True, eq=False)
class GradedElement:
    """Finitely supported element sum a_(m,n) u^m v^n.

    ``tail`` is an upper bound on the l1 mass that was discarded by capped
    products along the way; it is zero for anything built exactly.
    """

    coef: np.ndarray
    tail: float = field(default=0.0)

    def __post_init__(self):
        c = np.asarray(self.coef, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] % 2 != 1:
            raise ValueError("coefficient array must be square with odd side")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coef", c)

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, cutoff: int = 0) -> "GradedElement":
        return cls(np.zeros((2 * cutoff + 1, 2 * cutoff + 1), complex))

    @classmethod
    def from_terms(cls, terms: Mapping[Weight, complex], cutoff: Optional[int] = None) -> "GradedElement":
        radius = max((max(abs(m), abs(n)) for (m, n) in terms), default=0)
        if cutoff is None:
            cutoff = radius
        elif radius > cutoff:
            raise ValueError(f"term of radius {radius} exceeds cutoff {cutoff}")
        c = np.zeros((2 * cutoff + 1, 2 * cutoff + 1), complex)
        for (m, n), val in terms.items():
            c[m + cutoff, n + cutoff] += val
        return cls(c)

    @classmethod
    def monomial(cls, m: int, n: int, value: complex = 1.0) -> "GradedElement":
        return cls.from_terms({(m, n): value})

    @classmethod
    def one(cls) -> "GradedElement":
        return cls.monomial(0, 0)

    @classmethod
    def random(cls, rng: np.random.Generator, nterms: int, radius: int) -> "GradedElement":
        """Random element with ``nterms`` distinct weights in [-radius, radius]^2."""
        side = 2 * radius + 1
        picks = rng.choice(side * side, size=min(nterms, side * side), replace=False)
        vals = rng.normal(size=len(picks)) + 1j * rng.normal(size=len(picks))
        c = np.zeros((side, side), complex)
        c.flat[picks] = vals
        return cls(c)

    # basic accessors ------------------------------------------------------
    @property
    def cutoff(self) -> int:
        return (self.coef.shape[0] - 1) // 2

    def __getitem__(self, w: Weight) -> complex:
        m, n = w
        N = self.cutoff
        if abs(m) > N or abs(n) > N:
            return 0j
        return complex(self.coef[m + N, n + N])

    @property
    def terms(self) -> Dict[Weight, complex]:
        N = self.cutoff
        out = {}
        for i, j in zip(*np.nonzero(self.coef)):
            out[(int(i) - N, int(j) - N)] = complex(self.coef[i, j])
        return out

    def support(self) -> List[Weight]:
        return sorted(self.terms)

    def is_homogeneous(self) -> bool:
        return len(self.terms) <= 1

    def extend(self, cutoff: int) -> "GradedElement":
        """Zero-pad (or exactly crop) to a new cutoff."""
        N = self.cutoff
        if cutoff == N:
            return self
        c = np.zeros((2 * cutoff + 1, 2 * cutoff + 1), complex)
        r = min(N, cutoff)
        c[cutoff - r:cutoff + r + 1, cutoff - r:cutoff + r + 1] = self.coef[N - r:N + r + 1, N - r:N + r + 1]
        dropped = float(np.abs(self.coef).sum() - np.abs(c).sum()) if cutoff < N else 0.0
        return GradedElement(c, self.tail + max(dropped, 0.0))

    def shrink(self) -> "GradedElement":
        """Crop to the smallest cutoff containing the support."""
        radius = max((max(abs(m), abs(n)) for m, n in self.terms), default=0)
        return self.extend(radius)

    # arithmetic -----------------------------------------------------------
    def _aligned(self, other: "GradedElement"):
        N = max(self.cutoff, other.cutoff)
        return self.extend(N).coef, other.extend(N).coef

    def __add__(self, other: "GradedElement") -> "GradedElement":
        a, b = self._aligned(other)
        return GradedElement(a + b, self.tail + other.tail)

    def __sub__(self, other: "GradedElement") -> "GradedElement":
        a, b = self._aligned(other)
        return GradedElement(a - b, self.tail + other.tail)

    def __neg__(self) -> "GradedElement":
        return GradedElement(-self.coef, self.tail)

    def __mul__(self, scalar) -> "GradedElement":
        if isinstance(scalar, GradedElement):
            raise TypeError("use deformed_product for element products")
        return GradedElement(self.coef * scalar, self.tail * abs(scalar))

    __rmul__ = __mul__

    def dist(self, other: "GradedElement") -> float:
        """Max coefficient modulus of the difference."""
        a, b = self._aligned(other)
        return float(np.max(np.abs(a - b)))

    def l1(self) -> float:
        return float(np.abs(self.coef).sum())

    def trace(self) -> complex:
        """The canonical trace, i.e. the (0,0) coefficient."""
        return self[(0, 0)]

    def __repr__(self) -> str:
        t = self.terms
        body = ", ".join(f"{w}: {v:.6g}" for w, v in sorted(t.items())[:6])
        more = "" if len(t) <= 6 else f", ... ({len(t)} terms)"
        return f"GradedElement(N={self.cutoff}, {{{body}{more}}})"


def star(a: GradedElement) -> GradedElement:
    """Involution: (a*)_(m,n) = conj(a_(-m,-n))."""
    return GradedElement(np.conj(a.coef[::-1, ::-1]), a.tail)


def is_self_adjoint(a: GradedElement, tol: float = 0.0) -> bool:
    return a.dist(star(a)) <= tol


def _weights(N: int) -> np.ndarray:
    return np.arange(-N, N + 1)


def deformed_product(a: GradedElement, b: GradedElement, theta: float,
                     max_cutoff: Optional[int] = None) -> GradedElement:
    """The theta-deformed product a *_theta b.

    The result has cutoff ``a.cutoff + b.cutoff`` unless ``max_cutoff`` caps it,
    in which case the l1 mass of the discarded terms is added to ``tail``.
    """
    Na, Nb = a.cutoff, b.cutoff
    Nc = Na + Nb
    out = np.zeros((2 * Nc + 1, 2 * Nc + 1), complex)
    # iterate over the sparser factor
    swap = np.count_nonzero(a.coef) > np.count_nonzero(b.coef)
    if swap:
        # a*b = sum_{w2} b_{w2} phase(w, w2) a_w ; phase(w,w2) = conj phase(w2,w) for real theta
        outer, inner, No, Ni, sign = b, a, Nb, Na, -1.0
    else:
        outer, inner, No, Ni, sign = a, b, Na, Nb, 1.0
    mi = _weights(Ni)[:, None]
    ni = _weights(Ni)[None, :]
    side = 2 * Ni + 1
    for i, j in zip(*np.nonzero(outer.coef)):
        m, n = int(i) - No, int(j) - No
        ph = np.exp(1j * np.pi * theta * sign * (m * ni - mi * n))
        out[i:i + side, j:j + side] += outer.coef[i, j] * ph * inner.coef
    tail = a.tail * b.l1() + b.tail * a.l1() + a.tail * b.tail
    res = GradedElement(out, tail)
    if max_cutoff is not None and max_cutoff < Nc:
        res = res.extend(max_cutoff)
    return res


def cl_product(a: GradedElement, b: GradedElement, theta: float) -> GradedElement:
    """Product in the one-sided (Connes-Landi) presentation: phase exp(2 pi i theta m n').

    It is isomorphic to :func:`deformed_product` via :func:`to_symmetric`.
    """
    Na, Nb = a.cutoff, b.cutoff
    Nc = Na + Nb
    out = np.zeros((2 * Nc + 1, 2 * Nc + 1), complex)
    nb = _weights(Nb)[None, :]
    side = 2 * Nb + 1
    for i, j in zip(*np.nonzero(a.coef)):
        m = int(i) - Na
        out[i:i + side, j:j + side] += a.coef[i, j] * np.exp(2j * np.pi * theta * m * nb) * b.coef
    return GradedElement(out)


def cl_star(a: GradedElement, theta: float) -> GradedElement:
    """Involution of the one-sided presentation."""
    s = star(a)
    w = _weights(a.cutoff)
    return GradedElement(s.coef * np.exp(2j * np.pi * theta * np.outer(w, w)))


def to_symmetric(a: GradedElement, theta: float) -> GradedElement:
    """*-isomorphism from the one-sided presentation to the symmetric one."""
    w = _weights(a.cutoff)
    return GradedElement(a.coef * np.exp(-1j * np.pi * theta * np.outer(w, w)), a.tail)


def from_symmetric(a: GradedElement, theta: float) -> GradedElement:
    return to_symmetric(a, -theta)


def component_projection(a: GradedElement, w: Weight) -> GradedElement:
    return GradedElement.from_terms({tuple(w): a[w]}) if a[w] != 0 else GradedElement.zeros()


def homogeneous_components(a: GradedElement) -> List[Tuple[Weight, GradedElement]]:
    return [(w, GradedElement.monomial(w[0], w[1], c)) for w, c in sorted(a.terms.items())]


def rotate(a: GradedElement, t: Tuple[float, float]) -> GradedElement:
    """Torus action sigma_t: multiplies the (m,n) coefficient by exp(2 pi i (m t1 + n t2))."""
    w = _weights(a.cutoff)
    ph = np.exp(2j * np.pi * (w[:, None] * t[0] + w[None, :] * t[1]))
    return GradedElement(a.coef * ph, a.tail)


def sample_orbit(a: GradedElement, M: int) -> List[List[GradedElement]]:
    """sigma_t(a) on the uniform M x M grid t = (i/M, j/M)."""
    return [[rotate(a, (i / M, j / M)) for j in range(M)] for i in range(M)]


def component_by_integration(samples: Sequence[Sequence[GradedElement]], w: Weight,
                             cutoff: Optional[int] = None) -> GradedElement:
    """Trapezoid rule for the integral of exp(-2 pi i (m t1 + n t2)) sigma_t(a) dt.

    ``samples[i][j]`` is sigma_t(a) at t = (i/M, j/M). If ``cutoff`` (of the
    sampled element) is given, grids with M <= 2 cutoff raise AliasingError.
    """
    M = len(samples)
    if M == 0 or any(len(row) != M for row in samples):
        raise ValueError("samples must form a square grid")
    if cutoff is None:
        cutoff = max(s.cutoff for row in samples for s in row)
    if cutoff > 0 and M <= 2 * cutoff:
        raise AliasingError(f"grid size {M} aliases weights of cutoff {cutoff}; need M > {2 * cutoff}")
    m, n = w
    acc = GradedElement.zeros(cutoff)
    for i in range(M):
        for j in range(M):
            ph = np.exp(-2j * np.pi * (m * i + n * j) / M)
            acc = acc + samples[i][j] * ph
    res = acc * (1.0 / M ** 2)
    # the quadrature is exact; tidy roundoff on the other weights
    return res.shrink() if res.cutoff else res


def fejer_coefficients(k: int, w: Weight, standard: bool = True) -> float:
    """Fejer multiplier c^(k)_(m,n).

    ``standard=False`` gives the lattice count |([m,k+m] x [n,k+n]) cap [0,k]^2| / k^2,
    which exceeds 1 off the origin; the default is (1-|m|/(k+1))(1-|n|/(k+1)).
    """
    if k < 1:
        raise ValueError("Fejer order k must be at least 1")
    m, n = int(w[0]), int(w[1])
    if abs(m) > k or abs(n) > k:
        return 0.0
    if standard:
        return (1.0 - abs(m) / (k + 1)) * (1.0 - abs(n) / (k + 1))
    cm = max(0, min(k, k + m) - max(0, m) + 1)
    cn = max(0, min(k, k + n) - max(0, n) + 1)
    return cm * cn / k ** 2


def fejer_smooth(a: GradedElement, k: int, standard: bool = True) -> GradedElement:
    N = a.cutoff
    c = np.array([[fejer_coefficients(k, (m, n), standard) for n in range(-N, N + 1)]
                  for m in range(-N, N + 1)])
    res = GradedElement(a.coef * c, a.tail)
    return res.extend(min(N, k))


# matrices over the algebra -----------------------------------------------------

class MatrixGradedElement:
    """Square d x d array of GradedElements."""

    def __init__(self, entries: Sequence[Sequence[GradedElement]]):
        d = len(entries)
        if d < 1 or any(len(row) != d for row in entries):
            raise ValueError("entries must be a nonempty square array")
        self.entries: List[List[GradedElement]] = [list(row) for row in entries]

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def cutoff(self) -> int:
        return max(e.cutoff for row in self.entries for e in row)

    @classmethod
    def identity(cls, d: int) -> "MatrixGradedElement":
        z = GradedElement.zeros()
        return cls([[GradedElement.one() if i == j else z for j in range(d)] for i in range(d)])

    @classmethod
    def scalar(cls, a: GradedElement) -> "MatrixGradedElement":
        return cls([[a]])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "MatrixGradedElement":
        """From an array indexed [i, j, m+N, n+N]."""
        d = arr.shape[0]
        return cls([[GradedElement(arr[i, j]) for j in range(d)] for i in range(d)])

    def to_array(self, cutoff: Optional[int] = None) -> np.ndarray:
        N = self.cutoff if cutoff is None else cutoff
        return np.array([[e.extend(N).coef for e in row] for row in self.entries])

    def __getitem__(self, ij: Tuple[int, int]) -> GradedElement:
        return self.entries[ij[0]][ij[1]]

    def _zip(self, other, op):
        if self.dim != other.dim:
            raise ValueError("matrix sizes differ")
        return MatrixGradedElement([[op(x, y) for x, y in zip(r1, r2)]
                                    for r1, r2 in zip(self.entries, other.entries)])

    def __add__(self, other):
        return self._zip(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._zip(other, lambda x, y: x - y)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        return MatrixGradedElement([[e * scalar for e in row] for row in self.entries])

    __rmul__ = __mul__

    def product(self, other: "MatrixGradedElement", theta: float,
                max_cutoff: Optional[int] = None) -> "MatrixGradedElement":
        d = self.dim
        if other.dim != d:
            raise ValueError("matrix sizes differ")
        out = []
        for i in range(d):
            row = []
            for j in range(d):
                acc = GradedElement.zeros()
                for k in range(d):
                    x, y = self.entries[i][k], other.entries[k][j]
                    if not x.coef.any() or not y.coef.any():
                        continue
                    acc = acc + deformed_product(x, y, theta, max_cutoff)
                row.append(acc)
            out.append(row)
        return MatrixGradedElement(out)

    def star(self) -> "MatrixGradedElement":
        d = self.dim
        return MatrixGradedElement([[star(self.entries[j][i]) for j in range(d)] for i in range(d)])

    def matrix_trace(self) -> GradedElement:
        acc = GradedElement.zeros()
        for i in range(self.dim):
            acc = acc + self.entries[i][i]
        return acc

    def trace(self) -> complex:
        """tau composed with the matrix trace."""
        return self.matrix_trace().trace()

    def map(self, f) -> "MatrixGradedElement":
        return MatrixGradedElement([[f(e) for e in row] for row in self.entries])

    def dist(self, other: "MatrixGradedElement") -> float:
        return max(x.dist(y) for r1, r2 in zip(self.entries, other.entries) for x, y in zip(r1, r2))

    def projection_defect(self, theta: float) -> float:
        """max(||p*p - p||, ||p* - p||) in the max-coefficient norm."""
        return max(self.product(self, theta).dist(self), self.star().dist(self))

    def __repr__(self) -> str:
        return f"MatrixGradedElement(dim={self.dim}, cutoff={self.cutoff})"


# JSON ---------------------------------------------------------------------

def element_to_json(a: GradedElement) -> dict:
    return {
        "cutoff": a.cutoff,
        "terms": [{"m": m, "n": n, "re": v.real, "im": v.imag} for (m, n), v in sorted(a.terms.items())],
    }


def element_from_json(obj: Mapping) -> GradedElement:
    try:
        terms = {}
        for t in obj["terms"]:
            w = (int(t["m"]), int(t["n"]))
            terms[w] = terms.get(w, 0j) + complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
        cutoff = obj.get("cutoff")
        return GradedElement.from_terms(terms, None if cutoff is None else int(cutoff))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed element record: {exc}") from exc


def matrix_to_json(p: MatrixGradedElement) -> dict:
    return {"dim": p.dim, "entries": [[element_to_json(e) for e in row] for row in p.entries]}


def matrix_from_json(obj: Mapping) -> MatrixGradedElement:
    try:
        entries = [[element_from_json(e) for e in row] for row in obj["entries"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix record: {exc}") from exc
    m = MatrixGradedElement(entries)
    if "dim" in obj and int(obj["dim"]) != m.dim:
        raise ValueError("declared dim does not match entries")
    return m


def load_json(path: str):
    """Read an element or matrix record from a file."""
    with open(path) as fh:
        obj = json.load(fh)
    if "entries" in obj:
        return matrix_from_json(obj)
    return element_from_json(obj)


def dump_json(obj, path: str) -> None:
    rec = matrix_to_json(obj) if isinstance(obj, MatrixGradedElement) else element_to_json(obj)
    with open(path, "w") as fh:
        json.dump(rec, fh, indent=1)
