"""Cyclic cochains on the (deformed) torus and their pairings with projections.

A cochain is a base functional (the trace ``tau`` or the Chern character
``ch`` of the Dirac phase) together with an ordered list of derivation
insertions. Evaluation runs over universal forms: each insertion acts as the
interior product by delta_i, a graded derivation with iota(da) = delta(a),
and carries the sign of i_delta phi(a0 da1 ...) = sum_j (-1)^j phi(... delta(a_j) ...).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import product as iproduct
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .graded import GradedElement, MatrixGradedElement, deformed_product
from .spectral import (DiracTruncation, TruncatedHilbert, build_truncation,
                       cl_deform_operator, deform_operator, lift, represent)

TWO_PI_I = 2j * np.pi


class ProjectionError(ValueError):
    def __init__(self, defect: float, tol: float):
        super().__init__(f"input is not a projection: defect {defect:.3e} exceeds {tol:.1e}")
        self.defect = defect


@dataclass(frozen=True)
class CyclicCochain:
    """Structured cochain: base functional plus derivation insertions.

    ``insertions`` lists derivation indices (1 or 2) innermost first, so
    contract(contract(tau, 2), 1) has insertions (2, 1).
    """

    base: str = "tau"
    base_degree: int = 0
    insertions: Tuple[int, ...] = ()
    theta: float = 0.0
    amp: int = 1

    @property
    def degree(self) -> int:
        return self.base_degree + len(self.insertions)

    @property
    def label(self) -> str:
        core = "tau" if self.base == "tau" else f"ch{self.base_degree}"
        for i in self.insertions:
            core = f"i_d{i}({core})"
        return core


TAU = CyclicCochain()


def chern_cochain(n: int) -> CyclicCochain:
    if n % 2:
        raise ValueError("Chern cocycles are defined for even degree only")
    return CyclicCochain(base="ch", base_degree=n)


def contract(phi: CyclicCochain, delta: int) -> CyclicCochain:
    if phi.base not in ("tau", "ch"):
        raise ValueError(f"unsupported base functional {phi.base!r}")
    if delta not in (1, 2):
        raise ValueError("derivation tag must be 1 or 2")
    return replace(phi, insertions=phi.insertions + (delta,))


def double_contraction(phi: CyclicCochain = TAU) -> CyclicCochain:
    """i_{delta1} i_{delta2} phi."""
    return contract(contract(phi, 2), 1)


# backends -------------------------------------------------------------------

class GradedBackend:
    """Elements or matrices of elements under the theta-deformed product."""

    def __init__(self, theta: float = 0.0):
        self.theta = theta

    def mul(self, x, y):
        if isinstance(x, MatrixGradedElement):
            return x.product(y, self.theta)
        return deformed_product(x, y, self.theta)

    def deriv(self, i: int, x):
        if isinstance(x, MatrixGradedElement):
            return x.map(lambda e: self.deriv(i, e))
        w = np.arange(-x.cutoff, x.cutoff + 1)
        f = w[:, None] if i == 1 else w[None, :]
        return GradedElement(TWO_PI_I * f * x.coef, x.tail)

    def trace(self, x) -> complex:
        return x.trace()

    def dmap(self, x):
        raise ValueError("the Chern base needs an operator backend")


class OperatorBackend:
    """Truncated operators; derivations are [h_i, .].

    ``tau`` is the vacuum expectation at slot (0,0,+) (summed over bundle
    blocks), ``ch`` uses the gamma-graded trace with the phase F.
    Operators of lattice size (no spinor index) are read as A (x) 1.
    """

    def __init__(self, hilb: TruncatedHilbert, dirac: Optional[DiracTruncation] = None,
                 spinor: bool = True, dense: bool = False):
        if dirac is None:
            dirac = build_truncation(hilb.N)[1]
        self.hilb, self.spinor, self.dense = hilb, spinor, dense
        m, n = hilb.weights(spinor)
        self._h = {1: 2j * np.pi * m, 2: 2j * np.pi * n}
        self.dirac = dirac
        self.block = hilb.dim if spinor else hilb.lattice_dim

    def mul(self, x, y):
        return x @ y

    def deriv(self, i: int, x):
        h = np.tile(self._h[i], x.shape[0] // self.block)
        if sp.issparse(x):
            X = x.tocoo()
            return sp.coo_matrix(((h[X.row] - h[X.col]) * X.data, (X.row, X.col)), shape=X.shape).tocsr()
        return (h[:, None] - h[None, :]) * x

    def trace(self, x) -> complex:
        vac = self.hilb.index(0, 0, 0) if self.spinor else self.hilb.index(0, 0, 0) // 2
        blocks = x.shape[0] // self.block
        return complex(sum(x[b * self.block + vac, b * self.block + vac] for b in range(blocks)))

    def _F(self, d: int):
        F = lift(self.dirac.F, d)
        return F.toarray() if self.dense else F

    def dmap(self, x):
        if not self.spinor:
            raise ValueError("the Chern base needs spinor operators")
        F = self._F(x.shape[0] // self.block)
        return F @ x - x @ F

    def graded_trace(self, x) -> complex:
        diag = x.diagonal() if sp.issparse(x) else np.diagonal(x)
        g = np.tile([1.0, -1.0], len(diag) // 2)
        return complex(np.sum(g * diag))


# evaluation ---------------------------------------------------------------

def _apply_iota(forms, delta: int, backend):
    out = []
    for coef, factors in forms:
        seen = 0
        for pos, (kind, obj) in enumerate(factors):
            if kind != "d":
                continue
            new = list(factors)
            new[pos] = ("x", backend.deriv(delta, obj))
            out.append((coef * (-1) ** seen, new))
            seen += 1
    return out


def _product(factors, backend):
    acc = factors[0]
    for f in factors[1:]:
        acc = backend.mul(acc, f)
    return acc


def evaluate(phi: CyclicCochain, args: Sequence[Any], backend=None) -> complex:
    """Evaluate phi(a0, ..., an) = phi(a0 da1 ... dan)."""
    if len(args) != phi.degree + 1:
        raise ValueError(f"{phi.label} takes {phi.degree + 1} arguments, got {len(args)}")
    if backend is None:
        backend = GradedBackend(phi.theta)
    forms = [(1.0, [("x", args[0])] + [("d", a) for a in args[1:]])]
    for delta in reversed(phi.insertions):
        forms = [(-c, f) for c, f in _apply_iota(forms, delta, backend)]
    total = 0j
    for coef, factors in forms:
        if phi.base == "tau":
            if any(k == "d" for k, _ in factors):
                continue
            total += coef * backend.trace(_product([o for _, o in factors], backend))
        else:
            ops = [backend.dmap(o) if k == "d" else o for k, o in factors]
            total += coef * backend.graded_trace(_product(ops, backend))
    return complex(total)


def trace_tau(a) -> complex:
    return a.trace()


def closed_form_double(args: Sequence[GradedElement], theta: float = 0.0) -> complex:
    """tau(a0 (d1 a1 d2 a2 - d2 a1 d1 a2)) for i_{delta1} i_{delta2} tau."""
    be = GradedBackend(theta)
    a0, a1, a2 = args
    x = be.mul(be.deriv(1, a1), be.deriv(2, a2)) - be.mul(be.deriv(2, a1), be.deriv(1, a2))
    return complex(be.trace(be.mul(a0, x)))


def deformed_cocycle_eval(phi: CyclicCochain, theta: float, args: Sequence[GradedElement]) -> complex:
    """phi^(theta) by the weight-sum formula with one-sided phases.

    Sums phi((a0)_(m0,l0), b1, ..., bn) over weight tuples with sum m = sum l = 0,
    where b_k = exp(2 pi i theta (m_0 + ... + m_{k-1}) l_k) (a_k)_(m_k,l_k) and phi
    is evaluated undeformed.
    """
    if len(args) != phi.degree + 1:
        raise ValueError("argument count does not match cochain degree")
    base = replace(phi, theta=0.0)
    comps = [sorted(a.terms.items()) for a in args]
    total = 0j
    for combo in iproduct(*comps):
        if sum(w[0] for w, _ in combo) or sum(w[1] for w, _ in combo):
            continue
        parts = []
        msum = 0
        for k, ((m, l), c) in enumerate(combo):
            ph = np.exp(2j * np.pi * theta * msum * l) if k else 1.0
            parts.append(GradedElement.monomial(m, l, c * ph))
            msum += m
        total += evaluate(base, parts)
    return complex(total)


def operator_side_eval(phi: CyclicCochain, theta: float, args: Sequence[GradedElement],
                       hilb: Optional[TruncatedHilbert] = None) -> complex:
    """Evaluate the undeformed cochain on the one-sided deformed operators of the args."""
    if hilb is None:
        radius = sum(max((max(abs(p), abs(q)) for p, q in a.terms), default=0) for a in args)
        hilb = TruncatedHilbert(max(radius, 1))
    be = OperatorBackend(hilb, spinor=False)
    ops = [cl_deform_operator(represent(a, hilb, spinor=False), theta, hilb, spinor=False) for a in args]
    return evaluate(replace(phi, theta=0.0), ops, be)


def combined_cocycle_eval(phi: CyclicCochain, theta: float, args: Sequence[Any],
                          args2: Optional[Sequence[Any]] = None, backend=None) -> complex:
    """phi(args) + theta * (i_{delta1} i_{delta2} phi)(args2).

    When every argument is the same projection, args2 defaults to the
    matching tuple of length n + 3.
    """
    phi0 = replace(phi, theta=0.0)
    if len(args) != phi0.degree + 1:
        raise ValueError("degree mismatch for the first summand")
    if args2 is None:
        if any(a is not args[0] for a in args):
            raise ValueError("args2 is required unless all arguments coincide")
        args2 = [args[0]] * (phi0.degree + 3)
    if len(args2) != phi0.degree + 3:
        raise ValueError("degree mismatch for the contracted summand")
    return evaluate(phi0, args, backend) + theta * evaluate(double_contraction(phi0), args2, backend)




def chern_cocycle_eval(n: int, dirac: DiracTruncation, args: Sequence[Any],
                       hilb: Optional[TruncatedHilbert] = None, spinor: bool = True) -> complex:
    """Tr_s(gamma f0 [F,f1] ... [F,fn]) over the full truncated window.

    With ``spinor=False`` the arguments are lattice operators A, read as A (x) 1;
    for n = 2 this uses the reduced form Tr(A0 [b+,A1][b-,A2]) - Tr(A0 [b-,A1][b+,A2])
    where b+- are the off-diagonal blocks of F (the kernel blocks cancel).
    """
    if n % 2:
        raise ValueError("Chern cocycles need even degree")
    if len(args) != n + 1:
        raise ValueError(f"expected {n + 1} arguments")
    if hilb is None:
        side = int(round(np.sqrt(dirac.F.shape[0] // 2)))
        hilb = TruncatedHilbert((side - 1) // 2)
    if spinor:
        be = OperatorBackend(hilb, dirac, spinor=True, dense=not sp.issparse(args[0]))
        return evaluate(chern_cochain(n), list(args), be)
    if n == 0:
        return 0j
    if n != 2:
        ops = [sp.kron(sp.csr_matrix(a), sp.identity(2), format="csr") for a in args]
        return chern_cocycle_eval(n, dirac, ops, hilb)
    d = args[0].shape[0] // hilb.lattice_dim
    bp, bm = _phase_blocks(dirac.F, d)
    A0, A1, A2 = (sp.csr_matrix(a) for a in args)
    X1p, X1m = bp @ A1 - A1 @ bp, bm @ A1 - A1 @ bm
    X2p, X2m = bp @ A2 - A2 @ bp, bm @ A2 - A2 @ bm
    t1 = (A0 @ X1p).multiply(X2m.T).sum()
    t2 = (A0 @ X1m).multiply(X2p.T).sum()
    return complex(t1 - t2)


def _phase_blocks(F, d: int):
    Fc = sp.csr_matrix(F)
    eye = sp.identity(d, format="csr")
    return sp.kron(eye, Fc[0::2, 1::2], format="csr"), sp.kron(eye, Fc[1::2, 0::2], format="csr")


# pairings -------------------------------------------------------------------

@dataclass
class PairingReport:
    cocycle: str
    theta: float
    value: complex
    normalized: complex
    integer_distance: float = field(init=False)

    def __post_init__(self):
        self.integer_distance = float(abs(self.normalized - round(self.normalized.real)))

    @property
    def nearest_integer(self) -> int:
        return int(round(self.normalized.real))

    def to_json(self) -> dict:
        return {
            "cocycle": self.cocycle,
            "theta": self.theta,
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "normalized": self.normalized.real,
            "integer_distance": self.integer_distance,
        }


def _as_matrix(p) -> MatrixGradedElement:
    return p if isinstance(p, MatrixGradedElement) else MatrixGradedElement.scalar(p)


def projection_defect(p, theta: float) -> float:
    return _as_matrix(p).projection_defect(theta)


def lattice_operator(p, theta: float, hilb: TruncatedHilbert):
    """The deformed lattice operator of a (matrix) element."""
    return deform_operator(represent(_as_matrix(p), hilb, spinor=False), theta, hilb, spinor=False)


def chern_normalization(N: int, bott_cutoff: int = 8, index_N: int = 16) -> float:
    """Constant c with ch2(p, p, p) = c * index(p), calibrated on the Bott projection.

    ch2 is evaluated at cutoff N; the index comes from fredholm_index_oracle at index_N.
    Cached per (N, bott_cutoff, index_N).
    """
    return _chern_normalization(int(N), int(bott_cutoff), int(index_N))


@lru_cache(maxsize=8)
def _chern_normalization(N: int, bott_cutoff: int, index_N: int) -> float:
    from .projections import bott_projection
    bott = bott_projection(bott_cutoff)
    idx = fredholm_index_oracle(bott, 0.0, index_N)
    if not idx.reliable or idx.index == 0:
        raise RuntimeError("Bott calibration failed: index oracle not conclusive")
    hilb, dirac, _ = build_truncation(N)
    P = lattice_operator(bott, 0.0, hilb)
    val = chern_cocycle_eval(2, dirac, (P, P, P), hilb, spinor=False)
    return float(val.real / idx.index)


def k0_pairing(phi: CyclicCochain, p, theta: float, N: int = 32, tol: float = 1e-6,
               bott_cutoff: int = 8) -> PairingReport:
    """Pair a cochain with the class of the projection p (a projection for the theta-product).

    tau-based cochains are evaluated on (p, ..., p) in the algebra, with
    (2 pi i)^{-k/2} for k derivation insertions; the Chern cochain ch2 is
    evaluated on the deformed lattice operator at cutoff N and divided by the
    Bott-calibrated constant.
    """
    pm = _as_matrix(p)
    defect = pm.projection_defect(theta)
    if defect > tol:
        raise ProjectionError(defect, tol)
    if phi.base == "tau":
        val = evaluate(replace(phi, theta=theta), [pm] * (phi.degree + 1), GradedBackend(theta))
        norm = val / TWO_PI_I ** (len(phi.insertions) // 2) if phi.insertions else val
        return PairingReport(phi.label, theta, complex(val), complex(norm))
    if phi.base == "ch" and phi.base_degree == 2 and not phi.insertions:
        hilb, dirac, _ = build_truncation(N)
        P = lattice_operator(pm, theta, hilb)
        val = chern_cocycle_eval(2, dirac, (P, P, P), hilb, spinor=False)
        c = chern_normalization(N, bott_cutoff)
        return PairingReport(phi.label, theta, val, complex(val / c))
    raise ValueError(f"no pairing rule for {phi.label}")


def combined_pairing(p, theta: float, tol: float = 1e-6) -> PairingReport:
    """<tau + theta i_{delta1} i_{delta2} tau, [p]> for p a projection at theta = 0."""
    pm = _as_matrix(p)
    defect = pm.projection_defect(0.0)
    if defect > tol:
        raise ProjectionError(defect, tol)
    be = GradedBackend(0.0)
    t0 = evaluate(TAU, [pm], be)
    t2 = evaluate(double_contraction(TAU), [pm] * 3, be)
    val = t0 + theta * t2
    return PairingReport("tau+theta*i_d1(i_d2(tau))", theta, complex(val), complex(t0 + theta * t2 / TWO_PI_I))


@dataclass
class IndexReport:
    index: int
    reliable: bool
    kernel: int
    cokernel: int
    ambiguous: List[float]
    N: int
    rank: int

    def to_json(self) -> dict:
        return {"index": self.index, "reliable": self.reliable, "kernel": self.kernel,
                "cokernel": self.cokernel, "ambiguous": self.ambiguous, "N": self.N, "rank": self.rank}


def fredholm_index_oracle(p, theta: float, N: int, threshold: float = 0.5) -> IndexReport:
    """Index of the compression P F+ P : P H+ -> P H- at cutoff N.

    P is the deformed lattice operator of p, sharpened to its spectral
    projection at 1/2. F+ is the (-,+) block of the Dirac phase, completed by
    1 on the kernel slot so that it is unitary. Singular vectors of
    B* F+ B below ``threshold`` count as kernel (right) or cokernel (left)
    when most of their mass lies in the interior |m|, |n| <= N/2; boundary
    modes are truncation artefacts. Singular values in [0.25, 0.75] that
    contribute to only one side make the result unreliable.
    """
    pm = _as_matrix(p)
    hilb = TruncatedHilbert(N)
    P = lattice_operator(pm, theta, hilb).toarray()
    P = 0.5 * (P + P.conj().T)
    _, B = sla.eigh(P, subset_by_value=(threshold, np.inf), driver="evr")
    m, n = hilb.weights(spinor=False, blocks=pm.dim)
    absk = np.sqrt(m ** 2 + n ** 2)
    fplus = np.where(absk > 0, -(m + 1j * n) / np.where(absk > 0, absk, 1.0), 1.0)
    T = B.conj().T @ (fplus[:, None] * B)
    U, s, Vh = np.linalg.svd(T)
    inner = (np.abs(m) <= N / 2) & (np.abs(n) <= N / 2)

    def interior_mass(vecs):
        X = B @ vecs
        return np.sum(np.abs(X[inner]) ** 2, axis=0)

    small = np.flatnonzero(s < threshold)
    kern = interior_mass(Vh.conj().T[:, small]) > 0.5
    coker = interior_mass(U[:, small]) > 0.5
    ambiguous = [float(x) for x, a, b in zip(s[small], kern, coker) if 0.25 <= x <= 0.75 and a != b]
    return IndexReport(int(kern.sum() - coker.sum()), not ambiguous, int(kern.sum()), int(coker.sum()),
                       ambiguous, N, B.shape[1])
