"""Runners for the acceptance criteria and the invariant suite.

Each runner returns a record with the measured quantity, its tolerance and
a pass flag; the CLI ``verify`` command and the test-suite share them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import graded as G
from . import spectral as S
from .cocycles import (TAU, GradedBackend, OperatorBackend, chern_cochain, chern_normalization,
                       closed_form_double, combined_pairing, contract, deformed_cocycle_eval,
                       double_contraction, evaluate, fredholm_index_oracle, k0_pairing,
                       lattice_operator, operator_side_eval)
from .crossed import (CrossedElement, bimodule_check, crossed_multiply, inverse_kernel_map, kernel_map,
                      kernel_map_element, u0_conjugation_check)
from .projections import bott_projection, powers_rieffel

THETA_GRID = (0.25, 1.0 / 3.0, 0.7)


@dataclass
class Settings:
    theta_grid: Sequence[float] = THETA_GRID
    seed: int = 0
    index_cutoff: int = 24
    chern_cutoff: int = 32
    fourier_cutoff: int = 64
    bott_cutoff: int = 8
    window: int = 8
    product: Callable = G.deformed_product


@dataclass
class Record:
    criterion: int
    name: str
    value: float
    tol: float
    passed: bool
    detail: Dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tag = f"criterion {self.criterion:2d}" if self.criterion else "invariant"
        return f"[{status}] {tag} {self.name}: {self.value:.3e} (tol {self.tol:.1e}, {self.seconds:.1f}s)"

    def to_json(self) -> Dict:
        return {"criterion": self.criterion, "name": self.name, "value": self.value, "tol": self.tol,
                "pass": self.passed, "seconds": self.seconds, "detail": _plain(self.detail)}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _timed(fn):
    def run(settings: Optional[Settings] = None) -> Record:
        t0 = time.perf_counter()
        rec = fn(settings or Settings())
        rec.seconds = time.perf_counter() - t0
        return rec
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def buggy_product(a, b, theta, max_cutoff=None):
    """Deliberately wrong phase (squared exponent) used by the mutation check."""
    Na, Nb = a.cutoff, b.cutoff
    out = np.zeros((2 * (Na + Nb) + 1,) * 2, complex)
    w = np.arange(-Nb, Nb + 1)
    side = 2 * Nb + 1
    for i, j in zip(*np.nonzero(a.coef)):
        m, n = int(i) - Na, int(j) - Na
        k = m * w[None, :] - w[:, None] * n
        out[i:i + side, j:j + side] += a.coef[i, j] * np.exp(1j * np.pi * theta * k ** 2) * b.coef
    return G.GradedElement(out)


@_timed
def criterion_1(st: Settings) -> Record:
    """u *_theta v = e^{2 pi i theta} v *_theta u."""
    u, v = G.GradedElement.monomial(1, 0), G.GradedElement.monomial(0, 1)
    worst = 0.0
    for th in (0.1, 0.25, 1 / 3, 0.7):
        d = st.product(u, v, th).dist(st.product(v, u, th) * np.exp(2j * np.pi * th))
        worst = max(worst, d)
    return Record(1, "torus relation", worst, 1e-12, worst < 1e-12)


@_timed
def criterion_2(st: Settings) -> Record:
    """Associativity and star anti-homomorphism on 100 random triples."""
    rng = np.random.default_rng(st.seed)
    prod = st.product
    assoc = anti = 0.0
    for _ in range(100):
        th = float(rng.uniform(-1, 1))
        a, b, c = (G.GradedElement.random(rng, 5, 3) for _ in range(3))
        assoc = max(assoc, prod(prod(a, b, th), c, th).dist(prod(a, prod(b, c, th), th)))
        anti = max(anti, G.star(prod(a, b, th)).dist(prod(G.star(b), G.star(a), th)))
    worst = max(assoc, anti)
    return Record(2, "associativity / star", worst, 1e-12, worst < 1e-12,
                  {"associativity": assoc, "star": anti})


@_timed
def criterion_3(st: Settings) -> Record:
    """a^(theta) b^(theta) = (a *_theta b)^(theta) on the interior window at N = 16."""
    rng = np.random.default_rng(st.seed + 3)
    hilb = S.TruncatedHilbert(16)
    worst = 0.0
    for th in st.theta_grid:
        for _ in range(4):
            a, b = G.GradedElement.random(rng, 5, 2), G.GradedElement.random(rng, 5, 2)
            A = S.deform_operator(S.represent(a, hilb), th, hilb)
            B = S.deform_operator(S.represent(b, hilb), th, hilb)
            C = S.deform_operator(S.represent(G.deformed_product(a, b, th), hilb), th, hilb)
            mask = hilb.interior(hilb.N - a.cutoff - b.cutoff)
            worst = max(worst, S.window_defect(A @ B, C, mask))
    return Record(3, "operator product compatibility", worst, 1e-10, worst < 1e-10)


@_timed
def criterion_4(st: Settings) -> Record:
    """Deforming by theta then theta' equals deforming by theta + theta'."""
    rng = np.random.default_rng(st.seed + 4)
    hilb = S.TruncatedHilbert(8)
    worst = 0.0
    for th, th2 in [(0.25, 0.1), (1 / 3, 0.37), (0.7, -0.45)]:
        a, b = G.GradedElement.random(rng, 5, 2), G.GradedElement.random(rng, 5, 2)
        A, B = S.represent(a, hilb), S.represent(b, hilb)
        twice = lambda X: S.deform_operator(S.deform_operator(X, th, hilb), th2, hilb)
        once = lambda X: S.deform_operator(X, th + th2, hilb)
        lhs = twice(A) @ twice(B)
        worst = max(worst, abs(lhs - once(A) @ once(B)).max())
        C = once(S.represent(G.deformed_product(a, b, th + th2), hilb))
        worst = max(worst, S.window_defect(lhs, C, hilb.interior(hilb.N - 4)))
        T = A @ B
        worst = max(worst, abs(twice(T) - once(T)).max())
    return Record(4, "iterated deformation", worst, 1e-12, worst < 1e-12)


@_timed
def criterion_5(st: Settings) -> Record:
    """zeta_partial is bit-identical under deformation."""
    rng = np.random.default_rng(st.seed + 5)
    hilb, dirac, _ = S.build_truncation(8)
    mismatches = 0
    checked = 0
    for _ in range(20):
        a, b, c = (G.GradedElement.random(rng, 6, 3) for _ in range(3))
        T = S.represent(a, hilb) @ S.represent(b, hilb) + S.represent(c, hilb)
        th = float(rng.uniform(0, 1))
        Td = S.deform_operator(T, th, hilb)
        for s in (3, 4, 5 + 2j):
            checked += 1
            if S.zeta_partial(Td, s, hilb, dirac) != S.zeta_partial(T, s, hilb, dirac):
                mismatches += 1
    return Record(5, "zeta invariance (bitwise)", float(mismatches), 0.5, mismatches == 0, {"checked": checked})


@_timed
def criterion_6(st: Settings) -> Record:
    """Component decay against the fourth-derivative bound at N = 32."""
    rng = np.random.default_rng(st.seed + 6)
    hilb = S.TruncatedHilbert(32)
    R = 6
    w = np.arange(-R, R + 1)
    worst2 = worst1 = 0.0
    comp_err = 0.0
    for scale in (2.0, 4.0):
        coef = np.exp(-(w[:, None] ** 2 + w[None, :] ** 2) / scale) * np.exp(2j * np.pi * rng.uniform(size=(2 * R + 1,) * 2))
        a = G.GradedElement(coef)
        rep = S.verify_decay(S.represent(a, hilb), hilb, window=hilb.N - R, tol=1e-9)
        worst2 = max(worst2, rep["worst_ratio_exp2"])
        worst1 = max(worst1, rep["worst_ratio_exp1"])
        comp_err = max(comp_err, max(abs(c - abs(a[wt])) for wt, c in rep["components"].items()))
    return Record(6, "decay bound (exponent 2)", worst2, 1.0, worst2 <= 1.0,
                  {"worst_ratio_exp1": worst1, "holds_exp1": worst1 <= 1.0, "component_norm_error": comp_err})


@_timed
def criterion_7(st: Settings) -> Record:
    """tau(p_PR(theta)) = theta at M = 64."""
    worst = 0.0
    traces = {}
    for th in st.theta_grid:
        p = powers_rieffel(th, st.fourier_cutoff)
        r = k0_pairing(TAU, p, th, tol=1e-8)
        traces[th] = r.value.real
        worst = max(worst, abs(r.value - th))
    one = k0_pairing(TAU, G.MatrixGradedElement.identity(1), 0.3).value
    worst = max(worst, abs(one - 1))
    return Record(7, "trace pairing Z + theta Z", worst, 1e-6, worst < 1e-6, {"traces": traces, "tau(1)": one})


@_timed
def criterion_8(st: Settings) -> Record:
    """Index of p_PR(theta) is theta-independent; normalized ch2 pairing agrees."""
    indices = {}
    reliable = True
    dist = 0.0
    pairings = {}
    for th in st.theta_grid:
        p = powers_rieffel(th, st.fourier_cutoff)
        idx = fredholm_index_oracle(p, th, st.index_cutoff)
        indices[th] = idx.index
        reliable &= idx.reliable
        r = k0_pairing(chern_cochain(2), p, th, N=st.chern_cutoff, tol=1e-8, bott_cutoff=st.bott_cutoff)
        pairings[th] = r.normalized.real
        dist = max(dist, abs(r.normalized - idx.index))
    same = len(set(indices.values())) == 1 and reliable
    return Record(8, "index invariance", dist, 5e-3, same and dist < 5e-3,
                  {"indices": indices, "normalized_ch2": pairings, "reliable": reliable,
                   "chern_constant": chern_normalization(st.chern_cutoff, st.bott_cutoff)})


@_timed
def criterion_9(st: Settings) -> Record:
    """Bott: index +-1 at N = 16; combined pairing 1 +- theta."""
    bott = bott_projection(st.bott_cutoff)
    idx = fredholm_index_oracle(bott, 0.0, 16)
    c1 = combined_pairing(bott, 1.0, tol=1e-3).normalized - 1.0
    sign = round(c1.real)
    worst = 0.0
    values = {}
    for th in st.theta_grid:
        r = combined_pairing(bott, th, tol=1e-3)
        values[th] = r.normalized.real
        worst = max(worst, abs(r.normalized - (1 + sign * th)))
    ok = abs(idx.index) == 1 and idx.reliable and abs(sign) == 1 and worst < 1e-4
    return Record(9, "Bott calibration", worst, 1e-4, ok, {"index": idx.index, "c1": sign, "pairings": values})


@_timed
def criterion_10(st: Settings) -> Record:
    """Kernel map homomorphism / closed form, U0 identities."""
    K = L = st.window
    th = 0.37
    closed = 0.0
    for n in range(-K, K + 1):
        for l in range(-L, L + 1):
            for p, q in [(2, 1), (0, 1), (-1, 2), (1, -1)]:
                X = kernel_map(n, l, G.GradedElement.monomial(p, q), th)
                want = G.GradedElement.monomial(p, q, np.exp(2j * np.pi * th * l * q))
                if set(X.entries) != {(n - l, p - l)}:
                    closed = np.inf
                    continue
                closed = max(closed, X.entries[(n - l, p - l)].dist(want))
                back = inverse_kernel_map(X, th, K, L)
                closed = max(closed, back.dist(CrossedElement.generator(n, l, G.GradedElement.monomial(p, q), K, L)))
    hom = 0.0
    weights = [(p, q) for p in (-1, 0, 1) for q in (-1, 0, 1)]
    gens = [(n, l, w) for n in range(-2, 3) for l in range(-2, 3) for w in weights]
    for n1, l1, w1 in gens:
        x = CrossedElement.generator(n1, l1, G.GradedElement.monomial(*w1), K, L)
        kx = kernel_map_element(x, th)
        for n2, l2, w2 in gens:
            y = CrossedElement.generator(n2, l2, G.GradedElement.monomial(*w2), K, L)
            lhs = kernel_map_element(crossed_multiply(x, y, th), th)
            hom = max(hom, lhs.dist(kx.matmul(kernel_map_element(y, th), th)))
    u0 = 0.0
    for p in (-1, 0, 1):
        for q in (-1, 0, 1):
            for l in (-2, 0, 3):
                r = u0_conjugation_check(p, q, l, th, K=K, N=2)
                u0 = max(u0, r["defect_zla"], r["defect_w"], r["defect_D"])
    worst = max(closed, hom, u0)
    return Record(10, "crossed products", worst, 1e-12, worst < 1e-12,
                  {"closed_form": closed, "homomorphism": hom, "u0": u0})


def _zero_sum_triples(total: int):
    ws = [(m, n) for m in range(-total, total + 1) for n in range(-total, total + 1) if abs(m) + abs(n) <= total]
    for w0 in ws:
        for w1 in ws:
            w2 = (-w0[0] - w1[0], -w0[1] - w1[1])
            if sum(abs(c) for w in (w0, w1, w2) for c in w) <= total:
                yield w0, w1, w2


@_timed
def criterion_11(st: Settings) -> Record:
    """Deformed cocycle formula vs operator side on homogeneous triples of total weight <= 6."""
    th = 0.37
    worst = 0.0
    count = 0
    hilb = S.TruncatedHilbert(6)
    phis = [double_contraction(TAU), contract(contract(TAU, 1), 2)]
    for w0, w1, w2 in _zero_sum_triples(6):
        args = [G.GradedElement.monomial(*w) for w in (w0, w1, w2)]
        for phi in phis:
            a = deformed_cocycle_eval(phi, th, args)
            b = operator_side_eval(phi, th, args, hilb)
            worst = max(worst, abs(a - b))
        count += 1
    # one non-zero-sum triple: both sides vanish
    args = [G.GradedElement.monomial(1, 0)] * 3
    worst = max(worst, abs(deformed_cocycle_eval(phis[0], th, args)), abs(operator_side_eval(phis[0], th, args, hilb)))
    return Record(11, "deformed cocycle consistency", worst, 1e-11, worst < 1e-11, {"triples": count})


@_timed
def criterion_12(st: Settings) -> Record:
    """i_d1 i_d2 tau pairs to a nonzero integer with Bott; i_d1 i_d2 ch_D pairing vanishes."""
    bott = bott_projection(st.bott_cutoff)
    r = k0_pairing(double_contraction(TAU), bott, 0.0, tol=1e-3)
    nonzero_int = r.nearest_integer != 0 and r.integer_distance < 1e-4
    hilb, dirac, _ = S.build_truncation(6)
    P = S.represent(bott, hilb).toarray()
    be = OperatorBackend(hilb, dirac, spinor=True, dense=True)
    iich = evaluate(double_contraction(chern_cochain(2)), [P] * 5, be)
    c = chern_normalization(st.chern_cutoff, st.bott_cutoff)
    contrib = max(abs(th * iich / c) for th in st.theta_grid)
    return Record(12, "contracted cocycles", contrib, 5e-3, nonzero_int and contrib < 5e-3,
                  {"i_d1_i_d2_tau_normalized": r.normalized.real, "i_d1_i_d2_ch_raw": iich})


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


# invariant suite ------------------------------------------------------------

def invariant_suite(seed: int = 0) -> List[Record]:
    """Quick checks of module-level invariants not covered by the criteria."""
    rng = np.random.default_rng(seed)
    out = []
    th = 0.37
    a, b = G.GradedElement.random(rng, 6, 2), G.GradedElement.random(rng, 6, 2)
    d = abs(G.deformed_product(a, b, th).trace() - G.deformed_product(b, a, th).trace())
    out.append(Record(0, "trace property", d, 1e-12, d < 1e-12))
    d = G.deformed_product(a, b, 0.0).dist(G.deformed_product(b, a, 0.0))
    out.append(Record(0, "commutative at theta=0", d, 1e-12, d < 1e-12))
    args = [G.GradedElement.monomial(*map(int, rng.integers(-2, 3, 2)), 1.0) for _ in range(2)]
    args.append(G.GradedElement.monomial(-args[0].support()[0][0] - args[1].support()[0][0],
                                         -args[0].support()[0][1] - args[1].support()[0][1]))
    phi = double_contraction(TAU)
    cyc = abs(evaluate(phi, args) - evaluate(phi, [args[2], args[0], args[1]]))
    out.append(Record(0, "cyclic symmetry", cyc, 1e-10, cyc < 1e-10))
    x = [G.GradedElement.random(rng, 4, 2) for _ in range(3)]
    lf = abs(evaluate(phi, x) - closed_form_double(x))
    out.append(Record(0, "Leibniz closed form", lf, 1e-9, lf < 1e-9))
    bm = bimodule_check(th, seed=seed)
    out.append(Record(0, "bimodule structure", max(v for k, v in bm.items() if isinstance(v, float) and k != "theta"),
                      1e-12, bm["pass"]))
    hilb, dirac, gens = S.build_truncation(4)
    Dm = dirac.D.toarray()
    g = hilb.gamma.toarray()
    odd = np.abs(g @ Dm @ g + Dm).max()
    out.append(Record(0, "Dirac odd", odd, 0.0, odd == 0.0))
    return out
