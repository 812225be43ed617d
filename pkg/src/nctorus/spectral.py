"""Truncated flat spectral triple on the 2-torus.

The Hilbert space is spanned by slots (m, n, s) with |m|, |n| <= N and
s in {+, -}; the slot index is ((m+N)(2N+1) + (n+N)) * 2 + s with s=0 for +.
Operators are scipy.sparse CSR matrices. Most functions also accept the
scalar lattice (no spinor index, ``spinor=False``) and block amplifications
C^d (x) H, where the slot weight is read from ``index mod block size``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .graded import GradedElement, MatrixGradedElement

TWO_PI = 2.0 * np.pi


class ConvergenceError(RuntimeError):
    pass


class WindowError(ValueError):
    """The interior window left after boundary shrinkage is empty."""


@dataclass(frozen=True)
class TruncatedHilbert:
    N: int

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def lattice_dim(self) -> int:
        return self.side ** 2

    @property
    def dim(self) -> int:
        return 2 * self.lattice_dim

    def index(self, m: int, n: int, s: int = 0) -> int:
        return ((m + self.N) * self.side + (n + self.N)) * 2 + s

    def lattice_weights(self) -> Tuple[np.ndarray, np.ndarray]:
        w = np.arange(-self.N, self.N + 1)
        m, n = np.meshgrid(w, w, indexing="ij")
        return m.ravel(), n.ravel()

    def weights(self, spinor: bool = True, blocks: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        m, n = self.lattice_weights()
        if spinor:
            m, n = np.repeat(m, 2), np.repeat(n, 2)
        return np.tile(m, blocks), np.tile(n, blocks)

    @property
    def gamma(self) -> sp.csr_matrix:
        return sp.diags(np.tile([1.0, -1.0], self.lattice_dim)).tocsr()

    def interior(self, radius: int, spinor: bool = True, blocks: int = 1) -> np.ndarray:
        """Boolean mask of slots with |m|, |n| <= radius."""
        m, n = self.weights(spinor, blocks)
        return (np.abs(m) <= radius) & (np.abs(n) <= radius)


@dataclass(frozen=True)
class DiracTruncation:
    D: sp.csr_matrix
    absD: sp.csr_matrix
    F: sp.csr_matrix
    kernel_convention: str = "F = +1 on the two (0,0) slots"


@dataclass(frozen=True)
class GeneratorPair:
    h1: sp.csr_matrix
    h2: sp.csr_matrix


def build_truncation(N: int):
    """Return (hilb, dirac, gens) for the flat Dirac operator at cutoff N."""
    if N < 1:
        raise ValueError("cutoff N must be at least 1")
    hilb = TruncatedHilbert(N)
    m, n = hilb.lattice_weights()
    up = TWO_PI * (-m + 1j * n)  # row +, column -
    lo = -TWO_PI * (m + 1j * n)  # row -, column +
    absk = np.sqrt(m ** 2 + n ** 2)
    idx = np.arange(hilb.lattice_dim) * 2
    D = sp.coo_matrix((np.concatenate([up, lo]), (np.concatenate([idx, idx + 1]), np.concatenate([idx + 1, idx]))),
                      shape=(hilb.dim, hilb.dim)).tocsr()
    absD = sp.diags(np.repeat(TWO_PI * absk, 2)).tocsr()
    safe = np.where(absk > 0, absk, 1.0)
    fu = np.where(absk > 0, (-m + 1j * n) / safe, 0)
    fl = np.where(absk > 0, -(m + 1j * n) / safe, 0)
    kern = np.where(absk > 0, 0.0, 1.0)
    F = sp.coo_matrix((np.concatenate([fu, fl, kern, kern]),
                       (np.concatenate([idx, idx + 1, idx, idx + 1]), np.concatenate([idx + 1, idx, idx, idx + 1]))),
                      shape=(hilb.dim, hilb.dim)).tocsr()
    F.eliminate_zeros()
    mm, nn = hilb.weights()
    gens = GeneratorPair(sp.diags(TWO_PI * 1j * mm.astype(complex)).tocsr(),
                         sp.diags(TWO_PI * 1j * nn.astype(complex)).tocsr())
    return hilb, DiracTruncation(D, absD, F), gens


def torus_unitary(hilb: TruncatedHilbert, t: Tuple[float, float], spinor: bool = True) -> sp.csr_matrix:
    m, n = hilb.weights(spinor)
    return sp.diags(np.exp(TWO_PI * 1j * (m * t[0] + n * t[1]))).tocsr()


def _lattice_rep(a: GradedElement, N: int, spinor: bool):
    side = 2 * N + 1
    w = np.arange(-N, N + 1)
    m, n = np.meshgrid(w, w, indexing="ij")
    m, n = m.ravel(), n.ravel()
    cols = np.arange(side * side)
    rows_all, cols_all, vals_all = [], [], []
    for (p, q), c in sorted(a.terms.items()):
        ok = (np.abs(m + p) <= N) & (np.abs(n + q) <= N)
        r = (m[ok] + p + N) * side + (n[ok] + q + N)
        rows_all.append(r)
        cols_all.append(cols[ok])
        vals_all.append(np.full(r.shape, c, complex))
    dim = side * side
    if not rows_all:
        op = sp.csr_matrix((dim, dim), dtype=complex)
    else:
        op = sp.coo_matrix((np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
                           shape=(dim, dim)).tocsr()
    if spinor:
        op = sp.kron(op, sp.identity(2, dtype=complex, format="csr"), format="csr")
    return op


def represent(a, hilb: TruncatedHilbert, spinor: bool = True) -> sp.csr_matrix:
    """Multiplication operator of a GradedElement (or block operator of a MatrixGradedElement).

    Weight-w terms shift the lattice by w; entries that would leave the
    window are dropped (see :func:`boundary_mask`).
    """
    if isinstance(a, MatrixGradedElement):
        blocks = [[_lattice_rep(e, hilb.N, spinor) for e in row] for row in a.entries]
        return sp.bmat(blocks, format="csr")
    return _lattice_rep(a, hilb.N, spinor)


def boundary_mask(a, hilb: TruncatedHilbert, spinor: bool = True) -> np.ndarray:
    """True on slots whose image under represent(a) lost entries at the boundary."""
    if isinstance(a, MatrixGradedElement):
        radius = a.cutoff
        blocks = a.dim
    else:
        radius = max((max(abs(p), abs(q)) for p, q in a.terms), default=0)
        blocks = 1
    return ~hilb.interior(hilb.N - radius, spinor, blocks)


def lift(T, d: int) -> sp.csr_matrix:
    """1 (x) T on C^d (x) H."""
    return sp.kron(sp.identity(d, format="csr"), sp.csr_matrix(T), format="csr")


def _slot_weights(shape_dim: int, hilb: TruncatedHilbert, spinor: bool):
    block = hilb.dim if spinor else hilb.lattice_dim
    if shape_dim % block:
        raise ValueError(f"operator of size {shape_dim} does not fit blocks of {block}")
    return hilb.weights(spinor, shape_dim // block)


def deform_operator(T, theta: float, hilb: TruncatedHilbert, spinor: bool = True):
    """Entrywise twist: entry (r, c) gains exp(pi i theta (p n_c - m_c q)) with (p, q) = w_r - w_c.

    Diagonal-weight entries get the exact factor 1.
    """
    m, n = _slot_weights(T.shape[0], hilb, spinor)
    if sp.issparse(T):
        X = sp.coo_matrix(T)
        r, c = X.row, X.col
        p, q = m[r] - m[c], n[r] - n[c]
        k = p * n[c] - m[c] * q
        ph = np.ones(len(k), complex)
        nz = k != 0
        ph[nz] = np.exp(1j * np.pi * theta * k[nz])
        return sp.coo_matrix((X.data * ph, (r, c)), shape=X.shape).tocsr()
    T = np.asarray(T)
    p = m[:, None] - m[None, :]
    q = n[:, None] - n[None, :]
    k = p * n[None, :] - m[None, :] * q
    ph = np.where(k == 0, 1.0 + 0j, np.exp(1j * np.pi * theta * k))
    return T * ph


def cl_deform_operator(T, theta: float, hilb: TruncatedHilbert, spinor: bool = True):
    """One-sided twist: entry (r, c) gains exp(2 pi i theta p n_c) with p = m_r - m_c.

    Equals V deform_operator(phi(T)) V* with V = diag exp(pi i theta m n) and phi
    scaling the weight-(p,q) part by exp(-pi i theta p q).
    """
    m, n = _slot_weights(T.shape[0], hilb, spinor)
    X = sp.coo_matrix(T)
    k = (m[X.row] - m[X.col]) * n[X.col]
    ph = np.ones(len(k), complex)
    nz = k != 0
    ph[nz] = np.exp(2j * np.pi * theta * k[nz])
    return sp.coo_matrix((X.data * ph, (X.row, X.col)), shape=X.shape).tocsr()


def weight_component(T, hilb: TruncatedHilbert, w: Tuple[int, int], spinor: bool = True):
    """The weight-w part T_(m,n): entries with row weight minus column weight equal to w."""
    m, n = _slot_weights(T.shape[0], hilb, spinor)
    X = sp.coo_matrix(T)
    keep = (m[X.row] - m[X.col] == w[0]) & (n[X.row] - n[X.col] == w[1])
    return sp.coo_matrix((X.data[keep], (X.row[keep], X.col[keep])), shape=X.shape).tocsr()


def restrict_columns(T, mask: np.ndarray):
    return sp.csr_matrix(T)[:, np.flatnonzero(mask)]


def window_defect(A, B, mask: np.ndarray) -> float:
    """Max entry modulus of A - B over the columns selected by mask."""
    diff = restrict_columns(sp.csr_matrix(A) - sp.csr_matrix(B), mask)
    return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0


def operator_norm(T, tol: float = 1e-10, maxiter: int = 20000, seed: int = 0) -> float:
    """Largest singular value by power iteration on T*T.

    Starts from the normalized all-ones vector; if that lands in the kernel,
    restarts once from a seeded Gaussian vector.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ncol = T.shape[1]
    if ncol == 0:
        return 0.0
    x = np.ones(ncol, complex) / np.sqrt(ncol)
    restarted = False
    lam = 0.0
    for it in range(maxiter):
        y = T @ x
        z = T.conj().T @ y if sp.issparse(T) else np.conj(T).T @ y
        nz = np.linalg.norm(z)
        if nz == 0.0:
            if restarted or np.linalg.norm(y) > 0:
                return float(np.sqrt(max(lam, 0.0)))
            rng = np.random.default_rng(seed)
            x = rng.normal(size=ncol) + 1j * rng.normal(size=ncol)
            x /= np.linalg.norm(x)
            restarted = True
            continue
        new = float(np.real(np.vdot(x, z)))  # Rayleigh quotient of T*T
        x = z / nz
        if it > 0 and abs(new - lam) <= tol * abs(new):
            return float(np.sqrt(new))
        lam = new
    raise ConvergenceError(f"power iteration did not reach relative tol {tol} in {maxiter} steps")


def _comm(A, B):
    return A @ B - B @ A


def seminorm_nu(a: GradedElement, k: int, alpha: Tuple[int, int], hilb: TruncatedHilbert,
                dirac: DiracTruncation, gens: GeneratorPair, tol: float = 1e-12) -> float:
    """nu_{k,alpha}(a) = ||delta^k([h,a]^alpha)|| + ||delta^k([D,[h,a]^alpha])||, delta = [|D|, .]."""
    if k < 0 or min(alpha) < 0:
        raise ValueError("k and alpha must be nonnegative")
    radius = max((max(abs(p), abs(q)) for p, q in a.terms), default=0)
    r = hilb.N - radius - k - alpha[0] - alpha[1]
    if r <= 0:
        need = radius + k + alpha[0] + alpha[1] + 1
        raise WindowError(f"interior window exhausted; need N >= {need}, have N = {hilb.N}")
    X = represent(a, hilb)
    for _ in range(alpha[1]):
        X = _comm(gens.h2, X)
    for _ in range(alpha[0]):
        X = _comm(gens.h1, X)
    Y = _comm(dirac.D, X)
    for _ in range(k):
        X = _comm(dirac.absD, X)
        Y = _comm(dirac.absD, Y)
    mask = hilb.interior(r)
    return operator_norm(restrict_columns(X, mask), tol) + operator_norm(restrict_columns(Y, mask), tol)


def fourth_derivative(T, hilb: TruncatedHilbert, spinor: bool = True):
    """([h1,[h1,.]] + [h2,[h2,.]])^2 applied to T: entry scaled by 16 pi^4 (p^2+q^2)^2."""
    m, n = _slot_weights(T.shape[0], hilb, spinor)
    X = sp.coo_matrix(T)
    p, q = m[X.row] - m[X.col], n[X.row] - n[X.col]
    s = 16 * np.pi ** 4 * (p ** 2 + q ** 2) ** 2
    return sp.coo_matrix((X.data * s, (X.row, X.col)), shape=X.shape).tocsr()


def verify_decay(T, hilb: TruncatedHilbert, window: Optional[int] = None, tol: float = 1e-10,
                 spinor: bool = True) -> Dict:
    """Compare component norms ||T_(m,n)|| with C/(m^2+n^2)^e for e = 1 and 2.

    C = ||L T|| / (16 pi^4) where L is the squared torus Laplacian on operators.
    Norms are taken over columns with |m|, |n| <= window (default: all).
    """
    T = sp.csr_matrix(T)
    m, n = _slot_weights(T.shape[0], hilb, spinor)
    mask = np.ones(T.shape[1], bool) if window is None else (np.abs(m) <= window) & (np.abs(n) <= window)
    C = operator_norm(restrict_columns(fourth_derivative(T, hilb, spinor), mask), tol) / (16 * np.pi ** 4)
    X = T.tocoo()
    disp = set(zip((m[X.row] - m[X.col]).tolist(), (n[X.row] - n[X.col]).tolist()))
    worst = {1: 0.0, 2: 0.0}
    where = {1: None, 2: None}
    comps = {}
    for w in sorted(disp):
        if w == (0, 0):
            continue
        c = operator_norm(restrict_columns(weight_component(T, hilb, w, spinor), mask), tol)
        comps[w] = c
        r2 = w[0] ** 2 + w[1] ** 2
        for e in (1, 2):
            ratio = c * r2 ** e / C if C > 0 else (0.0 if c == 0 else np.inf)
            if ratio > worst[e]:
                worst[e], where[e] = ratio, w
    return {
        "op": "verify_decay",
        "C": C,
        "window": window,
        "worst_ratio_exp2": worst[2],
        "worst_weight_exp2": where[2],
        "worst_ratio_exp1": worst[1],
        "worst_weight_exp1": where[1],
        "holds_exp2": worst[2] <= 1.0,
        "holds_exp1": worst[1] <= 1.0,
        "components": comps,
    }


def zeta_partial(T, s: complex, hilb: TruncatedHilbert, dirac: DiracTruncation) -> complex:
    """Tr(T |D|^{-s}) over the non-kernel slots of the truncation."""
    lam = dirac.absD.diagonal().real
    diag = sp.csr_matrix(T).diagonal() if sp.issparse(T) else np.diagonal(T)
    keep = lam > 0
    return complex(np.sum(diag[keep] * lam[keep] ** (-s)))
