"""K_0 representatives: the Powers-Rieffel projection and the Bott projection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.special import erf

from .graded import GradedElement, MatrixGradedElement, deformed_product, star


@dataclass(frozen=True)
class BumpProfile:
    """Profile g on [0,1) for the Powers-Rieffel construction.

    g rises on [0, width], equals 1 up to theta, falls on [theta, theta + width]
    with g(t + theta) = 1 - g(t), and vanishes elsewhere; f = sqrt(g - g^2).
    Transitions are g = sin^2(pi s / 2), f = sin(pi s) / 2 where s is an erf
    step of relative width ``sigma``, rescaled to hit 0 and 1 at the ends.
    """

    theta: float
    width: Optional[float] = None
    sigma: float = 0.1
    grid: int = 2 ** 15

    @property
    def eps(self) -> float:
        return min(self.theta, 1.0 - self.theta) if self.width is None else self.width

    def check(self) -> None:
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0,1), got {self.theta}")
        e = self.eps
        if not 0.0 < e <= min(self.theta, 1.0 - self.theta) + 1e-15:
            raise ValueError(f"transition width {e} infeasible for theta={self.theta}; "
                             f"need 0 < width <= {min(self.theta, 1 - self.theta)}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def _step(self, x: np.ndarray) -> np.ndarray:
        c = np.sqrt(2.0) * self.sigma
        lo, hi = erf(-0.5 / c), erf(0.5 / c)
        s = (erf((np.clip(x, 0.0, 1.0) - 0.5) / c) - lo) / (hi - lo)
        return s

    def sample(self):
        """Return (t, g, f) on the uniform grid."""
        self.check()
        th, e = self.theta, self.eps
        t = np.arange(self.grid) / self.grid
        rise = self._step(t / e)
        fall = self._step((t - th) / e)
        g = np.where(t < e, np.sin(0.5 * np.pi * rise) ** 2,
                     np.where(t < th, 1.0,
                              np.where(t < th + e, np.cos(0.5 * np.pi * fall) ** 2, 0.0)))
        f = np.where(t < e, 0.5 * np.sin(np.pi * rise), 0.0)
        return t, g, f

    def fourier(self, M: int):
        """Fourier coefficients (g_k, f_k) for |k| <= M."""
        _, g, f = self.sample()
        k = np.arange(-M, M + 1)
        gh = np.fft.fft(g)[k % self.grid] / self.grid
        fh = np.fft.fft(f)[k % self.grid] / self.grid
        return gh, fh


def _in_v(coeffs: np.ndarray) -> GradedElement:
    M = (len(coeffs) - 1) // 2
    c = np.zeros((2 * M + 1, 2 * M + 1), complex)
    c[M, :] = coeffs
    return GradedElement(c)


def powers_rieffel(theta: float, M: int = 64, profile: Optional[BumpProfile] = None) -> MatrixGradedElement:
    """p = u* f(v) + g(v) + f(v) u with trace theta, as a 1x1 matrix element."""
    prof = profile if profile is not None else BumpProfile(theta)
    if abs(prof.theta - theta) > 0:
        raise ValueError("profile was built for a different theta")
    gh, fh = prof.fourier(M)
    g, f = _in_v(gh), _in_v(fh)
    u = GradedElement.monomial(1, 0)
    us = GradedElement.monomial(-1, 0)
    p = deformed_product(us, f, theta) + g + deformed_product(f, u, theta)
    # hermitian part removes quadrature roundoff; p = p* holds exactly afterwards
    p = 0.5 * (p + star(p))
    return MatrixGradedElement.scalar(p)


def bott_projection(M: int = 8, mass: float = 1.0, grid: int = 256) -> MatrixGradedElement:
    """Rank-one projection (1 + d.sigma)/2 over T^2, d from the two-band lattice model.

    d(x, y) = (sin 2 pi x, sin 2 pi y, mass + cos 2 pi x + cos 2 pi y), normalized;
    for 0 < mass < 2 the first Chern number is +-1.
    """
    if M < 4:
        raise ValueError("Bott projection needs Fourier cutoff M >= 4")
    x = np.arange(grid) / grid
    X, Y = np.meshgrid(x, x, indexing="ij")
    d = np.stack([np.sin(2 * np.pi * X), np.sin(2 * np.pi * Y),
                  mass + np.cos(2 * np.pi * X) + np.cos(2 * np.pi * Y)])
    d /= np.linalg.norm(d, axis=0)
    sx = np.array([[0, 1], [1, 0]], complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0 + 0j, -1.0])
    p = 0.5 * (np.eye(2)[:, :, None, None] + sum(di * s[:, :, None, None] for di, s in zip(d, (sx, sy, sz))))
    ph = np.fft.fft2(p, axes=(2, 3)) / grid ** 2
    idx = np.arange(-M, M + 1) % grid
    arr = ph[:, :, idx[:, None], idx[None, :]]
    bott = MatrixGradedElement.from_array(arr)
    # hermitian symmetrization, exact p = p*
    return 0.5 * (bott + bott.star())


def verify_projection(p, theta: float, tol: float) -> Dict:
    pm = p if isinstance(p, MatrixGradedElement) else MatrixGradedElement.scalar(p)
    idem = pm.product(pm, theta).dist(pm)
    sa = pm.star().dist(pm)
    return {"op": "verify_projection", "theta": theta, "idempotency_defect": idem,
            "selfadjoint_defect": sa, "tol": tol, "pass": bool(max(idem, sa) < tol)}


def defect_curve(theta: float, cutoffs=(8, 16, 32, 64)) -> Dict[int, float]:
    """Idempotency defect of powers_rieffel(theta, M) for each M."""
    out = {}
    for M in cutoffs:
        p = powers_rieffel(theta, M)
        out[M] = p.product(p, theta).dist(p)
    return out
