"""Polar decomposition, Lyapunov solves and derivatives of polar factors.

For a square ``m`` with full rank, the left polar decomposition is
``m = sigma @ u`` with ``sigma`` symmetric positive definite and ``u``
orthogonal. ``L_sigma(X) = sigma X + X sigma`` is inverted in the
eigenbasis of ``sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambient import asym
from .errors import NearSingular

PD_TOL = 1e-10


@dataclass(frozen=True)
class PolarFactors:
    """Factors of ``m = sigma @ u``.

    Attributes
    ----------
    sigma : ndarray
        Symmetric positive definite factor ``(m m^T)^{1/2}``.
    u : ndarray
        Orthogonal factor.
    eigvals, eigvecs : ndarray
        Spectral decomposition of ``sigma``.
    min_sv : float
        Smallest singular value of ``m``.
    """

    sigma: np.ndarray
    u: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    min_sv: float

    @property
    def lyapunov(self):
        return LyapunovOperator(self.eigvals, self.eigvecs)


def polar_decompose(m, pd_tol=PD_TOL):
    """Left polar decomposition through an SVD.

    Raises
    ------
    NearSingular
        If the smallest singular value is at most ``pd_tol * ||m||_2``.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    w, s, zt = np.linalg.svd(m)
    if s[-1] <= pd_tol * max(s[0], np.finfo(float).tiny):
        raise NearSingular(f"matrix is numerically singular (min sv {s[-1]:.3e})")
    sigma = (w * s) @ w.T
    sigma = 0.5 * (sigma + sigma.T)
    return PolarFactors(sigma=sigma, u=w @ zt, eigvals=s.copy(), eigvecs=w, min_sv=float(s[-1]))


@dataclass(frozen=True)
class LyapunovOperator:
    """``X -> sigma X + X sigma`` for symmetric positive definite ``sigma``."""

    eigvals: np.ndarray
    eigvecs: np.ndarray

    @classmethod
    def from_sigma(cls, sigma):
        lam, q = np.linalg.eigh(0.5 * (sigma + sigma.T))
        if lam[0] <= 0:
            raise NearSingular("sigma is not positive definite")
        return cls(lam, q)

    @property
    def sigma(self):
        return (self.eigvecs * self.eigvals) @ self.eigvecs.T

    def apply(self, x):
        s = self.sigma
        return s @ x + x @ s

    def solve(self, b):
        q, lam = self.eigvecs, self.eigvals
        bt = q.T @ b @ q
        return q @ (bt / (lam[:, None] + lam[None, :])) @ q.T


def lyapunov_solve(op, b):
    """Solve ``sigma X + X sigma = b``."""
    return op.solve(b)


@dataclass(frozen=True)
class PolarDerivatives:
    """Directional derivatives of the factors of ``x^T y = sigma u``.

    ``*_x`` entries move ``x`` along ``omega``; ``*_y`` entries move ``y``
    along ``omega_bar``. ``d_k`` is the derivative of ``alpha + tr(sigma)``.
    """

    d_sigma_x: np.ndarray
    d_u_x: np.ndarray
    d_k_x: float
    d_sigma_y: np.ndarray
    d_u_y: np.ndarray
    d_k_y: float


def polar_derivatives(x, y, factors, omega, omega_bar):
    """Closed-form derivatives of the polar factors of ``x^T y``.

    Parameters
    ----------
    x, y : ndarray, shape (n, k)
    factors : PolarFactors
        Polar decomposition of ``x.T @ y``.
    omega, omega_bar : ndarray, shape (n, k)
        Directions for ``x`` and ``y``.
    """
    sigma, u = factors.sigma, factors.u
    lyap = factors.lyapunov

    def pieces(m):
        y_sol = lyap.solve(asym(m))
        d_sigma = m - 2.0 * sigma @ y_sol
        d_u = 2.0 * y_sol @ u
        return d_sigma, d_u, float(np.trace(m))

    dsx, dux, dkx = pieces(omega.T @ y @ u.T)
    dsy, duy, dky = pieces(x.T @ omega_bar @ u.T)
    return PolarDerivatives(dsx, dux, dkx, dsy, duy, dky)
