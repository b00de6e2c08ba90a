"""Riemannian submersions described by a horizontal/vertical splitting.

The tangent projector splits as ``pi = H + V`` with ``HV = VH = 0``. The
horizontal cotangent bundle ``H*`` has fibers ``range(H(q)^T)``; Hamiltonians
on ``T*B`` lift to functions on ``H*`` that are constant along the vertical
directions ``(eps, B eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ambient import DEFAULT_DIFF, _fd, inner, orthonormal_range, raise_index
from .bundle import ProjectionField
from .connection import ChristoffelField, curvature
from .errors import NotHorizontal, NotHStarHamiltonian, NotVertical, OffBundle, RankFailure


@dataclass(frozen=True)
class Splitting:
    """Horizontal and vertical projector fields of a submersion.

    Parameters
    ----------
    horizontal, vertical : ProjectionField
    base : ProjectionField
        Tangent projector of the total space, equal to their sum.
    """

    horizontal: ProjectionField
    vertical: ProjectionField
    base: ProjectionField

    @classmethod
    def from_horizontal(cls, horizontal, base):
        """Build ``V = pi - H`` from the horizontal projector."""
        dh, db = horizontal.analytic_derivative, base.analytic_derivative
        th, tb = horizontal.adjoint_derivative, base.adjoint_derivative
        vertical = ProjectionField(
            apply=lambda q, v: base.apply(q, v) - horizontal.apply(q, v),
            dim=base.dim,
            adjoint_apply=lambda q, w: base.T(q, w) - horizontal.T(q, w),
            analytic_derivative=(lambda q, x, v: db(q, x, v) - dh(q, x, v))
            if dh is not None and db is not None else None,
            adjoint_derivative=(lambda q, x, w: tb(q, x, w) - th(q, x, w))
            if th is not None and tb is not None else None,
            name="vertical", kind="vertical")
        return cls(horizontal, vertical, base)

    def algebra_residual(self, q, v):
        """Largest violation of the splitting identities applied to ``v``."""
        h, vv, pi = self.horizontal, self.vertical, self.base
        hv, vh = h.apply(q, vv.apply(q, v)), vv.apply(q, h.apply(q, v))
        total = h.apply(q, v) + vv.apply(q, v) - pi.apply(q, v)
        return float(max(np.linalg.norm(hv), np.linalg.norm(vh), np.linalg.norm(total)))


@dataclass(frozen=True)
class HorizontalPhasePoint:
    q: np.ndarray
    p_h: np.ndarray


def _require(proj, q, v, error, what, tol=1e-8):
    res = np.linalg.norm(proj(q, v) - v)
    if res > tol * max(1.0, float(np.linalg.norm(v))):
        raise error(f"{what} (residual {res:.3e})")


def vertical_lift_B(split, q, p_h, eps, cfg=None):
    """Cotangent component of the vertical vector over ``eps``.

    ``B eps = -H^T {X -> V'(X)^T p_h}^T eps + H'(eps)^T p_h``; the pair
    ``(eps, B eps)`` spans the characteristic directions of ``H*``.
    """
    cfg = cfg or DEFAULT_DIFF
    _require(split.vertical.apply, q, eps, NotVertical, "direction is not vertical")
    hor = split.horizontal
    r = raise_index(split.vertical.transpose(), q, p_h, eps, cfg=cfg)
    return -hor.T(q, r) + hor.derivative_T(q, eps, p_h, cfg)


def vertical_basis(split, q):
    return orthonormal_range(split.vertical.matrix(q)).T


def horizontal_tangent_basis(split, q, p_h, full=False, cfg=None):
    """Orthonormal basis (pairs) of ``T H*`` or of its horizontal part.

    With ``full=False`` the first components range over ``H_q``; otherwise
    over the whole tangent space of the total space.
    """
    cfg = cfg or DEFAULT_DIFF
    hor = split.horizontal
    first = split.base if full else hor
    n = hor.dim
    cols = []
    for e in np.eye(2 * n):
        dq = first.apply(q, e[:n])
        cols.append(np.concatenate([dq, hor.derivative_T(q, dq, p_h, cfg) + hor.T(q, e[n:])]))
    basis = orthonormal_range(np.column_stack(cols))
    return [(b[:n], b[n:]) for b in basis.T]


def horizontal_hamilton_field(split, hamiltonian, state, cfg=None, check=True, tol=1e-6,
                              fiber_tol=1e-8):
    """Horizontal lift of the Hamilton vector field of a function on ``H*``.

    ``e_q = H G_p`` and
    ``e_p = H'(e_q)^T p_h - H^T (G_q + {X -> H'(X)^T p_h}^T G_p)``
    where the index is raised over horizontal ``X``.

    ``fiber_tol=None`` skips the membership check on ``p_h``.

    Raises
    ------
    OffBundle
        If ``p_h`` is not in ``range(H^T)``.
    NotHStarHamiltonian
        If ``check`` and ``G`` varies along vertical directions.
    """
    cfg = cfg or DEFAULT_DIFF
    q, p = state.q, state.p_h
    hor = split.horizontal
    if fiber_tol is not None:
        _require(hor.T, q, p, OffBundle, "p_h is not horizontal", fiber_tol)
    gq, gp = hamiltonian.gradient(q, p, cfg)
    if check:
        scale = max(1.0, float(np.linalg.norm(np.concatenate([gq, gp]))))
        for eps in vertical_basis(split, q):
            d = inner(gq, eps) + inner(gp, vertical_lift_B(split, q, p, eps, cfg))
            if abs(d) > tol * scale:
                raise NotHStarHamiltonian(f"function varies along vertical direction ({d:.3e})")
    e_q = hor.apply(q, gp)
    r = raise_index(hor.transpose(), q, p, gp, cfg=cfg)
    e_p = hor.derivative_T(q, e_q, p, cfg) - hor.T(q, gq + r)
    return e_q, e_p


@dataclass(frozen=True)
class SubmersionMap:
    """Chart expression ``q -> b`` of the projection to the base.

    ``jacobian`` is optional; central differences are used otherwise.
    """

    value: Callable
    dim: int
    jacobian: Callable | None = None

    def jac(self, q, cfg=None):
        if self.jacobian is not None:
            return np.asarray(self.jacobian(q), dtype=float)
        cols = [_fd(self.value, q, e, cfg or DEFAULT_DIFF) for e in np.eye(q.size)]
        return np.column_stack(cols)


def cotangent_pushforward(split, chart, state, cfg=None, tol=1e-8):
    """Push ``(q, p_h)`` down to chart coordinates ``(b, w)`` on ``T*B``.

    ``w`` solves ``H(q)^T J(q)^T w = p_h`` with ``J`` the chart Jacobian.
    """
    q, p = state.q, state.p_h
    jac = chart.jac(q, cfg)
    mat = np.column_stack([split.horizontal.T(q, row) for row in jac])
    w, _, rank, _ = np.linalg.lstsq(mat, p, rcond=None)
    if rank < chart.dim:
        raise RankFailure("chart Jacobian is not onto the horizontal cotangent space")
    res = np.linalg.norm(mat @ w - p)
    if res > tol * max(1.0, float(np.linalg.norm(p))):
        raise RankFailure(f"p_h has no preimage (residual {res:.3e})")
    return np.asarray(chart.value(q), dtype=float), w


def horizontal_christoffel(split, gamma, cfg=None):
    """Christoffel function of ``H nabla`` on the horizontal bundle."""
    cfg = cfg or DEFAULT_DIFF
    hor = split.horizontal

    def g(q, xi, w):
        return -hor.derivative(q, xi, w, cfg) + hor.apply(q, gamma(q, xi, w))

    return ChristoffelField(gamma=g, bundle=hor, base=split.base,
                            ring_gamma=lambda q, xi, w: hor.apply(q, gamma(q, xi, w)),
                            name="horizontal")


def oneill_A(split, gamma, q, xi, omega, cfg=None):
    """``A_xi omega = -V'(xi) H omega + V Gamma(xi, H omega)`` for horizontal ``xi``."""
    cfg = cfg or DEFAULT_DIFF
    _require(split.horizontal.apply, q, xi, NotHorizontal, "xi is not horizontal")
    h_om = split.horizontal.apply(q, omega)
    ver = split.vertical
    return -ver.derivative(q, xi, h_om, cfg) + ver.apply(q, gamma(q, xi, h_om))


def oneill_A_dagger(split, gamma, q, xi, omega, cfg=None):
    """``A^dagger_xi omega = H'(xi) V omega - H Gamma(xi, V omega)``."""
    cfg = cfg or DEFAULT_DIFF
    _require(split.horizontal.apply, q, xi, NotHorizontal, "xi is not horizontal")
    v_om = split.vertical.apply(q, omega)
    hor = split.horizontal
    return hor.derivative(q, xi, v_om, cfg) - hor.apply(q, gamma(q, xi, v_om))


def oneill_A_bracket(split, q, xi, eta, cfg=None):
    """``1/2 (H'(xi) eta - H'(eta) xi)``, equal to ``A_xi eta`` for horizontal inputs."""
    hor = split.horizontal
    return 0.5 * (hor.derivative(q, xi, eta, cfg) - hor.derivative(q, eta, xi, cfg))


def lifted_curvature(split, gamma, q, xi, eta, phi, route="gammaH", gamma_h=None, cfg=None):
    """Horizontal lift of the base curvature ``R^B`` applied to horizontal vectors.

    Parameters
    ----------
    split : Splitting
    gamma : ChristoffelField
        Levi-Civita connection of the total space.
    route : {"gammaH", "oneill13"}
        ``gammaH`` differentiates the horizontal connection and subtracts
        ``2 A^dagger_phi A_xi eta``; ``oneill13`` starts from the curvature of
        the total space and adds three O'Neill correction terms.
    gamma_h : ChristoffelField, optional
        Horizontal connection; built from ``gamma`` when omitted.
    """
    cfg = cfg or DEFAULT_DIFF
    for v, name in ((xi, "xi"), (eta, "eta"), (phi, "phi")):
        _require(split.horizontal.apply, q, v, NotHorizontal, f"{name} is not horizontal")
    a = lambda x, y: oneill_A(split, gamma, q, x, y, cfg)
    ad = lambda x, y: oneill_A_dagger(split, gamma, q, x, y, cfg)
    if route == "gammaH":
        gamma_h = gamma_h or horizontal_christoffel(split, gamma, cfg)
        return curvature(gamma_h, q, xi, eta, phi, "rc1", cfg) - 2.0 * ad(phi, a(xi, eta))
    if route == "oneill13":
        rq = curvature(gamma, q, xi, eta, phi, "rc1", cfg)
        return (split.horizontal.apply(q, rq) - 2.0 * ad(phi, a(xi, eta))
                + ad(xi, a(eta, phi)) + ad(eta, a(phi, xi)))
    raise ValueError(f"unknown route {route!r}")

