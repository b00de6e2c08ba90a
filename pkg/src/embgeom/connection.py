"""Connections on subbundles, curvature and second fundamental forms.

A connection on ``W`` is stored through its Christoffel function
``Gamma(q; xi, w)`` so that ``nabla_xi s = D_xi s + Gamma(q; xi, s)``.
Closed forms are typically only meaningful for tangent ``xi`` and ``w`` in
the fiber; ``ChristoffelField.__call__`` therefore projects its inputs
first, which gives a fixed smooth bilinear extension to the whole ambient
space. ``ChristoffelField.ambient`` is the other natural extension,
``-pi_W'(q; xi) w + ring_gamma(q; xi, w)``, needed by the second curvature
formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ambient import DEFAULT_DIFF, _fd, inner
from .bundle import ProjectionField, identity_projection
from .errors import GeometryError, SectionViolation


@dataclass(frozen=True)
class ChristoffelField:
    """Christoffel function of a connection on the bundle ``W``.

    Parameters
    ----------
    gamma : callable
        ``(q, xi, w) -> F``.
    bundle : ProjectionField
        Projector of ``W``.
    base : ProjectionField, optional
        Tangent projector of the base; ``xi`` is projected with it.
    ring_gamma : callable, optional
        ``(q, xi, w) -> pi_W'(q; xi) w + Gamma(q; xi, w)``, valid for any
        ambient ``w``.
    project_inputs : bool
        Project ``xi`` and ``w`` before calling ``gamma``.
    """

    gamma: Callable
    bundle: ProjectionField
    base: ProjectionField | None = None
    ring_gamma: Callable | None = None
    project_inputs: bool = True
    name: str = ""

    def __call__(self, q, xi, w):
        if self.project_inputs:
            if self.base is not None:
                xi = self.base.apply(q, xi)
            w = self.bundle.apply(q, w)
        return self.gamma(q, xi, w)

    def ambient(self, q, xi, w, cfg=None):
        if self.ring_gamma is None:
            raise GeometryError("this connection has no ring_gamma extension")
        return -self.bundle.derivative(q, xi, w, cfg) + self.ring_gamma(q, xi, w)


def levi_civita(metric, pi, cfg=None):
    """Levi-Civita connection of ``metric`` restricted by the projector ``pi``.

    ``pi`` must be metric compatible (``g pi = pi^T g``). The Christoffel
    function is ``-pi'(xi1) xi2 + 1/2 pi g^{-1} (g'(xi1) xi2 + g'(xi2) xi1 -
    chi(xi1, xi2))``.
    """
    cfg = cfg or DEFAULT_DIFF

    def ring(q, x1, x2):
        if metric.constant:
            return np.zeros(pi.dim)
        acc = (metric.derivative(q, x1, x2, cfg) + metric.derivative(q, x2, x1, cfg)
               - metric.chi(q, x1, x2, cfg))
        return 0.5 * pi.apply(q, metric.inv(q, acc))

    def gamma(q, x1, x2):
        return -pi.derivative(q, x1, x2, cfg) + ring(q, x1, x2)

    return ChristoffelField(gamma=gamma, bundle=pi, base=pi, ring_gamma=ring,
                            name="levi-civita")


def levi_civita_christoffel(metric, pi, q, xi1, xi2, cfg=None):
    """Evaluate the Levi-Civita Christoffel function at ``q``."""
    return levi_civita(metric, pi, cfg)(q, xi1, xi2)


def induced_connection(gamma_f, pi_w, base=None, cfg=None):
    """Connection ``pi_W nabla^F`` on the subbundle ``W`` of ``Q x F``.

    ``Gamma^W(xi, w) = -pi_W'(xi) w + pi_W Gamma^F(xi, w)``.
    """
    cfg = cfg or DEFAULT_DIFF

    def gamma(q, xi, w):
        return -pi_w.derivative(q, xi, w, cfg) + pi_w.apply(q, gamma_f(q, xi, w))

    def ring(q, xi, w):
        return pi_w.apply(q, gamma_f(q, xi, w))

    return ChristoffelField(gamma=gamma, bundle=pi_w, base=base, ring_gamma=ring,
                            name="induced")


def projection_connection(pi_w, base=None, cfg=None):
    """Connection with Christoffel function ``-pi_W'(q; xi) w``."""
    cfg = cfg or DEFAULT_DIFF
    return ChristoffelField(gamma=lambda q, xi, w: -pi_w.derivative(q, xi, w, cfg),
                            bundle=pi_w, base=base,
                            ring_gamma=lambda q, xi, w: np.zeros(pi_w.dim),
                            name="projection")


def trivial_connection(dim):
    """Flat connection ``D`` on the trivial bundle ``Q x R^dim``."""
    return ChristoffelField(gamma=lambda q, xi, w: np.zeros(dim),
                            bundle=identity_projection(dim),
                            ring_gamma=lambda q, xi, w: np.zeros(dim), name="trivial")


def covariant_derivative(gamma, section, q, delta, cfg=None, tol=1e-8):
    """``nabla_delta s`` for a section ``s`` of ``W``.

    Raises
    ------
    SectionViolation
        If ``s(q)`` is not in the fiber at ``q``.
    """
    cfg = cfg or DEFAULT_DIFF
    s = np.asarray(section(q), dtype=float)
    res = np.linalg.norm(gamma.bundle.apply(q, s) - s)
    if res > tol * max(1.0, float(np.linalg.norm(s))):
        raise SectionViolation(f"section leaves the fiber (residual {res:.3e})")
    return _fd(section, q, delta, cfg) + gamma(q, delta, s)


def curvature(gamma, q, xi, eta, w, variant="rc1", cfg=None):
    """Curvature ``R_{xi, eta} w`` of the connection ``gamma``.

    ``rc1`` differentiates the projected Christoffel function. ``rc2`` uses
    ``ring_gamma`` for the derivative terms and the ambient extension for the
    quadratic terms, which removes the second derivative of ``pi_W``.
    """
    cfg = cfg or DEFAULT_DIFF
    if variant == "rc1":
        first = lambda x, a, b: gamma(x, a, b)
        quad = gamma
    elif variant == "rc2":
        if gamma.ring_gamma is None:
            raise GeometryError("rc2 needs ring_gamma")
        first = gamma.ring_gamma
        quad = lambda x, a, b: gamma.ambient(x, a, b, cfg)
    else:
        raise ValueError(f"unknown curvature variant {variant!r}")
    d1 = _fd(lambda x: first(x, eta, w), q, xi, cfg)
    d2 = _fd(lambda x: first(x, xi, w), q, eta, cfg)
    return d1 - d2 + quad(q, xi, quad(q, eta, w)) - quad(q, eta, quad(q, xi, w))


def gauss_codazzi_pairing(pi, q, xi, eta, w, w_star, cfg=None):
    """``<R w, w*>`` for the connection ``-pi'``, through first derivatives only.

    Equals ``<pi'(eta) w, pi'(xi)^T w*> - <pi'(xi) w, pi'(eta)^T w*>``.
    """
    cfg = cfg or DEFAULT_DIFF
    return (inner(pi.derivative(q, eta, w, cfg), pi.derivative_T(q, xi, w_star, cfg))
            - inner(pi.derivative(q, xi, w, cfg), pi.derivative_T(q, eta, w_star, cfg)))


def _adjoint_in_fiber(gamma, q, delta, f_star):
    dim = gamma.bundle.dim
    return np.array([inner(f_star, gamma(q, delta, e)) for e in np.eye(dim)])


def conjugate_connection(gamma, q, delta, f_star, cfg=None):
    """Christoffel function of the dual connection on ``W*`` at ``(q; delta, f*)``.

    ``Gamma*(delta, f*) = -pi_W'(delta)^T f* - pi_W^T {h -> Gamma(delta, h)}^T f*``.
    """
    cfg = cfg or DEFAULT_DIFF
    pi_w = gamma.bundle
    return (-pi_w.derivative_T(q, delta, f_star, cfg)
            - pi_w.T(q, _adjoint_in_fiber(gamma, q, delta, f_star)))


def conjugate(gamma, cfg=None):
    """The dual connection on ``W*`` as a ``ChristoffelField``."""
    cfg = cfg or DEFAULT_DIFF
    pi_wt = gamma.bundle.transpose()
    return ChristoffelField(
        gamma=lambda q, d, f: conjugate_connection(gamma, q, d, f, cfg),
        bundle=pi_wt, base=gamma.base, name="conjugate")


def second_fundamental_form(gamma_f, pi_w, q, xi, w, dual=False, cfg=None):
    """Second fundamental form of ``W`` (or ``W*``) inside ``Q x F``.

    Parameters
    ----------
    gamma_f : ChristoffelField
        Connection on the trivial bundle ``Q x F``.
    pi_w : ProjectionField
        Projector of the subbundle.
    dual : bool
        Use the dual bundle ``W*`` and the dual connection of ``gamma_f``;
        ``w`` is then a fiber element of ``W*``.
    """
    cfg = cfg or DEFAULT_DIFF
    if not dual:
        return pi_w.derivative(q, xi, w, cfg) + _complement(pi_w.apply, q, gamma_f(q, xi, w))
    adj = -_adjoint_in_fiber(gamma_f, q, xi, w)
    return pi_w.derivative_T(q, xi, w, cfg) + _complement(pi_w.T, q, adj)


def _complement(proj, q, v):
    return v - proj(q, v)
