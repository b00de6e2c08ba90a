"""Unit sphere with the orthogonal and the oblique tangent projectors.

The oblique family ``pi_a(q) w = w - (q + a) q^T w / (1 + q^T a)`` has the
same range (the tangent space) but kernel spanned by ``q + a``. It is used to
exercise code paths where the projector is not symmetric.
"""

from __future__ import annotations

import numpy as np

from ..ambient import AmbientSpace, OperatorField
from ..bundle import ConstraintMap, MetricField, ProjectionField, identity_metric
from ..connection import ChristoffelField
from .base import ManifoldPackage


def oblique_projector(n, a=None):
    """Projector field ``pi_a`` with closed-form derivatives and index raising."""
    a = np.zeros(n) if a is None else np.asarray(a, dtype=float)
    if np.linalg.norm(a) >= 1.0:
        raise ValueError("the shift a must satisfy |a| < 1")

    def den(q):
        return 1.0 + q @ a

    def apply(q, w):
        return w - (q + a) * (q @ w) / den(q)

    def adjoint(q, w):
        return w - q * ((q + a) @ w) / den(q)

    def d_apply(q, xi, w):
        d = den(q)
        return (-xi * (q @ w) / d - (q + a) * (xi @ w) / d
                + (q + a) * (q @ w) * (xi @ a) / d ** 2)

    def d_adjoint(q, xi, w):
        d = den(q)
        return (-xi * ((q + a) @ w) / d - q * (xi @ w) / d
                + q * ((q + a) @ w) * (xi @ a) / d ** 2)

    def raise_adjoint(q, p, w):
        # valid on tangent directions for cotangent p
        return -(w @ q) / den(q) * p

    return ProjectionField(apply=apply, dim=n, adjoint_apply=adjoint,
                           analytic_derivative=d_apply, adjoint_derivative=d_adjoint,
                           adjoint_index_raise=raise_adjoint,
                           name="sphere projector", kind="tangent", rank=n - 1)


def sphere_constraint(n):
    return ConstraintMap(value=lambda q: np.array([q @ q - 1.0]),
                         jacobian=lambda q, xi: np.array([2.0 * q @ xi]), codim=1, dim=n)


def sphere_christoffel(pi):
    """``Gamma(xi, eta) = q xi^T eta``; ring part vanishes."""
    return ChristoffelField(gamma=lambda q, xi, eta: q * (xi @ eta), bundle=pi, base=pi,
                            ring_gamma=lambda q, xi, eta: np.zeros_like(q), name="sphere")


def sphere_curvature(q, xi, eta, phi):
    """``R_{xi, eta} phi = xi eta^T phi - eta xi^T phi``."""
    return xi * (eta @ phi) - eta * (xi @ phi)


def diagonal_extension_metric(lam):
    """Metric ``q q^T + (I - q q^T) Lam (I - q q^T)`` for a positive diagonal ``Lam``.

    It restricts to the pairing ``xi^T Lam eta`` on tangent vectors and makes
    the orthogonal projector metric compatible.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size

    def proj(q, v):
        return v - q * (q @ v)

    def g(q, v):
        return q * (q @ v) + proj(q, lam * proj(q, v))

    def d_proj(q, xi, v):
        return -xi * (q @ v) - q * (xi @ v)

    def d_g(q, xi, v):
        pv = proj(q, v)
        return (xi * (q @ v) + q * (xi @ v) + d_proj(q, xi, lam * pv)
                + proj(q, lam * d_proj(q, xi, v)))

    def g_inv(q, v):
        pm = np.eye(n) - np.outer(q, q)
        mat = np.outer(q, q) + pm @ np.diag(lam) @ pm
        return np.linalg.solve(mat, v)

    gf = OperatorField(apply=g, dim=n, adjoint_apply=g, analytic_derivative=d_g,
                       adjoint_derivative=d_g, name="extended metric")
    return MetricField(g=gf, g_inv=OperatorField(apply=g_inv, dim=n, adjoint_apply=g_inv))


def make_sphere(n=3, a=None):
    """Sphere ``S^{n-1}`` in ``R^n``.

    Parameters
    ----------
    n : int
    a : array_like, optional
        Shift of the oblique projector used for the cotangent bundle. The
        Levi-Civita data always use the orthogonal projector.
    """
    pi0 = oblique_projector(n)
    pi = pi0 if a is None else oblique_projector(n, a)

    def sample(rng):
        v = rng.standard_normal(n)
        return v / np.linalg.norm(v)

    return ManifoldPackage(
        name="sphere", space=AmbientSpace(((n,),)), pi=pi, metric=identity_metric(n),
        sample_point=sample, pi_g=pi0, christoffel=sphere_christoffel(pi0),
        curvature=sphere_curvature, constraint=sphere_constraint(n),
        params={"n": n, "a": None if a is None else list(map(float, a))})
