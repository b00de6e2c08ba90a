"""Stiefel manifold ``Y^T Y = I`` and the Grassmannian as its quotient.

With the Euclidean metric the tangent projector is
``pi(Y) w = w - Y sym(Y^T w)``. The Grassmann quotient by right
multiplication with orthogonal matrices has horizontal projector
``H(Y) w = w - Y Y^T w`` and vertical projector ``V(Y) w = Y asym(Y^T w)``.
"""

from __future__ import annotations

import numpy as np

from ..ambient import AmbientSpace, asym, sym
from ..bundle import ConstraintMap, ProjectionField, identity_metric
from ..connection import ChristoffelField
from ..hamilton import Hamiltonian
from ..submersion import Splitting, SubmersionMap
from .base import ManifoldPackage, random_stiefel


def _stiefel_ops(n, k):
    sp = AmbientSpace(((n, k),))

    def mat(v):
        return np.asarray(v, dtype=float).reshape(n, k)

    def pi(q, w):
        y, w = mat(q), mat(w)
        return (w - y @ sym(y.T @ w)).ravel()

    def d_pi(q, xi, w):
        y, x, w = mat(q), mat(xi), mat(w)
        return (-x @ sym(y.T @ w) - y @ sym(x.T @ w)).ravel()

    def hor(q, w):
        y, w = mat(q), mat(w)
        return (w - y @ (y.T @ w)).ravel()

    def d_hor(q, xi, w):
        y, x, w = mat(q), mat(xi), mat(w)
        return (-x @ (y.T @ w) - y @ (x.T @ w)).ravel()

    return sp, mat, pi, d_pi, hor, d_hor


def stiefel_projector(n, k):
    _, _, pi, d_pi, _, _ = _stiefel_ops(n, k)
    return ProjectionField(apply=pi, dim=n * k, adjoint_apply=pi, analytic_derivative=d_pi,
                           adjoint_derivative=d_pi, name="stiefel projector", kind="tangent",
                           rank=n * k - k * (k + 1) // 2)


def grassmann_splitting(n, k):
    _, _, _, _, hor, d_hor = _stiefel_ops(n, k)
    base = stiefel_projector(n, k)
    h = ProjectionField(apply=hor, dim=n * k, adjoint_apply=hor, analytic_derivative=d_hor,
                        adjoint_derivative=d_hor, name="grassmann horizontal",
                        kind="horizontal", rank=(n - k) * k)
    return Splitting.from_horizontal(h, base)


def stiefel_constraint(n, k):
    iu = np.triu_indices(k)

    def value(q):
        y = q.reshape(n, k)
        return (y.T @ y - np.eye(k))[iu]

    def jac(q, xi):
        y, x = q.reshape(n, k), xi.reshape(n, k)
        return (y.T @ x + x.T @ y)[iu]

    return ConstraintMap(value=value, jacobian=jac, codim=k * (k + 1) // 2, dim=n * k)


def make_stiefel(n=5, k=2):
    """Stiefel manifold with the Euclidean metric and the Grassmann splitting."""
    sp = AmbientSpace(((n, k),))
    pi = stiefel_projector(n, k)

    def gamma(q, xi, eta):
        y, x, e = (v.reshape(n, k) for v in (q, xi, eta))
        return (y @ sym(x.T @ e)).ravel()

    christoffel = ChristoffelField(gamma=gamma, bundle=pi, base=pi,
                                   ring_gamma=lambda q, xi, eta: np.zeros(n * k),
                                   name="stiefel")
    return ManifoldPackage(
        name="stiefel", space=sp, pi=pi, metric=identity_metric(n * k),
        sample_point=lambda rng: random_stiefel(rng, n, k).ravel(),
        christoffel=christoffel, constraint=stiefel_constraint(n, k),
        splitting=grassmann_splitting(n, k), params={"n": n, "k": k})


def grassmann_curvature(q, xi, eta, phi, n, k):
    """Horizontal lift of the Grassmann curvature for horizontal inputs."""
    x, e, f = (v.reshape(n, k) for v in (xi, eta, phi))
    return (x @ (e.T @ f) - e @ (x.T @ f) - f @ (x.T @ e) + f @ (e.T @ x)).ravel()


def grassmann_A(q, xi, eta, n, k):
    """``A_xi eta = -Y asym(xi^T eta)``."""
    y, x, e = (v.reshape(n, k) for v in (q, xi, eta))
    return (-y @ asym(x.T @ e)).ravel()


def grassmann_A_dagger(q, phi, eps, n, k):
    """``A^dagger_phi eps = -phi Y^T eps``."""
    y, f, e = (v.reshape(n, k) for v in (q, phi, eps))
    return (-f @ (y.T @ e)).ravel()


def grassmann_gamma_h(q, xi, v, n, k):
    """Horizontal connection ``Y xi^T v``."""
    y, x, w = (a.reshape(n, k) for a in (q, xi, v))
    return (y @ (x.T @ w)).ravel()


def grassmann_lifted_field(q, p, g_q, g_p, n, k):
    """Closed-form horizontal Hamilton equations on the Grassmann quotient.

    ``Y' = (I - Y Y^T) G_p`` and
    ``p' = p G_p^T Y - Y G_p^T p - (I - Y Y^T) G_q``.
    """
    y, pm, gq, gp = (v.reshape(n, k) for v in (q, p, g_q, g_p))
    h = np.eye(n) - y @ y.T
    return (h @ gp).ravel(), (pm @ gp.T @ y - y @ gp.T @ pm - h @ gq).ravel()


def invariant_hamiltonian(n, k, a_sym, b_mat):
    """``G = 1/2 tr(p^T p) + 1/2 tr(Y^T A Y) + tr(p^T B Y)``.

    Invariant under ``(Y, p) -> (Y U, p U)``, hence constant along the
    vertical directions of the horizontal cotangent bundle.
    """
    def value(q, p):
        y, pm = q.reshape(n, k), p.reshape(n, k)
        return (0.5 * np.sum(pm * pm) + 0.5 * np.trace(y.T @ a_sym @ y)
                + np.trace(pm.T @ b_mat @ y))

    def grad(q, p):
        y, pm = q.reshape(n, k), p.reshape(n, k)
        return (a_sym @ y + b_mat.T @ pm).ravel(), (pm + b_mat @ y).ravel()

    return Hamiltonian(value=value, grad=grad)


def grassmann_chart(n, k, y0):
    """Affine chart ``Y -> Y0perp^T Y (Y0^T Y)^{-1}`` of ``Gr(n, k)`` near ``[Y0]``."""
    u, _, _ = np.linalg.svd(y0)
    perp = u[:, k:]

    def value(q):
        y = q.reshape(n, k)
        return (perp.T @ y @ np.linalg.inv(y0.T @ y)).ravel()

    return SubmersionMap(value=value, dim=(n - k) * k)
