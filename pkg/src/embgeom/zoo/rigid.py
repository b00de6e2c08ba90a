"""Rigid body on SE(n) embedded in ``R^{n x n} x R^n``.

The inertia acts on matrices by a Hadamard product with a symmetric matrix
of positive entries, ``I(A) = inertia * A``; it commutes with transposition
and preserves antisymmetric matrices. The metric is
``g(U, z)(e, dz) = (U I(U^T e), m dz)``.
"""

from __future__ import annotations

import numpy as np

from ..ambient import AmbientSpace, OperatorField, asym, sym
from ..bundle import ConstraintMap, MetricField, ProjectionField
from ..connection import ChristoffelField
from ..hamilton import PhasePoint
from .base import ManifoldPackage, random_orthogonal


def bracket(a, b):
    return a @ b - b @ a


def random_inertia(rng, n, low=0.5, high=2.0):
    """Symmetric matrix with entries in ``[low, high]`` and unit diagonal."""
    m = rng.uniform(low, high, size=(n, n))
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 1.0)
    return m


class RigidBody:
    """Operators of the SE(n) rigid body for a given inertia and mass."""

    def __init__(self, inertia, mass=1.0):
        self.inertia = np.asarray(inertia, dtype=float)
        if not np.allclose(self.inertia, self.inertia.T) or np.any(self.inertia <= 0):
            raise ValueError("inertia must be symmetric with positive entries")
        self.mass = float(mass)
        self.n = self.inertia.shape[0]
        self.space = AmbientSpace(((self.n, self.n), (self.n,)))

    def I(self, a):  # noqa: E743
        return self.inertia * a

    def I_inv(self, a):
        return a / self.inertia

    def bracket_I(self, a, b):
        """``[a, b] + I^{-1}[a, I b] + I^{-1}[b, I a]``."""
        return bracket(a, b) + self.I_inv(bracket(a, self.I(b))) + self.I_inv(bracket(b, self.I(a)))

    # projector
    def pi(self, q, v):
        u, _ = self.space.split(q)
        e, dz = self.space.split(v)
        return self.space.join(u @ asym(u.T @ e), dz)

    def d_pi(self, q, xi, v):
        u, _ = self.space.split(q)
        xu, _ = self.space.split(xi)
        e, _ = self.space.split(v)
        return self.space.join(-xu @ sym(u.T @ e) - u @ sym(xu.T @ e), np.zeros(self.n))

    # metric
    def g(self, q, v):
        u, _ = self.space.split(q)
        e, dz = self.space.split(v)
        return self.space.join(u @ self.I(u.T @ e), self.mass * dz)

    def g_inv(self, q, v):
        u, _ = self.space.split(q)
        e, dz = self.space.split(v)
        # exact inverse when u is orthogonal; uses the inverse of u otherwise
        ui = np.linalg.inv(u)
        return self.space.join(ui.T @ self.I_inv(ui @ e), dz / self.mass)

    def d_g(self, q, xi, v):
        u, _ = self.space.split(q)
        xu, _ = self.space.split(xi)
        e, _ = self.space.split(v)
        return self.space.join(xu @ self.I(u.T @ e) + u @ self.I(xu.T @ e), np.zeros(self.n))

    def chi(self, q, xi, eta):
        u, _ = self.space.split(q)
        xu, _ = self.space.split(xi)
        eu, _ = self.space.split(eta)
        return self.space.join(xu @ self.I(eu.T @ u) + eu @ self.I(xu.T @ u), np.zeros(self.n))

    def ring_gamma(self, q, xi, eta):
        u, _ = self.space.split(q)
        a = u.T @ self.space.split(xi)[0]
        b = u.T @ self.space.split(eta)[0]
        val = 0.5 * u @ self.I_inv(bracket(a, self.I(b)) + bracket(b, self.I(a)))
        return self.space.join(val, np.zeros(self.n))

    def gamma(self, q, xi, eta):
        u, _ = self.space.split(q)
        xu, _ = self.space.split(xi)
        eu, _ = self.space.split(eta)
        extra = self.space.join(u @ sym(xu.T @ eu) + xu @ sym(u.T @ eu), np.zeros(self.n))
        return extra + self.ring_gamma(q, xi, eta)

    def curvature(self, q, xi, eta, phi):
        """Closed-form curvature of the left-invariant-inertia metric."""
        u, _ = self.space.split(q)
        a, b, c = (u.T @ self.space.split(v)[0] for v in (xi, eta, phi))
        bi = self.bracket_I
        val = -0.5 * bi(bracket(a, b), c) + 0.25 * bi(a, bi(b, c)) - 0.25 * bi(b, bi(a, c))
        return self.space.join(u @ val, np.zeros(self.n))

    def constraint_value(self, q):
        u, _ = self.space.split(q)
        return (u.T @ u - np.eye(self.n))[np.triu_indices(self.n)]

    def constraint_jacobian(self, q, xi):
        u, _ = self.space.split(q)
        xu, _ = self.space.split(xi)
        return (u.T @ xu + xu.T @ u)[np.triu_indices(self.n)]

    def angular_velocity(self, q, qd):
        """Body angular velocity ``U^T U'``."""
        u, _ = self.space.split(q)
        return u.T @ self.space.split(qd)[0]

    def momentum(self, q, omega, zdot=None):
        """Cotangent vector ``g (U omega, zdot)``."""
        u, _ = self.space.split(q)
        zdot = np.zeros(self.n) if zdot is None else zdot
        return self.g(q, self.space.join(u @ omega, zdot))

    def euler_residual(self, omega, omega_dot):
        """``I(omega') + [omega, I(omega)]`` for the free rigid body."""
        return self.I(omega_dot) + bracket(omega, self.I(omega))


def make_se_n(n=3, inertia=None, mass=1.0, seed=0):
    """Rigid body package on SE(n).

    Parameters
    ----------
    n : int
    inertia : array_like, optional
        Symmetric positive matrix; random when omitted.
    mass : float
    seed : int
        Seed for the random inertia.
    """
    if inertia is None:
        inertia = random_inertia(np.random.default_rng(seed), n)
    body = RigidBody(inertia, mass)
    dim = body.space.dim
    pi = ProjectionField(apply=body.pi, dim=dim, adjoint_apply=body.pi,
                         analytic_derivative=body.d_pi, adjoint_derivative=body.d_pi,
                         name="SE(n) projector", kind="tangent", rank=n * (n - 1) // 2 + n)
    gf = OperatorField(apply=body.g, dim=dim, adjoint_apply=body.g,
                       analytic_derivative=body.d_g, adjoint_derivative=body.d_g, name="metric")
    gi = OperatorField(apply=body.g_inv, dim=dim, adjoint_apply=body.g_inv, name="metric inverse")
    metric = MetricField(g=gf, g_inv=gi, chi_fn=body.chi)
    christoffel = ChristoffelField(gamma=body.gamma, bundle=pi, base=pi,
                                   ring_gamma=body.ring_gamma, name="rigid body")
    constraint = ConstraintMap(value=body.constraint_value, jacobian=body.constraint_jacobian,
                               codim=n * (n + 1) // 2, dim=dim)

    def sample(rng):
        return body.space.join(random_orthogonal(rng, n), rng.standard_normal(n))

    return ManifoldPackage(
        name="se_n", space=body.space, pi=pi, metric=metric, sample_point=sample,
        christoffel=christoffel, curvature=body.curvature, constraint=constraint,
        params={"n": n, "inertia": body.inertia.tolist(), "mass": body.mass, "body": body})


def rigid_initial_state(body, rng, speed=1.0):
    """Random configuration with random body angular velocity."""
    n = body.n
    q = body.space.join(random_orthogonal(rng, n), rng.standard_normal(n))
    omega = asym(rng.standard_normal((n, n)))
    omega *= speed / max(np.linalg.norm(omega), 1e-12)
    return PhasePoint(q, body.momentum(q, omega, rng.standard_normal(n)))
