"""Hamiltonian vector fields on cotangent bundles of embedded manifolds.

A cotangent vector at ``q`` is represented by an ambient ``p`` in the range
of ``pi(q)^T``. Tangent vectors to ``T*Q`` are pairs ``(dq, dp)`` with
``pi dq = dq`` and ``dp = pi^T dp + pi'(q; dq)^T p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ambient import DEFAULT_DIFF, fd_gradient, inner, orthonormal_range, raise_index
from .errors import AnalyticNumericMismatch, NonFinite, NumericalError, OffBundle, StepDiverged


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class Hamiltonian:
    """Scalar function on ``E x E`` with an optional closed-form gradient.

    Parameters
    ----------
    value : callable
        ``(q, p) -> float``.
    grad : callable, optional
        ``(q, p) -> (H_q, H_p)``. Central differences otherwise.
    """

    value: Callable
    grad: Callable | None = None

    def __call__(self, q, p):
        return float(self.value(q, p))

    def gradient(self, q, p, cfg=None):
        if self.grad is not None:
            hq, hp = self.grad(q, p)
            return np.asarray(hq, dtype=float), np.asarray(hp, dtype=float)
        n = q.size
        g = fd_gradient(lambda z: self.value(z[:n], z[n:]), np.concatenate([q, p]), cfg)
        return g[:n], g[n:]

    def check(self, q, p, tol=1e-5):
        """Compare the closed-form gradient with central differences."""
        if self.grad is None:
            return
        hq, hp = self.gradient(q, p)
        fq, fp = Hamiltonian(self.value).gradient(q, p)
        err = max(np.max(np.abs(hq - fq)), np.max(np.abs(hp - fp)))
        if err > tol * max(1.0, np.max(np.abs(fq)), np.max(np.abs(fp))):
            raise AnalyticNumericMismatch(f"Hamiltonian gradient mismatch {err:.3e}")


@dataclass(frozen=True)
class Potential:
    """Potential energy with optional Euclidean gradient."""

    value: Callable
    grad: Callable | None = None

    def egrad(self, q, cfg=None):
        if self.grad is not None:
            return np.asarray(self.grad(q), dtype=float)
        return fd_gradient(self.value, q, cfg)


def symplectic_pairing(x, y):
    """``Omega(X, Y) = X_q . Y_p - X_p . Y_q``."""
    return inner(x[0], y[1]) - inner(x[1], y[0])


def _check_cotangent(pi, q, p, tol):
    res = np.linalg.norm(pi.T(q, p) - p)
    if res > tol * max(1.0, float(np.linalg.norm(p))):
        raise OffBundle(f"p is not a cotangent vector (residual {res:.3e})")


def cotangent_membership_residual(pi, q, p, dq, dp, cfg=None):
    """Distance of ``(dq, dp)`` from ``T_(q,p) T*Q``."""
    r1 = np.linalg.norm(pi.apply(q, dq) - dq)
    r2 = np.linalg.norm(pi.T(q, dp) + pi.derivative_T(q, dq, p, cfg) - dp)
    return float(max(r1, r2))


def cotangent_tangent_basis(pi, q, p, cfg=None):
    """Orthonormal basis (as pairs) of the tangent space of ``T*Q`` at ``(q, p)``."""
    cfg = cfg or DEFAULT_DIFF
    n = pi.dim
    cols = []
    for e in np.eye(2 * n):
        w, f = e[:n], e[n:]
        dq = pi.apply(q, w)
        cols.append(np.concatenate([dq, pi.derivative_T(q, dq, p, cfg) + pi.T(q, f)]))
    basis = orthonormal_range(np.column_stack(cols))
    return [(b[:n], b[n:]) for b in basis.T]


def hamilton_vector_field(pi, hamiltonian, state, cfg=None, tol=1e-8):
    """Hamilton vector field of ``H`` restricted to ``T*Q``.

    ``e_q = pi H_p`` and
    ``e_p = pi'(e_q)^T p - pi^T (H_q + {X -> pi'(X)^T p}^T H_p)``.

    Parameters
    ----------
    pi : OperatorField
        Tangent projector (need not be orthogonal).
    hamiltonian : Hamiltonian
    state : PhasePoint
    tol : float or None
        Tolerance of the cotangent membership check on ``p``. ``None`` skips
        it, which integrators need since their stages leave ``T*Q`` slightly.

    Returns
    -------
    tuple of ndarray
        ``(e_q, e_p)``.
    """
    cfg = cfg or DEFAULT_DIFF
    q, p = state.q, state.p
    if tol is not None:
        _check_cotangent(pi, q, p, tol)
    hq, hp = hamiltonian.gradient(q, p, cfg)
    e_q = pi.apply(q, hp)
    r = raise_index(pi.transpose(), q, p, hp, cfg=cfg)
    e_p = pi.derivative_T(q, e_q, p, cfg) - pi.T(q, hq + r)
    if not (np.all(np.isfinite(e_q)) and np.all(np.isfinite(e_p))):
        raise NonFinite("Hamilton vector field is not finite")
    return e_q, e_p


def inverse_symplectic(pi, q, e_q, e_p):
    """The map ``(e_q, e_p) -> (-pi^T e_p, e_q)``, inverse of the symplectic form."""
    return -pi.T(q, e_p), e_q


def metric_potential_field(metric, pi, potential, state, cfg=None):
    """Hamilton equations for ``H = 1/2 p.g^{-1} p + f(q)``.

    ``q' = g^{-1} p`` and
    ``p' = pi'(g^{-1} p)^T p + pi^T (1/2 chi(g^{-1} p, g^{-1} p) - egrad f)``.
    """
    cfg = cfg or DEFAULT_DIFF
    q, p = state.q, state.p
    v = metric.inv(q, p)
    force = 0.5 * metric.chi(q, v, v, cfg)
    if potential is not None:
        force = force - potential.egrad(q, cfg)
    return v, pi.derivative_T(q, v, p, cfg) + pi.T(q, force)


def kinetic_hamiltonian(metric, potential=None, cfg=None):
    """``H(q, p) = 1/2 <p, g^{-1} p> + f(q)`` with closed-form gradient."""
    cfg = cfg or DEFAULT_DIFF

    def value(q, p):
        h = 0.5 * inner(p, metric.inv(q, p))
        return h + (potential.value(q) if potential is not None else 0.0)

    def grad(q, p):
        v = metric.inv(q, p)
        hq = -0.5 * metric.chi(q, v, v, cfg)
        if potential is not None:
            hq = hq + potential.egrad(q, cfg)
        return hq, v

    return Hamiltonian(value=value, grad=grad)


def geodesic_residual(metric, pi, potential, q, qd, qdd, cfg=None):
    """Residual of the geodesic (plus potential) equation along a curve.

    ``q'' - pi'(q') q' + pi g^{-1}(g'(q') q' - 1/2 chi(q', q')) + pi g^{-1} egrad f``.
    """
    cfg = cfg or DEFAULT_DIFF
    acc = metric.derivative(q, qd, qd, cfg) - 0.5 * metric.chi(q, qd, qd, cfg)
    if potential is not None:
        acc = acc + potential.egrad(q, cfg)
    return qdd - pi.derivative(q, qd, qd, cfg) + pi.apply(q, metric.inv(q, acc))


@dataclass
class FlowResult:
    """Trajectory and drift diagnostics of an integrated flow."""

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    energy: np.ndarray | None
    constraint: np.ndarray | None
    cotangent: np.ndarray | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def states(self):
        return [PhasePoint(a, b) for a, b in zip(self.q, self.p)]

    @property
    def final(self):
        return PhasePoint(self.q[-1], self.p[-1])


def _newton_to_manifold(constraint, q, tol=1e-13, max_iter=5):
    for _ in range(max_iter):
        c = np.atleast_1d(constraint.value(q))
        if np.linalg.norm(c) <= tol:
            break
        jac = constraint.jacobian_matrix(q)
        q = q - jac.T @ np.linalg.solve(jac @ jac.T, c)
    return q


def integrate_flow(vector_field, state, t_end, dt, *, projection_correction=False,
                   constraint=None, cotangent=None, hamiltonian=None, guard=1e8):
    """Fourth-order Runge-Kutta integration of ``(q, p)' = vector_field(q, p)``.

    Parameters
    ----------
    vector_field : callable
        ``(q, p) -> (q', p')`` defined on an ambient neighbourhood.
    state : PhasePoint
    t_end, dt : float
        The step is adjusted to divide ``t_end`` exactly.
    projection_correction : bool
        After each step pull ``q`` back with Newton iterations on the
        constraint and apply ``cotangent(q)^T`` to ``p``.
    constraint : ConstraintMap, optional
    cotangent : OperatorField, optional
        Projector whose transpose defines the cotangent fibers.
    hamiltonian : callable, optional
        ``(q, p) -> float`` recorded along the trajectory.
    guard : float
        Norm above which the step is declared divergent.
    """
    n_steps = max(1, int(round(t_end / dt)))
    h = t_end / n_steps
    q = np.array(state.q, dtype=float)
    p = np.array(state.p, dtype=float)
    if projection_correction and (constraint is None or cotangent is None):
        raise ValueError("projection correction needs a constraint and a projector")
    qs, ps = [q.copy()], [p.copy()]

    def f(a, b):
        return vector_field(a, b)

    for step in range(n_steps):
        k1q, k1p = f(q, p)
        k2q, k2p = f(q + 0.5 * h * k1q, p + 0.5 * h * k1p)
        k3q, k3p = f(q + 0.5 * h * k2q, p + 0.5 * h * k2p)
        k4q, k4p = f(q + h * k3q, p + h * k3p)
        q = q + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
        p = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        if projection_correction:
            q = _newton_to_manifold(constraint, q)
            p = cotangent.T(q, p)
        norm = max(np.linalg.norm(q), np.linalg.norm(p))
        if not np.isfinite(norm) or norm > guard:
            raise StepDiverged(f"integration diverged at step {step + 1}")
        qs.append(q.copy())
        ps.append(p.copy())

    qs, ps = np.array(qs), np.array(ps)
    times = np.linspace(0.0, n_steps * h, n_steps + 1)
    energy = np.array([hamiltonian(a, b) for a, b in zip(qs, ps)]) if hamiltonian else None
    cons = (np.array([np.linalg.norm(constraint.value(a)) for a in qs])
            if constraint is not None else None)
    cot = (np.array([np.linalg.norm(cotangent.T(a, b) - b) for a, b in zip(qs, ps)])
           if cotangent is not None else None)
    diag = {"steps": n_steps, "dt": h}
    if energy is not None:
        diag["energy_drift"] = float(np.max(np.abs(energy - energy[0])))
    if cons is not None:
        diag["constraint_drift"] = float(np.max(cons))
    if cot is not None:
        diag["cotangent_drift"] = float(np.max(cot))
    return FlowResult(times, qs, ps, energy, cons, cot, diag)


def observed_order(errors, ratio=2.0):
    """Convergence order estimates from errors at successively refined steps."""
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0):
        raise NumericalError("errors must be positive to estimate an order")
    return np.log(errors[:-1] / errors[1:]) / np.log(ratio)

