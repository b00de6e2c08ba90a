"""Ambient-space calculus: block vectors, operator fields and derivatives.

Every ambient vector is stored as a flat float array. An ``AmbientSpace``
records the block shapes (for instance an ``n x k`` matrix followed by a
vector) so manifold code can split and rejoin blocks. The Euclidean inner
product of two flat arrays equals the sum of the block trace products.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import prod
from typing import Callable

import numpy as np

from .errors import AnalyticNumericMismatch, NonFinite, SymmetryViolation

_EPS = np.finfo(float).eps


def sym(a):
    """Symmetric part of a square matrix."""
    return 0.5 * (a + a.T)


def asym(a):
    """Antisymmetric part of a square matrix."""
    return 0.5 * (a - a.T)


def inner(a, b):
    """Trace inner product of two ambient vectors (flat or blocked)."""
    return float(np.vdot(np.ravel(a), np.ravel(b)))


@dataclass(frozen=True)
class AmbientSpace:
    """Product of matrix/vector blocks, flattened in row-major order.

    Parameters
    ----------
    shapes : tuple of tuple of int
        Shape of each block, e.g. ``((n, k), (n, k))``.
    """

    shapes: tuple

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(tuple(int(d) for d in s) for s in self.shapes))

    @property
    def dim(self) -> int:
        return sum(prod(s) for s in self.shapes)

    def split(self, v):
        v = np.asarray(v, dtype=float)
        out, start = [], 0
        for s in self.shapes:
            size = prod(s)
            out.append(v[start:start + size].reshape(s))
            start += size
        return out

    def join(self, *blocks):
        return np.concatenate([np.asarray(b, dtype=float).ravel() for b in blocks])

    def zeros(self):
        return np.zeros(self.dim)

    def basis(self):
        return np.eye(self.dim)

    def random(self, rng, scale=1.0):
        return scale * rng.standard_normal(self.dim)


@dataclass(frozen=True)
class DiffConfig:
    """Finite-difference settings.

    The step along a direction ``d`` (normalised to unit max-norm) is
    ``h = c * max(scale_hint, ||q||_inf)``. With Richardson extrapolation
    the default ``c`` is ``eps**(1/5)``, otherwise ``eps**(1/3)``.

    Parameters
    ----------
    step_coeff : float, optional
        Override for ``c``.
    richardson : bool
        Combine steps ``h`` and ``2h`` to cancel the leading error term.
    check_tolerance : float
        When positive, analytic derivatives are compared against finite
        differences and a relative mismatch above this value raises.
    scale_hint : float
        Lower bound on the magnitude used to size the step.
    """

    step_coeff: float | None = None
    richardson: bool = True
    check_tolerance: float = 0.0
    scale_hint: float = 1.0

    def step(self, q) -> float:
        c = self.step_coeff
        if c is None:
            c = _EPS ** 0.2 if self.richardson else _EPS ** (1.0 / 3.0)
        qn = float(np.max(np.abs(q))) if np.size(q) else 0.0
        return c * max(self.scale_hint, qn)


DEFAULT_DIFF = DiffConfig()


def _finite(value, what="value"):
    if not np.all(np.isfinite(value)):
        raise NonFinite(f"non-finite {what} encountered")
    return value


def _fd(fun, q, xi, cfg):
    q = np.asarray(q, dtype=float)
    xi = np.asarray(xi, dtype=float)
    scale = float(np.max(np.abs(xi))) if xi.size else 0.0
    if scale == 0.0:
        return np.zeros_like(np.asarray(fun(q), dtype=float))
    d = xi / scale
    h = cfg.step(q)

    def central(step):
        return (np.asarray(fun(q + step * d)) - np.asarray(fun(q - step * d))) / (2.0 * step)

    if cfg.richardson:
        val = (4.0 * central(h) - central(2.0 * h)) / 3.0
    else:
        val = central(h)
    return _finite(scale * val, "finite difference")


def _compare(analytic, numeric, tol, what):
    err = np.max(np.abs(np.asarray(analytic) - np.asarray(numeric)), initial=0.0)
    ref = max(1.0, float(np.max(np.abs(numeric), initial=0.0)))
    if err > tol * ref:
        raise AnalyticNumericMismatch(
            f"{what}: analytic and finite-difference values differ by {err:.3e}",
            analytic=analytic, numeric=numeric)


@dataclass(frozen=True)
class OperatorField:
    """A smooth family of square linear maps ``q -> A(q)`` on the ambient space.

    Only ``apply`` and ``dim`` are required. Everything else is an optional
    closed form; missing pieces fall back to dense assembly (adjoint) or
    central differences (derivatives).

    Parameters
    ----------
    apply : callable
        ``apply(q, v) -> A(q) v``.
    dim : int
        Ambient dimension.
    adjoint_apply : callable, optional
        ``adjoint_apply(q, w) -> A(q)^T w``.
    analytic_derivative : callable, optional
        ``(q, xi, v) -> A'(q; xi) v``.
    adjoint_derivative : callable, optional
        ``(q, xi, w) -> A'(q; xi)^T w``.
    index_raise : callable, optional
        ``(q, e1, e2) -> r`` with ``<r, X> = <e2, A'(q; X) e1>`` for tangent X.
    adjoint_index_raise : callable, optional
        The same for the transposed field.
    """

    apply: Callable
    dim: int
    adjoint_apply: Callable | None = None
    analytic_derivative: Callable | None = None
    adjoint_derivative: Callable | None = None
    index_raise: Callable | None = None
    adjoint_index_raise: Callable | None = None
    name: str = ""
    constant: bool = False

    def __call__(self, q, v):
        return self.apply(q, v)

    def matrix(self, q):
        """Dense matrix of ``A(q)``."""
        eye = np.eye(self.dim)
        return np.column_stack([self.apply(q, e) for e in eye])

    def T(self, q, w):
        if self.adjoint_apply is not None:
            return self.adjoint_apply(q, w)
        return self.matrix(q).T @ w

    def derivative(self, q, xi, v, cfg=None):
        """``A'(q; xi) v``."""
        cfg = cfg or DEFAULT_DIFF
        if self.constant:
            return np.zeros(self.dim)
        if self.analytic_derivative is not None:
            val = _finite(self.analytic_derivative(q, xi, v), "derivative")
            if cfg.check_tolerance > 0:
                _compare(val, _fd(lambda x: self.apply(x, v), q, xi, cfg),
                         cfg.check_tolerance, self.name or "operator derivative")
            return val
        return _fd(lambda x: self.apply(x, v), q, xi, cfg)

    def derivative_T(self, q, xi, w, cfg=None):
        """``A'(q; xi)^T w``, the derivative of the transposed field."""
        cfg = cfg or DEFAULT_DIFF
        if self.constant:
            return np.zeros(self.dim)
        if self.adjoint_derivative is not None:
            val = _finite(self.adjoint_derivative(q, xi, w), "derivative")
            if cfg.check_tolerance > 0:
                _compare(val, _fd(lambda x: self.T(x, w), q, xi, cfg),
                         cfg.check_tolerance, self.name or "adjoint derivative")
            return val
        return _fd(lambda x: self.T(x, w), q, xi, cfg)

    def transpose(self):
        """The field ``q -> A(q)^T`` with all closed forms swapped."""
        fwd = self.apply
        adj = self.adjoint_apply if self.adjoint_apply is not None else self.T
        return replace(
            self, apply=adj, adjoint_apply=fwd,
            analytic_derivative=self.adjoint_derivative,
            adjoint_derivative=self.analytic_derivative,
            index_raise=self.adjoint_index_raise,
            adjoint_index_raise=self.index_raise,
            name=(self.name + "^T") if self.name else "")


def identity_field(dim, name="identity"):
    """Constant identity operator field."""
    return OperatorField(apply=lambda q, v: np.asarray(v, dtype=float).copy(), dim=dim,
                         adjoint_apply=lambda q, w: np.asarray(w, dtype=float).copy(),
                         name=name, constant=True)


def matrix_field(fun, dim, name=""):
    """Operator field from a callable returning a dense matrix at each point."""
    return OperatorField(apply=lambda q, v: fun(q) @ v, dim=dim,
                         adjoint_apply=lambda q, w: fun(q).T @ w, name=name)


def directional_derivative(F, q, xi, cfg=None, *, analytic=None):
    """Directional derivative ``F'(q; xi)``.

    Parameters
    ----------
    F : callable or OperatorField
        Array-valued function of the point, or an operator field.
    q, xi : ndarray
        Base point and direction.
    cfg : DiffConfig, optional
    analytic : callable, optional
        Closed form ``(q, xi) -> F'(q; xi)``. Checked against finite
        differences when ``cfg.check_tolerance > 0``.

    Returns
    -------
    ndarray or callable
        For an operator field, the map ``v -> F'(q; xi) v``.
    """
    cfg = cfg or DEFAULT_DIFF
    if isinstance(F, OperatorField):
        return lambda v: F.derivative(q, xi, v, cfg)
    if analytic is not None:
        val = _finite(np.asarray(analytic(q, xi), dtype=float), "derivative")
        if cfg.check_tolerance > 0:
            _compare(val, _fd(F, q, xi, cfg), cfg.check_tolerance, "directional derivative")
        return val
    return _fd(F, q, xi, cfg)


def second_directional_derivative(F, q, xi1, xi2, cfg=None, *, analytic_first=None):
    """Second derivative ``D_xi2 D_xi1 F`` at ``q``.

    The inner derivative uses ``analytic_first`` when supplied. With a
    positive ``cfg.check_tolerance`` the swapped order is also computed and
    an asymmetry above that tolerance raises ``SymmetryViolation``.
    """
    cfg = cfg or DEFAULT_DIFF

    def first(direction):
        if analytic_first is not None:
            return lambda x: analytic_first(x, direction)
        return lambda x: _fd(F, x, direction, cfg)

    val = _fd(first(xi1), q, xi2, cfg)
    if cfg.check_tolerance > 0:
        other = _fd(first(xi2), q, xi1, cfg)
        err = float(np.max(np.abs(val - other), initial=0.0))
        if err > cfg.check_tolerance * max(1.0, float(np.max(np.abs(val), initial=0.0))):
            raise SymmetryViolation(f"mixed derivatives differ by {err:.3e}")
    return val


def raise_index(psi, q, e1, e2, pi=None, cfg=None):
    """Represent the functional ``X -> <e2, psi'(q; X) e1>`` by a vector.

    Without ``pi`` the ambient gradient of the functional is returned (or the
    field's closed-form override), which represents it on every direction in
    its domain. With ``pi`` the result is normalised to ``pi(q)^T r``, the
    unique representative in the range of ``pi^T`` that agrees with the
    functional on the tangent space.
    """
    cfg = cfg or DEFAULT_DIFF
    if psi.index_raise is not None:
        r = np.asarray(psi.index_raise(q, e1, e2), dtype=float)
    elif psi.constant:
        r = np.zeros(psi.dim)
    else:
        e2 = np.asarray(e2, dtype=float)
        r = np.array([inner(e2, psi.derivative(q, b, e1, cfg)) for b in np.eye(psi.dim)])
    if pi is not None:
        r = pi.T(q, r)
    return _finite(r, "raised index")


def fd_gradient(fun, x, cfg=None):
    """Gradient of a scalar function by coordinate-wise central differences."""
    cfg = cfg or DEFAULT_DIFF
    x = np.asarray(x, dtype=float)
    return np.array([_fd(fun, x, e, cfg) for e in np.eye(x.size)])


def orthonormal_range(mat, rtol=1e-8):
    """Orthonormal basis (columns) of the column space of ``mat``."""
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0:
        return u[:, :0]
    keep = s > rtol * max(1.0, s[0])
    return u[:, keep]

