"""Projection fields, metrics and projector constructions.

A subbundle ``W`` of a trivial bundle ``Q x F`` is described by a smooth
family of idempotents ``pi_W(q)`` with range ``W_q``. The tangent bundle of
an embedded manifold is the case ``F = E``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ambient import (DEFAULT_DIFF, OperatorField, identity_field, inner,
                      orthonormal_range, raise_index)
from .errors import (DegeneratePairing, DegenerateTangentPairing, OffBundle,
                     OffManifold, RankDeficientConstraint, RankDeficientFrame,
                     SingularGram)


@dataclass(frozen=True)
class ProjectionField(OperatorField):
    """Operator field whose values are idempotents.

    ``kind`` is a free-form label (``"tangent"``, ``"horizontal"``, ...) and
    ``rank`` the expected fiber dimension when known.
    """

    kind: str = "tangent"
    rank: int | None = None


def identity_projection(dim):
    f = identity_field(dim)
    return ProjectionField(apply=f.apply, dim=dim, adjoint_apply=f.adjoint_apply,
                           constant=True, name="identity", kind="trivial", rank=dim)


@dataclass(frozen=True)
class MetricField:
    """Self-adjoint positive (or nondegenerate) metric operator field.

    Parameters
    ----------
    g, g_inv : OperatorField
        The metric and its inverse.
    chi : callable, optional
        ``chi(q, xi, eta)`` with ``<chi, D> = <xi, g'(q; D) eta>``.
        Computed by an ambient basis sweep when omitted.
    constant : bool
        Shortcut for metrics that do not depend on the point.
    """

    g: OperatorField
    g_inv: OperatorField
    chi_fn: Callable | None = None
    constant: bool = False

    @property
    def dim(self):
        return self.g.dim

    def apply(self, q, v):
        return self.g.apply(q, v)

    def inv(self, q, v):
        return self.g_inv.apply(q, v)

    def derivative(self, q, xi, v, cfg=None):
        if self.constant:
            return np.zeros(self.dim)
        return self.g.derivative(q, xi, v, cfg)

    def chi(self, q, xi, eta, cfg=None):
        if self.constant:
            return np.zeros(self.dim)
        if self.chi_fn is not None:
            return self.chi_fn(q, xi, eta)
        return raise_index(self.g, q, eta, xi, cfg=cfg)

    def pairing(self, q, a, b):
        return inner(a, self.g.apply(q, b))


def identity_metric(dim):
    eye = identity_field(dim)
    return MetricField(g=eye, g_inv=eye, constant=True)


@dataclass(frozen=True)
class ConstraintMap:
    """Submersion ``C: E -> R^k`` whose zero set is the manifold.

    Parameters
    ----------
    value : callable
        ``q -> C(q)``.
    jacobian : callable
        ``(q, xi) -> C'(q) xi``.
    codim : int
    dim : int
        Ambient dimension.
    """

    value: Callable
    jacobian: Callable
    codim: int
    dim: int

    def jacobian_matrix(self, q):
        return np.column_stack([self.jacobian(q, e) for e in np.eye(self.dim)]).reshape(
            self.codim, self.dim)


def _constraint_pieces(C, g, x):
    jac = C.jacobian_matrix(x)
    ginv_jt = np.column_stack([g.inv(x, row) for row in jac]).reshape(C.dim, C.codim)
    gram = jac @ ginv_jt
    return jac, ginv_jt, gram


def projector_from_constraint(C, g, q, on_manifold_tol=1e-9, rank_tol=1e-8):
    """Metric-compatible tangent projector of ``{C = 0}``.

    ``pi(q) w = w - g^{-1} J^T (J g^{-1} J^T)^{-1} J w`` with ``J = C'(q)``.
    Preconditions are validated at ``q``; the returned field evaluates the same
    formula at any ambient point (as finite differences require).

    Raises
    ------
    OffManifold, RankDeficientConstraint, SingularGram
    """
    c = np.asarray(C.value(q), dtype=float)
    if np.linalg.norm(c) > on_manifold_tol * max(1.0, float(np.linalg.norm(q))):
        raise OffManifold(f"|C(q)| = {np.linalg.norm(c):.3e}")
    jac, _, gram = _constraint_pieces(C, g, q)
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv.size == 0 or sv[-1] <= rank_tol * max(1.0, sv[0]):
        raise RankDeficientConstraint("constraint Jacobian is not surjective")
    if np.linalg.cond(gram) > 1.0 / rank_tol ** 2:
        raise SingularGram("J g^{-1} J^T is singular")

    def apply(x, w):
        jac, ginv_jt, gram = _constraint_pieces(C, g, x)
        return w - ginv_jt @ np.linalg.solve(gram, jac @ w)

    def adjoint(x, w):
        jac, ginv_jt, gram = _constraint_pieces(C, g, x)
        return w - jac.T @ np.linalg.solve(gram.T, ginv_jt.T @ w)

    return ProjectionField(apply=apply, dim=C.dim, adjoint_apply=adjoint,
                           name="constraint projector", kind="tangent",
                           rank=C.dim - C.codim)


def parametric_projector(frame, g, q, rank_tol=1e-10):
    """Projector ``psi (psi^T g psi)^{-1} psi^T g`` from a local frame.

    Parameters
    ----------
    frame : callable
        ``q -> psi`` with the tangent frame as columns, shape ``(n, d)``.
    g : MetricField
    q : ndarray

    Returns
    -------
    ndarray
        Dense projector at ``q``.
    """
    psi = np.asarray(frame(q), dtype=float)
    sv = np.linalg.svd(psi, compute_uv=False)
    if sv.size == 0 or sv[-1] <= rank_tol * max(1.0, sv[0]):
        raise RankDeficientFrame("frame columns are not independent")
    g_psi = np.column_stack([g.apply(q, col) for col in psi.T])
    return psi @ np.linalg.solve(psi.T @ g_psi, g_psi.T)


def dual_pair_projector(v_basis, w_basis, cond_tol=1e12):
    """Projector with range spanned by ``v_basis`` and kernel ``w_basis^perp``.

    ``pi f = sum_i <f, w~_i> v_i`` where ``w~`` is the basis of
    ``span(w_basis)`` dual to ``v_basis``.

    Parameters
    ----------
    v_basis, w_basis : ndarray, shape (n, k)
        Bases as columns.

    Returns
    -------
    ndarray
        Dense projector.
    """
    v = np.asarray(v_basis, dtype=float)
    w = np.asarray(w_basis, dtype=float)
    m = v.T @ w
    if m.size and np.linalg.cond(m) > cond_tol:
        raise DegeneratePairing("the two bases do not pair nondegenerately")
    w_dual = w @ np.linalg.inv(m)
    return v @ w_dual.T


def _check_member(proj, q, f, what, tol=1e-8):
    res = np.linalg.norm(proj(q, f) - f)
    if res > tol * max(1.0, float(np.linalg.norm(f))):
        raise OffBundle(f"{what} is not in the fiber (residual {res:.3e})")


def bundle_tangent_projector(kind, pi_w, pi, q, f, cfg=None):
    """Projector onto the tangent or cotangent space of ``W``, ``W*`` at ``(q, f)``.

    Parameters
    ----------
    kind : {"TW", "TW*", "T*W", "T*W*"}
    pi_w : OperatorField
        Projector field of the vector bundle ``W``.
    pi : OperatorField
        Tangent projector of the base.
    q, f : ndarray
        Base point and fiber element (of ``W`` or ``W*`` according to kind).

    Returns
    -------
    callable
        ``(omega, phi) -> (omega', phi')``.
    """
    cfg = cfg or DEFAULT_DIFF
    if kind in ("TW", "T*W"):
        _check_member(pi_w.apply, q, f, "f")
    elif kind in ("TW*", "T*W*"):
        _check_member(pi_w.T, q, f, "f*")
    else:
        raise ValueError(f"unknown bundle kind {kind!r}")
    pi_wt = pi_w.transpose()

    if kind == "TW":
        def proj(omega, phi):
            po = pi.apply(q, omega)
            return po, pi_w.derivative(q, po, f, cfg) + pi_w.apply(q, phi)
    elif kind == "TW*":
        def proj(omega, phi):
            po = pi.apply(q, omega)
            return po, pi_w.derivative_T(q, po, f, cfg) + pi_w.T(q, phi)
    elif kind == "T*W":
        def proj(omega, phi):
            r = raise_index(pi_w, q, f, phi, cfg=cfg)
            return pi.T(q, omega + r), pi_w.T(q, phi)
    else:
        def proj(omega, phi):
            r = raise_index(pi_wt, q, f, phi, cfg=cfg)
            return pi.T(q, omega + r), pi_w.apply(q, phi)
    return proj


def extend_metric(pairing, pi_e, q, tol=1e-10):
    """Extend a pairing on ``T_q Q`` to the ambient space.

    Returns the dense operator ``g = (I - P) + g_R P`` where ``P`` is the
    orthogonal projector onto ``T_q Q`` and ``g_R`` represents ``pairing``
    there. ``pi_e`` must be the orthogonal (Euclidean) tangent projector.
    """
    p = pi_e.matrix(q) if isinstance(pi_e, OperatorField) else np.asarray(pi_e, dtype=float)
    basis = orthonormal_range(p)
    d = basis.shape[1]
    gram = np.array([[pairing(basis[:, i], basis[:, j]) for j in range(d)] for i in range(d)])
    gram = 0.5 * (gram + gram.T)
    if d and np.min(np.abs(np.linalg.eigvalsh(gram))) <= tol * max(1.0, np.max(np.abs(gram))):
        raise DegenerateTangentPairing("pairing is degenerate on the tangent space")
    proj = basis @ basis.T
    return np.eye(p.shape[0]) - proj + basis @ gram @ basis.T
