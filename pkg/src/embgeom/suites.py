"""Structural property suites run against any manifold package.

Each check draws random points and vectors, evaluates an identity that
must hold exactly in exact arithmetic and reports the largest relative
residual together with its tolerance. Tolerances follow one rule: identities
built from closed forms only use ``ANALYTIC_TOL``; anything that goes
through central differences uses ``FD_TOL``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .ambient import DEFAULT_DIFF, _fd, inner, orthonormal_range, raise_index
from .bundle import (
    ProjectionField,
    bundle_tangent_projector,
    dual_pair_projector,
    extend_metric,
    identity_projection,
)
from .connection import (
    ChristoffelField,
    curvature,
    gauss_codazzi_pairing,
    induced_connection,
    levi_civita,
    second_fundamental_form,
)
from .submersion import lifted_curvature, oneill_A, oneill_A_bracket, oneill_A_dagger

ANALYTIC_TOL = 1e-9
FD_TOL = 1e-6


@dataclass
class CheckRecord:
    """Outcome of one check."""

    name: str
    passed: bool
    max_residual: float
    tolerance: float
    samples: int
    seed: int
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _rel(err, *refs):
    scale = max([1.0] + [float(np.linalg.norm(np.atleast_1d(r))) for r in refs])
    return float(np.linalg.norm(np.atleast_1d(err))) / scale


class SuiteContext:
    """Package plus the lazily built connection objects the checks share."""

    def __init__(self, package, cfg=None):
        self.pkg = package
        self.cfg = cfg or DEFAULT_DIFF

    @property
    def pi(self):
        return self.pkg.pi

    @property
    def pi_g(self):
        return self.pkg.metric_projector

    @cached_property
    def generic_lc(self):
        return levi_civita(self.pkg.metric, self.pi_g, self.cfg)

    @property
    def connection(self):
        return self.pkg.christoffel or self.generic_lc

    def point(self, rng):
        return self.pkg.sample_point(rng)

    def tangent(self, q, rng):
        return self.pkg.sample_tangent(q, rng)

    def projectors(self):
        out = [("pi", self.pi)]
        if self.pkg.pi_g is not None:
            out.append(("pi_g", self.pkg.pi_g))
        if self.pkg.splitting is not None:
            out += [("H", self.pkg.splitting.horizontal), ("V", self.pkg.splitting.vertical)]
        return out


# projector checks
def check_idempotency(ctx, rng):
    q = ctx.point(rng)
    v = ctx.pkg.space.random(rng)
    res = 0.0
    for _, p in ctx.projectors():
        pv = p.apply(q, v)
        res = max(res, _rel(p.apply(q, pv) - pv, v, pv))
    return res


def check_rank(ctx, rng):
    q = ctx.point(rng)
    res = 0.0
    for _, p in ctx.projectors():
        if getattr(p, "rank", None) is None:
            continue
        res = max(res, abs(float(np.trace(p.matrix(q))) - p.rank))
    return res


def check_adjoint(ctx, rng):
    q = ctx.point(rng)
    v, w = ctx.pkg.space.random(rng), ctx.pkg.space.random(rng)
    res = 0.0
    fields = [p for _, p in ctx.projectors()] + [ctx.pkg.metric.g, ctx.pkg.metric.g_inv]
    for f in fields:
        a, b = f.apply(q, v), f.T(q, w)
        res = max(res, abs(inner(a, w) - inner(v, b)) / max(1.0, np.linalg.norm(a) * np.linalg.norm(w)))
    return res


def check_derivatives(ctx, rng):
    """Closed-form derivatives against central differences."""
    q = ctx.point(rng)
    xi, v = ctx.tangent(q, rng), ctx.pkg.space.random(rng)
    res = 0.0
    fields = [p for _, p in ctx.projectors()] + [ctx.pkg.metric.g]
    for f in fields:
        if f.analytic_derivative is not None:
            num = _fd(lambda x: f.apply(x, v), q, xi, ctx.cfg)
            res = max(res, _rel(f.analytic_derivative(q, xi, v) - num, num))
        if f.adjoint_derivative is not None:
            num = _fd(lambda x: f.T(x, v), q, xi, ctx.cfg)
            res = max(res, _rel(f.adjoint_derivative(q, xi, v) - num, num))
    return res


def check_weingarten(ctx, rng):
    """``pi pi'(xi) f = 0`` for fibre elements, for every projector of the package."""
    q = ctx.point(rng)
    xi = ctx.tangent(q, rng)
    res = 0.0
    for _, p in ctx.projectors():
        f = p.apply(q, ctx.pkg.space.random(rng))
        d = p.derivative(q, xi, f, ctx.cfg)
        res = max(res, _rel(p.apply(q, d), d, f))
    return res


def check_weingarten_dual(ctx, rng):
    """``pi^T {X -> pi'(X)^T p}^T v = 0`` for cotangent ``p`` and tangent ``v``."""
    q = ctx.point(rng)
    pi = ctx.pi
    p = ctx.pkg.sample_cotangent(q, rng)
    v = pi.apply(q, ctx.pkg.space.random(rng))
    r = raise_index(pi.transpose(), q, p, v, cfg=ctx.cfg)
    return _rel(pi.T(q, r), r, p)


def check_torsion_free(ctx, rng):
    q = ctx.point(rng)
    xi, eta = ctx.tangent(q, rng), ctx.tangent(q, rng)
    pg = ctx.pi_g
    d = pg.derivative(q, xi, eta, ctx.cfg) - pg.derivative(q, eta, xi, ctx.cfg)
    g = ctx.connection
    s = g(q, xi, eta) - g(q, eta, xi)
    return max(_rel(d, pg.derivative(q, xi, eta, ctx.cfg)), _rel(s, g(q, xi, eta)))


def check_dual_pair(ctx, rng):
    """Range of ``pi`` and of ``pi^T`` pair nondegenerately and rebuild ``pi``.

    Also checks ``pi f = 0`` exactly when ``f`` annihilates the range of ``pi^T``.
    """
    q = ctx.point(rng)
    res = 0.0
    for _, p in ctx.projectors():
        mat = p.matrix(q)
        v = orthonormal_range(mat)
        w = orthonormal_range(mat.T)
        rebuilt = dual_pair_projector(v, w)
        res = max(res, _rel(rebuilt - mat, mat))
        kernel = orthonormal_range(np.eye(mat.shape[0]) - mat)
        res = max(res, float(np.max(np.abs(w.T @ kernel), initial=0.0)))
        annihilator = orthonormal_range(np.eye(mat.shape[0]) - w @ w.T)
        res = max(res, float(np.max(np.abs(mat @ annihilator), initial=0.0)))
    return res


def _pair(a, b):
    return inner(a[0], b[0]) + inner(a[1], b[1])


def check_higher_tangent(ctx, rng):
    """Adjointness of the projectors of ``TW``/``T*W`` and ``TW*``/``T*W*``, ``W = TQ``."""
    q = ctx.point(rng)
    pi, space, cfg = ctx.pi, ctx.pkg.space, ctx.cfg
    f = pi.apply(q, space.random(rng))
    f_star = pi.T(q, space.random(rng))
    res = 0.0
    for kinds, fib in ((("TW", "T*W"), f), (("TW*", "T*W*"), f_star)):
        p, p_star = (bundle_tangent_projector(k, pi, pi, q, fib, cfg) for k in kinds)
        x = (space.random(rng), space.random(rng))
        y = (space.random(rng), space.random(rng))
        lhs, rhs = _pair(p(*x), y), _pair(x, p_star(*y))
        res = max(res, abs(lhs - rhs) / max(1.0, abs(lhs)))
        px = p(*x)
        again = p(*px)
        res = max(res, _rel(np.concatenate(again) - np.concatenate(px), np.concatenate(px)))
    return res


def check_canonical_flip(ctx, rng):
    """``(q, v, dq, dv)`` in ``TTQ`` implies ``(q, dq, v, dv)`` in ``TTQ``."""
    q = ctx.point(rng)
    pi, space, cfg = ctx.pi, ctx.pkg.space, ctx.cfg
    v = pi.apply(q, space.random(rng))
    proj = bundle_tangent_projector("TW", pi, pi, q, v, cfg)
    dq, dv = proj(space.random(rng), space.random(rng))
    flipped = bundle_tangent_projector("TW", pi, pi, q, dq, cfg)
    fq, fv = flipped(v, dv)
    return max(_rel(fq - v, v), _rel(fv - dv, dv))


def check_metric_compatible_projector(ctx, rng):
    """``g pi_g = pi_g^T g``."""
    q = ctx.point(rng)
    v = ctx.pkg.space.random(rng)
    g, pg = ctx.pkg.metric, ctx.pi_g
    a = g.apply(q, pg.apply(q, v))
    return _rel(a - pg.T(q, g.apply(q, v)), a)


def check_extension(ctx, rng):
    """Ambient extension of the tangent pairing restricts back to it and commutes with ``P``."""
    q = ctx.point(rng)
    basis = orthonormal_range(ctx.pi_g.matrix(q))
    proj = basis @ basis.T
    g = ctx.pkg.metric

    def pairing(a, b):
        return g.pairing(q, a, b)

    ext = extend_metric(pairing, proj, q)
    res = _rel(ext @ proj - proj @ ext, ext)
    for _ in range(2):
        a = proj @ ctx.pkg.space.random(rng)
        b = proj @ ctx.pkg.space.random(rng)
        val = pairing(a, b)
        res = max(res, abs(a @ ext @ b - val) / max(1.0, abs(val)))
    return res


# connection checks
def check_levi_civita(ctx, rng):
    """Closed-form Christoffel function against the generic formula."""
    if ctx.pkg.christoffel is None:
        return 0.0
    q = ctx.point(rng)
    xi, eta = ctx.tangent(q, rng), ctx.tangent(q, rng)
    a = ctx.pkg.christoffel(q, xi, eta)
    return _rel(a - ctx.generic_lc(q, xi, eta), a)


def check_metric_compatibility(ctx, rng):
    """``D_xi <Y, Z> = <nabla_xi Y, Z> + <Y, nabla_xi Z>`` for ``Y = pi_g(x) eta``."""
    q = ctx.point(rng)
    pg, g, gam, cfg = ctx.pi_g, ctx.pkg.metric, ctx.connection, ctx.cfg
    xi, eta, zeta = (ctx.tangent(q, rng) for _ in range(3))
    lhs = _fd(lambda x: g.pairing(x, pg.apply(x, eta), pg.apply(x, zeta)), q, xi, cfg)

    def nabla(v):
        return pg.derivative(q, xi, v, cfg) + gam(q, xi, v)

    rhs = g.pairing(q, nabla(eta), zeta) + g.pairing(q, eta, nabla(zeta))
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def _curv(ctx, q, x, y, z, variant="rc1"):
    return curvature(ctx.connection, q, x, y, z, variant, ctx.cfg)


def check_rc1_rc2(ctx, rng):
    gam = ctx.connection
    if gam.ring_gamma is None:
        return 0.0
    q = ctx.point(rng)
    xi, eta, phi = (ctx.tangent(q, rng) for _ in range(3))
    a = _curv(ctx, q, xi, eta, phi, "rc1")
    return _rel(a - _curv(ctx, q, xi, eta, phi, "rc2"), a)


def check_curvature_symmetries(ctx, rng):
    """Antisymmetry, first Bianchi identity and metric skew-symmetry."""
    q = ctx.point(rng)
    xi, eta, phi, zeta = (ctx.tangent(q, rng) for _ in range(4))
    r_xe = _curv(ctx, q, xi, eta, phi)
    anti = _rel(r_xe + _curv(ctx, q, eta, xi, phi), r_xe)
    bianchi = r_xe + _curv(ctx, q, eta, phi, xi) + _curv(ctx, q, phi, xi, eta)
    g = ctx.pkg.metric
    lhs = g.pairing(q, r_xe, zeta)
    skew = lhs + g.pairing(q, phi, _curv(ctx, q, xi, eta, zeta))
    return max(anti, _rel(bianchi, r_xe), abs(skew) / max(1.0, abs(lhs)))


def check_curvature_closed_form(ctx, rng):
    if ctx.pkg.curvature is None:
        return 0.0
    q = ctx.point(rng)
    xi, eta, phi = (ctx.tangent(q, rng) for _ in range(3))
    ref = ctx.pkg.curvature(q, xi, eta, phi)
    return _rel(_curv(ctx, q, xi, eta, phi) - ref, ref)


def check_gauss_codazzi(ctx, rng):
    """Curvature of ``-pi'`` through first derivatives against ``rc1``."""
    q = ctx.point(rng)
    pi, cfg = ctx.pi, ctx.cfg
    xi, eta = pi.apply(q, ctx.pkg.space.random(rng)), pi.apply(q, ctx.pkg.space.random(rng))
    w = pi.apply(q, ctx.pkg.space.random(rng))
    w_star = pi.T(q, ctx.pkg.space.random(rng))
    gam = ChristoffelField(gamma=lambda x, a, b: -pi.derivative(x, a, b, cfg), bundle=pi, base=pi)
    lhs = inner(curvature(gam, q, xi, eta, w, "rc1", cfg), w_star)
    rhs = gauss_codazzi_pairing(pi, q, xi, eta, w, w_star, cfg)
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def check_affine_gauss(ctx, rng):
    """Affine Gauss-Codazzi for ``TQ`` inside ``Q x E`` with a curved ambient connection.

    The ambient connection is the ambient extension of the Levi-Civita
    connection; the subbundle carries the induced connection.
    """
    q = ctx.point(rng)
    pi, cfg, space = ctx.pi, ctx.cfg, ctx.pkg.space
    lc = ctx.generic_lc
    dim = space.dim
    gamma_v = ChristoffelField(gamma=lambda x, a, b: lc.ambient(x, a, b, cfg),
                               bundle=identity_projection(dim), base=pi)
    gamma_w = induced_connection(gamma_v, pi, base=pi, cfg=cfg)
    xi, eta = pi.apply(q, space.random(rng)), pi.apply(q, space.random(rng))
    s, s_star = pi.apply(q, space.random(rng)), pi.T(q, space.random(rng))
    lhs = inner(curvature(gamma_v, q, xi, eta, s, "rc1", cfg), s_star)
    r_w = inner(curvature(gamma_w, q, xi, eta, s, "rc1", cfg), s_star)

    def two(x, w):
        return second_fundamental_form(gamma_v, pi, q, x, w, cfg=cfg)

    def two_star(x, w):
        return second_fundamental_form(gamma_v, pi, q, x, w, dual=True, cfg=cfg)

    rhs = r_w + inner(two(xi, s), two_star(eta, s_star)) - inner(two(eta, s), two_star(xi, s_star))
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def check_metric_gauss(ctx, rng):
    """Metric Gauss-Codazzi for ``Q`` inside the ambient space with metric ``g``."""
    q = ctx.point(rng)
    g, pg, cfg = ctx.pkg.metric, ctx.pi_g, ctx.cfg
    amb = levi_civita(g, identity_projection(ctx.pkg.space.dim), cfg)
    x, y, z, w = (ctx.tangent(q, rng) for _ in range(4))
    lhs = g.pairing(q, curvature(amb, q, x, y, z, "rc1", cfg), w)

    def two(a, b):
        return second_fundamental_form(amb, pg, q, a, b, cfg=cfg)

    rhs = (g.pairing(q, curvature(ctx.generic_lc, q, x, y, z, "rc1", cfg), w)
           + g.pairing(q, two(x, z), two(y, w)) - g.pairing(q, two(y, z), two(x, w)))
    return abs(lhs - rhs) / max(1.0, abs(lhs))


# submersion checks
def check_splitting(ctx, rng):
    split = ctx.pkg.splitting
    if split is None:
        return 0.0
    q = ctx.point(rng)
    v = ctx.pkg.space.random(rng)
    return split.algebra_residual(q, v) / max(1.0, float(np.linalg.norm(v)))


def check_oneill(ctx, rng):
    """O'Neill tensor identities and agreement of both lifted-curvature routes."""
    split = ctx.pkg.splitting
    if split is None:
        return 0.0
    q = ctx.point(rng)
    gam, cfg, g = ctx.connection, ctx.cfg, ctx.pkg.metric
    xi, eta, phi = (ctx.pkg.sample_horizontal(q, rng) for _ in range(3))
    a = oneill_A(split, gam, q, xi, eta, cfg)
    res = _rel(a + oneill_A(split, gam, q, eta, xi, cfg), a)
    res = max(res, _rel(a - oneill_A_bracket(split, q, xi, eta, cfg), a))
    res = max(res, _rel(split.horizontal.apply(q, a), a))
    eps = split.vertical.apply(q, ctx.pkg.space.random(rng))
    lhs = g.pairing(q, a, eps)
    rhs = g.pairing(q, eta, oneill_A_dagger(split, gam, q, xi, eps, cfg))
    res = max(res, abs(lhs - rhs) / max(1.0, abs(lhs)))
    r1 = lifted_curvature(split, gam, q, xi, eta, phi, "gammaH", cfg=cfg)
    r2 = lifted_curvature(split, gam, q, xi, eta, phi, "oneill13", cfg=cfg)
    return max(res, _rel(r1 - r2, r1))


CHECKS = {
    "idempotency": (check_idempotency, ANALYTIC_TOL),
    "rank": (check_rank, 1e-6),
    "adjoint": (check_adjoint, ANALYTIC_TOL),
    "derivatives": (check_derivatives, FD_TOL),
    "weingarten": (check_weingarten, FD_TOL),
    "weingarten_dual": (check_weingarten_dual, FD_TOL),
    "torsion_free": (check_torsion_free, FD_TOL),
    "dual_pair": (check_dual_pair, ANALYTIC_TOL),
    "higher_tangent": (check_higher_tangent, FD_TOL),
    "canonical_flip": (check_canonical_flip, FD_TOL),
    "metric_projector": (check_metric_compatible_projector, ANALYTIC_TOL),
    "extension": (check_extension, ANALYTIC_TOL),
    "levi_civita": (check_levi_civita, FD_TOL),
    "metric_compatibility": (check_metric_compatibility, FD_TOL),
    "rc1_rc2": (check_rc1_rc2, FD_TOL),
    "curvature_symmetries": (check_curvature_symmetries, FD_TOL),
    "curvature_closed_form": (check_curvature_closed_form, FD_TOL),
    "gauss_codazzi": (check_gauss_codazzi, FD_TOL),
    "affine_gauss": (check_affine_gauss, FD_TOL),
    "metric_gauss": (check_metric_gauss, FD_TOL),
    "splitting": (check_splitting, ANALYTIC_TOL),
    "oneill": (check_oneill, FD_TOL),
}

STRUCTURAL = list(CHECKS)


def run_check(name, package, samples=3, seed=0, cfg=None, tolerance=None, ctx=None):
    """Run one named check and return its ``CheckRecord``."""
    if name not in CHECKS:
        raise KeyError(f"unknown check {name!r}")
    fun, tol = CHECKS[name]
    tol = tol if tolerance is None else tolerance
    ctx = ctx or SuiteContext(package, cfg)
    rng = np.random.default_rng([seed, sum(map(ord, name))])
    worst = max((float(fun(ctx, rng)) for _ in range(samples)), default=0.0)
    return CheckRecord(name, bool(np.isfinite(worst) and worst <= tol), worst, tol, samples, seed)


def run_suite(package, checks=None, samples=3, seed=0, cfg=None, tolerances=None):
    """Run several checks on one package.

    Parameters
    ----------
    package : ManifoldPackage
    checks : list of str, optional
        Defaults to every structural check.
    samples : int
        Random draws per check.
    tolerances : dict, optional
        Per-check overrides.

    Returns
    -------
    list of CheckRecord
    """
    ctx = SuiteContext(package, cfg)
    tolerances = tolerances or {}
    names = STRUCTURAL if checks is None else checks
    return [run_check(n, package, samples, seed, cfg, tolerances.get(n), ctx) for n in names]


def corrupt_projector(pi, eps):
    """``pi + eps I``, used to confirm that the suites detect broken projectors."""
    def apply(q, v):
        return pi.apply(q, v) + eps * v

    def adjoint(q, w):
        return pi.T(q, w) + eps * w

    return ProjectionField(apply=apply, dim=pi.dim, adjoint_apply=adjoint,
                           analytic_derivative=pi.analytic_derivative,
                           adjoint_derivative=pi.adjoint_derivative,
                           name=f"{pi.name} corrupted", kind=pi.kind, rank=pi.rank)
