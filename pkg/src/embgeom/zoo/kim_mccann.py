"""Kim-McCann metric for the reflector-antenna type cost ``c = -log(alpha + tr sigma)``.

Points are pairs ``(x, y)`` of ``n x k`` matrices with ``x^T y`` invertible,
stored as one flat vector. ``x^T y = sigma u`` is the left polar
decomposition, ``K = alpha + tr(sigma)`` and ``L`` is the Lyapunov operator
of ``sigma``. The fixed-rank family uses the open set of such pairs; the
Grassmann family restricts to pairs of Stiefel matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ambient import AmbientSpace, OperatorField, asym, sym
from ..bundle import MetricField, ProjectionField, identity_projection
from ..connection import ChristoffelField
from ..errors import SamplerStuck
from ..matrix_kernels import polar_decompose
from ..submersion import Splitting
from .base import ManifoldPackage, random_stiefel

ADMISSIBLE_MARGIN = 1e-6
# random points are drawn well inside the admissible set so that central
# differences across them stay meaningful
SAMPLE_MARGIN = 1e-2


@dataclass(frozen=True)
class KMPoint:
    """Cached polar data at ``(x, y)``."""

    x: np.ndarray
    y: np.ndarray
    alpha: float
    sigma: np.ndarray
    u: np.ndarray
    lyap: object

    @property
    def K(self):  # noqa: N802
        return self.alpha + float(np.trace(self.sigma))

    def linv(self, b):
        return self.lyap.solve(b)


class KimMcCann:
    """Operators of the Kim-McCann lift on ``(R^{n x k})^2``."""

    def __init__(self, n, k, alpha):
        if not 1 <= k <= n:
            raise ValueError("need 1 <= k <= n")
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.n, self.k, self.alpha = int(n), int(k), float(alpha)
        self.space = AmbientSpace(((n, k), (n, k)))

    # points and vectors
    def split(self, v):
        return self.space.split(v)

    def join(self, a, b):
        return self.space.join(a, b)

    def point(self, q):
        x, y = self.split(q)
        f = polar_decompose(x.T @ y)
        return KMPoint(x, y, self.alpha, f.sigma, f.u, f.lyapunov)

    def cost(self, q):
        x, y = self.split(q)
        f = polar_decompose(x.T @ y)
        return -np.log(self.alpha + np.trace(f.sigma))

    def admissible(self, q, margin=ADMISSIBLE_MARGIN):
        x, y = self.split(q)
        sv = np.linalg.svd(x.T @ y, compute_uv=False)
        return sv[-1] >= margin * np.linalg.norm(x, 2) * np.linalg.norm(y, 2)

    # metric
    def pairing(self, q, a, b):
        """``<a, b>_*``."""
        return float(np.vdot(a, self.g(q, b)))

    def cross_pairing(self, pt, eta, eta_bar):
        """``<(eta, 0), (0, eta_bar)>_*``; the norm is twice this value."""
        x, y, u, K = pt.x, pt.y, pt.u, pt.K
        return (-np.trace(eta.T @ y @ u.T) * np.trace(eta_bar.T @ x @ u) / (2 * K ** 2)
                + np.trace(eta.T @ eta_bar @ u.T) / (2 * K))

    def g(self, q, v):
        pt = self.point(q)
        x, y, u, K = pt.x, pt.y, pt.u, pt.K
        om, omb = self.split(v)
        gx = -np.trace(omb.T @ x @ u) / (2 * K ** 2) * (y @ u.T) + omb @ u.T / (2 * K)
        gy = -np.trace(om.T @ y @ u.T) / (2 * K ** 2) * (x @ u) + om @ u / (2 * K)
        return self.join(gx, gy)

    def g_inv(self, q, v):
        pt = self.point(q)
        x, y, u, K = pt.x, pt.y, pt.u, pt.K
        om, omb = self.split(v)
        a = self.alpha
        return self.join(2 * K * omb @ u.T + 2 * K / a * np.trace(y.T @ omb) * x,
                         2 * K * om @ u + 2 * K / a * np.trace(x.T @ om) * y)

    # horizontal projector on the open set
    def horizontal(self, q, v):
        pt = self.point(q)
        x, y, u = pt.x, pt.y, pt.u
        om, omb = self.split(v)
        hx = om - 2 * x @ pt.linv(asym(u @ y.T @ om))
        hy = omb - 2 * y @ u.T @ pt.linv(asym(x.T @ omb @ u.T)) @ u
        return self.join(hx, hy)

    def vertical(self, q, v):
        return v - self.horizontal(q, v)

    # Levi-Civita connection on the open set
    def christoffel(self, q, v1, v2):
        pt = self.point(q)
        x, y, u, K = pt.x, pt.y, pt.u, pt.K
        li = pt.linv
        w1, wb1 = self.split(v1)
        w2, wb2 = self.split(v2)
        yu = y @ u.T
        t = np.trace
        mix = u @ (wb1.T @ w2 + wb2.T @ w1)
        gx = (-(t(w2.T @ yu) * w1 + t(w1.T @ yu) * w2) / K
              + x @ li(asym(mix))
              + w1 @ li(asym(x.T @ wb2 @ u.T + w2.T @ yu))
              + w2 @ li(asym(x.T @ wb1 @ u.T + w1.T @ yu))
              + (t(x.T @ wb2 @ u.T - w2.T @ yu) * x @ li(asym(w1.T @ yu))
                 + t(x.T @ wb1 @ u.T - w1.T @ yu) * x @ li(asym(w2.T @ yu))) / K)
        xu = x @ u
        gy = (-(t(wb2.T @ xu) * wb1 + t(wb1.T @ xu) * wb2) / K
              - y @ u.T @ li(asym(mix)) @ u
              + wb1 @ u.T @ li(asym(u @ y.T @ w2 + u @ wb2.T @ x)) @ u
              + wb2 @ u.T @ li(asym(u @ y.T @ w1 + u @ wb1.T @ x)) @ u
              + (t(w2.T @ yu - x.T @ wb2 @ u.T) * y @ u.T @ li(asym(u @ wb1.T @ x)) @ u
                 + t(w1.T @ yu - x.T @ wb1 @ u.T) * y @ u.T @ li(asym(u @ wb2.T @ x)) @ u) / K)
        return self.join(gx, gy)

    # curvature quantities
    def oneill_A(self, q, eta, eta_bar):
        """Closed-form ``A_{(eta, 0)} (0, eta_bar)`` for horizontal ``(eta, eta_bar)``."""
        pt = self.point(q)
        x, y, u = pt.x, pt.y, pt.u
        return self.join(x @ pt.linv(asym(u @ eta_bar.T @ eta)),
                         -y @ u.T @ pt.linv(asym(eta.T @ eta_bar @ u.T)) @ u)

    def oneill_norm(self, pt, eta, eta_bar):
        """``<A, A>_*`` for the tensor above."""
        a = pt.linv(asym(pt.u @ eta_bar.T @ eta))
        b = pt.linv(asym(eta.T @ eta_bar @ pt.u.T))
        return float(np.trace(a @ pt.sigma @ b)) / pt.K

    def cross_curvature(self, q, eta, eta_bar):
        """Cross-curvature of the fixed-rank quotient, ``4 <A, A> - <eta, eta>^2``."""
        pt = self.point(q)
        nrm = 2 * self.cross_pairing(pt, eta, eta_bar)
        return 4 * self.oneill_norm(pt, eta, eta_bar) - nrm ** 2

    def asym_defect(self, q, eta, eta_bar):
        """Norm of the antisymmetric part of ``u eta_bar^T eta``."""
        pt = self.point(q)
        return float(np.linalg.norm(asym(pt.u @ eta_bar.T @ eta)))

    # sampling
    def sample_point(self, rng, stiefel=False, max_tries=100, margin=SAMPLE_MARGIN):
        for _ in range(max_tries):
            if stiefel:
                x = random_stiefel(rng, self.n, self.k)
                y = random_stiefel(rng, self.n, self.k)
            else:
                x = rng.standard_normal((self.n, self.k))
                y = rng.standard_normal((self.n, self.k))
            q = self.join(x, y)
            if self.admissible(q, margin):
                return q
        raise SamplerStuck("could not draw an admissible point")

    def null_horizontal(self, q, rng, horizontal=None, max_tries=50, tol=1e-10):
        """Horizontal vector with ``<eta, eta>_* = 0``.

        A random horizontal ``(eta, eta_bar)`` is sheared along the y-part of a
        second horizontal vector so that the cross pairing vanishes.
        """
        horizontal = horizontal or self.horizontal
        pt = self.point(q)
        for _ in range(max_tries):
            eta, eta_bar = self.split(horizontal(q, self.space.random(rng)))
            _, zeta_bar = self.split(horizontal(q, self.space.random(rng)))
            b0 = self.cross_pairing(pt, eta, eta_bar)
            b1 = self.cross_pairing(pt, eta, zeta_bar)
            scale = np.linalg.norm(eta) * max(np.linalg.norm(eta_bar), np.linalg.norm(zeta_bar))
            if abs(b1) < 1e-3 * scale / pt.K:
                continue
            eta_bar = eta_bar - (b0 / b1) * zeta_bar
            if abs(self.cross_pairing(pt, eta, eta_bar)) <= tol * max(1.0, scale):
                return eta, eta_bar
        raise SamplerStuck("could not build a null horizontal vector")

    def symmetric_null_horizontal(self, q, rng):
        """Null horizontal vector with ``u eta_bar^T eta`` symmetric.

        ``eta_bar`` is drawn from the kernel of the linear conditions
        (horizontality, symmetry of ``u eta_bar^T eta``, vanishing norm).
        """
        pt = self.point(q)
        x, u = pt.x, pt.u
        eta, _ = self.split(self.horizontal(q, self.space.random(rng)))
        n, k = self.n, self.k
        iu = np.triu_indices(k, 1)

        def conditions(eb):
            return np.concatenate([asym(x.T @ eb @ u.T)[iu], asym(u @ eb.T @ eta)[iu],
                                   [self.cross_pairing(pt, eta, eb)]])

        basis = np.eye(n * k)
        mat = np.column_stack([conditions(b.reshape(n, k)) for b in basis])
        _, s, vt = np.linalg.svd(mat)
        rank = int(np.sum(s > 1e-10 * s[0]))
        null = vt[rank:]
        if null.shape[0] == 0:
            raise SamplerStuck("no symmetric null direction")
        eta_bar = (rng.standard_normal(null.shape[0]) @ null).reshape(n, k)
        return eta, eta_bar


def make_km_fixed_rank(n=4, k=2, alpha=1.0):
    """Kim-McCann lift on pairs of full-rank ``n x k`` matrices."""
    km = KimMcCann(n, k, alpha)
    dim = km.space.dim
    pi = identity_projection(dim)
    g = OperatorField(apply=km.g, dim=dim, adjoint_apply=km.g, name="km metric")
    gi = OperatorField(apply=km.g_inv, dim=dim, adjoint_apply=km.g_inv, name="km inverse")
    metric = MetricField(g=g, g_inv=gi)
    hor = ProjectionField(apply=km.horizontal, dim=dim, name="km horizontal",
                          kind="horizontal", rank=dim - k * (k - 1))
    split = Splitting.from_horizontal(hor, pi)
    christoffel = ChristoffelField(gamma=km.christoffel, bundle=pi, base=pi,
                                   ring_gamma=km.christoffel, name="km")
    return ManifoldPackage(
        name="km_fixed_rank", space=km.space, pi=pi, metric=metric,
        sample_point=km.sample_point, christoffel=christoffel, splitting=split,
        params={"n": n, "k": k, "alpha": alpha, "km": km})


class KimMcCannGrassmann(KimMcCann):
    """Restriction to pairs of Stiefel matrices and the Grassmann quotient."""

    def stiefel_projector(self, q, v):
        pt = self.point(q)
        x, y, u, s = pt.x, pt.y, pt.u, pt.sigma
        s_inv = np.linalg.inv(s)
        c = 1.0 / (self.alpha + np.trace(s_inv))
        om, omb = self.split(v)
        px = (om - 2 * y @ u.T @ pt.linv(sym(x.T @ om))
              - c * np.trace(s_inv @ x.T @ om) * (x - y @ u.T @ s_inv))
        py = (omb - 2 * x @ pt.linv(sym(u @ y.T @ omb @ u.T)) @ u
              - c * np.trace(u.T @ s_inv @ u @ y.T @ omb) * (y - x @ s_inv @ u))
        return self.join(px, py)

    def grassmann_horizontal(self, q, v):
        pt = self.point(q)
        x, y, u, s = pt.x, pt.y, pt.u, pt.sigma
        s_inv = np.linalg.inv(s)
        c = 1.0 / (self.alpha + np.trace(s_inv))
        om, omb = self.split(v)
        hx = (om - 2 * x @ pt.linv(asym(u @ y.T @ om))
              - 2 * y @ u.T @ pt.linv(sym(x.T @ om))
              - c * np.trace(s_inv @ x.T @ om) * (x - y @ u.T @ s_inv))
        hy = (omb - 2 * y @ u.T @ pt.linv(asym(x.T @ omb @ u.T)) @ u
              - 2 * x @ pt.linv(sym(u @ y.T @ omb @ u.T)) @ u
              - c * np.trace(u.T @ s_inv @ u @ y.T @ omb) * (y - x @ s_inv @ u))
        return self.join(hx, hy)

    def from_blocks(self, q, b, b_bar, x_perp=None, y_perp=None):
        """Horizontal vector generated by ``b, b_bar`` of shape ``(n - k, k)``."""
        pt = self.point(q)
        x, y, u = pt.x, pt.y, pt.u
        x_perp = complement(x) if x_perp is None else x_perp
        y_perp = complement(y) if y_perp is None else y_perp
        eta = x_perp @ b - 2 * x @ pt.linv(asym(u @ y.T @ x_perp @ b))
        eta_bar = y_perp @ b_bar - 2 * y @ u.T @ pt.linv(asym(x.T @ y_perp @ b_bar @ u.T)) @ u
        return eta, eta_bar

    def cross_curvature(self, q, eta, eta_bar):
        """Closed-form cross-curvature on the pair of Grassmann manifolds."""
        pt = self.point(q)
        s, u, K = pt.sigma, pt.u, pt.K
        s_inv = np.linalg.inv(s)
        nrm = 2 * self.cross_pairing(pt, eta, eta_bar)
        ubb = u @ eta_bar.T @ eta_bar @ u.T
        ete = eta.T @ eta
        val = -nrm ** 2 + 4 * self.oneill_norm(pt, eta, eta_bar)
        val += 2.0 / K * np.trace(pt.linv(ete) @ s @ pt.linv(ubb))
        val -= (np.trace(s_inv @ ete) * np.trace(s_inv @ ubb)
                / (2 * K * (self.alpha + np.trace(s_inv))))
        return float(val)

    def cross_curvature_rank_one(self, q, eta, eta_bar):
        """The ``k = 1`` specialisation of the Grassmann cross-curvature."""
        pt = self.point(q)
        sigma = float(pt.sigma[0, 0])
        nrm = 2 * self.cross_pairing(pt, eta, eta_bar)
        a = self.alpha
        return float(-nrm ** 2 + np.sum(eta ** 2) * np.sum(eta_bar ** 2) * a
                     / (2 * (a + sigma) * (1 + a * sigma)))

    def sample_point(self, rng, stiefel=True, max_tries=100, margin=SAMPLE_MARGIN):
        return super().sample_point(rng, stiefel=True, max_tries=max_tries, margin=margin)

    def null_horizontal(self, q, rng, horizontal=None, max_tries=50, tol=1e-10):
        return super().null_horizontal(q, rng, horizontal or self.grassmann_horizontal,
                                       max_tries, tol)


def complement(x):
    """Orthonormal basis of the orthogonal complement of ``range(x)``."""
    u, _, _ = np.linalg.svd(x)
    return u[:, x.shape[1]:]


def d_family(n, k, t):
    """Blocks ``(B, B_bar)`` of the diagonal family at parameter ``t``.

    With ``k_m = min(k, n - k)``, ``D1 = diag(1, t, ..., t)`` and
    ``D2 = diag(-t - (k_m - 2) t^2, t, ..., t, 1)`` are padded with zeros to
    shape ``(n - k, k)``.
    """
    km = min(k, n - k)
    if km < 2:
        raise ValueError("the diagonal family needs min(k, n - k) >= 2")
    d1 = np.full(km, t, dtype=float)
    d1[0] = 1.0
    d2 = np.full(km, t, dtype=float)
    d2[0] = -t - (km - 2) * t ** 2
    d2[-1] = 1.0
    b = np.zeros((n - k, k))
    b_bar = np.zeros((n - k, k))
    idx = np.arange(km)
    b[idx, idx] = d1
    b_bar[idx, idx] = d2
    return b, b_bar


def d_family_value(n, k, alpha, t):
    """Closed-form cross-curvature of the diagonal family at ``x = y``."""
    km = min(k, n - k)
    lead = t + (km - 2) * t ** 2
    first = (lead ** 2 + (km - 2) * t ** 4 + t ** 2) / (2 * (alpha + k))
    second = ((1 + (km - 1) * t ** 2) * (lead ** 2 + (km - 2) * t ** 2 + 1)
              / (2 * (alpha + k) ** 2))
    return first - second


def d_family_value_at_one(n, k, alpha):
    km = min(k, n - k)
    return km * (km - 1) * (alpha + k - km) / (2 * (k + alpha) ** 2)


def make_km_grassmann(n=5, k=2, alpha=1.0):
    """Kim-McCann metric on pairs of Stiefel matrices with the Grassmann splitting."""
    km = KimMcCannGrassmann(n, k, alpha)
    dim = km.space.dim
    pi = ProjectionField(apply=km.stiefel_projector, dim=dim, name="km stiefel projector",
                         kind="tangent", rank=dim - k * (k + 1))
    g = OperatorField(apply=km.g, dim=dim, adjoint_apply=km.g, name="km metric")
    gi = OperatorField(apply=km.g_inv, dim=dim, adjoint_apply=km.g_inv, name="km inverse")
    metric = MetricField(g=g, g_inv=gi)
    hor = ProjectionField(apply=km.grassmann_horizontal, dim=dim, name="km grassmann horizontal",
                          kind="horizontal", rank=2 * k * (n - k))
    split = Splitting.from_horizontal(hor, pi)
    return ManifoldPackage(
        name="km_grassmann", space=km.space, pi=pi, metric=metric,
        sample_point=km.sample_point, splitting=split,
        params={"n": n, "k": k, "alpha": alpha, "km": km})

