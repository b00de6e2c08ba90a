import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embgeom.ambient import asym, inner
from embgeom.bundle import (
    ConstraintMap,
    bundle_tangent_projector,
    dual_pair_projector,
    extend_metric,
    identity_metric,
    parametric_projector,
    projector_from_constraint,
)
from embgeom.errors import (
    DegeneratePairing,
    DegenerateTangentPairing,
    OffBundle,
    OffManifold,
    RankDeficientConstraint,
    RankDeficientFrame,
)
from embgeom.zoo import make_se_n, make_sphere, make_stiefel
from embgeom.zoo.sphere import diagonal_extension_metric, oblique_projector, sphere_constraint


def unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def test_dual_pair_small_example():
    pi = dual_pair_projector(np.array([[1.0], [0.0]]), np.array([[1.0], [1.0]]))
    np.testing.assert_allclose(pi @ [2.0, 5.0], [7.0, 0.0])
    np.testing.assert_allclose(pi @ pi, pi)


def test_dual_pair_orthonormal_is_orthogonal_projector():
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((5, 2)))
    np.testing.assert_allclose(dual_pair_projector(q, q), q @ q.T, atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_dual_pair_matches_least_squares(seed):
    rng = np.random.default_rng(seed)
    v, w = rng.standard_normal((6, 3)), rng.standard_normal((6, 3))
    pi = dual_pair_projector(v, w)
    f = rng.standard_normal(6)
    # oracle: coefficients c with w^T (f - v c) = 0
    c = np.linalg.lstsq(w.T @ v, w.T @ f, rcond=None)[0]
    np.testing.assert_allclose(pi @ f, v @ c, atol=1e-9)
    np.testing.assert_allclose(pi @ pi, pi, atol=1e-10)
    np.testing.assert_allclose(pi @ v, v, atol=1e-10)


def test_dual_pair_degenerate():
    with pytest.raises(DegeneratePairing):
        dual_pair_projector(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]))


def test_constraint_projector_sphere():
    rng = np.random.default_rng(1)
    q = unit(rng, 4)
    pi = projector_from_constraint(sphere_constraint(4), identity_metric(4), q)
    np.testing.assert_allclose(pi.matrix(q), np.eye(4) - np.outer(q, q), atol=1e-14)


def test_constraint_projector_se_n():
    pkg = make_se_n(3, seed=2)
    rng = np.random.default_rng(2)
    q = pkg.sample_point(rng)
    pi = projector_from_constraint(pkg.constraint, pkg.metric, q)
    u, _ = pkg.space.split(q)
    for _ in range(5):
        v = pkg.space.random(rng)
        e, dz = pkg.space.split(v)
        np.testing.assert_allclose(pi.apply(q, v), pkg.space.join(u @ asym(u.T @ e), dz),
                                   atol=1e-12)


def test_constraint_projector_diagonal_metric_is_compatible():
    rng = np.random.default_rng(3)
    g = diagonal_extension_metric(rng.uniform(0.5, 2.0, 4))
    q = unit(rng, 4)
    pm = projector_from_constraint(sphere_constraint(4), g, q).matrix(q)
    gm = g.g.matrix(q)
    np.testing.assert_allclose(gm @ pm, pm.T @ gm, atol=1e-9)
    np.testing.assert_allclose(pm @ pm, pm, atol=1e-12)


def test_constraint_errors():
    g = identity_metric(3)
    with pytest.raises(OffManifold):
        projector_from_constraint(sphere_constraint(3), g, np.array([2.0, 0, 0]))
    doubled = ConstraintMap(value=lambda q: np.array([q @ q - 1, 2 * (q @ q - 1)]),
                            jacobian=lambda q, x: np.array([2 * q @ x, 4 * q @ x]),
                            codim=2, dim=3)
    with pytest.raises(RankDeficientConstraint):
        projector_from_constraint(doubled, g, np.array([1.0, 0, 0]))


def test_parametric_projector_sphere_and_invariance():
    n = 4
    e1 = np.eye(n)[0]
    frame = lambda q: np.eye(n)[:, 1:]
    np.testing.assert_allclose(parametric_projector(frame, identity_metric(n), e1),
                               np.eye(n) - np.outer(e1, e1), atol=1e-14)
    rng = np.random.default_rng(4)
    g = diagonal_extension_metric(rng.uniform(0.5, 2.0, n))
    q = unit(rng, n)
    base = lambda x: np.linalg.svd(np.eye(n) - np.outer(x, x))[0][:, :n - 1]
    m = rng.standard_normal((n - 1, n - 1)) + 3 * np.eye(n - 1)
    p1 = parametric_projector(base, g, q)
    p2 = parametric_projector(lambda x: base(x) @ m, g, q)
    np.testing.assert_allclose(p1, p2, atol=1e-10)
    np.testing.assert_allclose(p1, projector_from_constraint(sphere_constraint(n), g, q).matrix(q),
                               atol=1e-10)
    with pytest.raises(RankDeficientFrame):
        parametric_projector(lambda x: np.ones((n, 2)), g, q)


def test_parametric_stiefel_horizontal_frame():
    n, k = 5, 2
    pkg = make_stiefel(n, k)
    q = pkg.sample_point(np.random.default_rng(5))
    y = q.reshape(n, k)
    perp = np.linalg.svd(y)[0][:, k:]
    cols = [np.outer(perp[:, i], np.eye(k)[j]).ravel() for i in range(n - k) for j in range(k)]
    pm = parametric_projector(lambda x: np.column_stack(cols), identity_metric(n * k), q)
    np.testing.assert_allclose(pm, pkg.splitting.horizontal.matrix(q), atol=1e-12)


def _tw_residual(pi, q, f, omega, phi):
    return np.linalg.norm(pi.derivative(q, omega, f) + pi.apply(q, phi) - phi)


def test_tangent_bundle_projector_membership_and_flip():
    rng = np.random.default_rng(6)
    pi = oblique_projector(4)
    q = unit(rng, 4)
    v = pi.apply(q, rng.standard_normal(4))
    proj = bundle_tangent_projector("TW", pi, pi, q, v)
    dq, dv = proj(rng.standard_normal(4), rng.standard_normal(4))
    assert _tw_residual(pi, q, v, dq, dv) < 1e-12
    again = proj(dq, dv)
    np.testing.assert_allclose(again[0], dq, atol=1e-12)
    np.testing.assert_allclose(again[1], dv, atol=1e-12)
    # the flipped element is in TTQ as well
    assert _tw_residual(pi, q, dq, v, dv) < 1e-12


@pytest.mark.parametrize("a", [None, [0.3, 0.1, 0.0, 0.0]])
def test_tangent_and_cotangent_projectors_are_adjoint(a):
    rng = np.random.default_rng(7)
    pi = oblique_projector(4, a)
    q = unit(rng, 4)
    f = pi.apply(q, rng.standard_normal(4))
    t = bundle_tangent_projector("TW", pi, pi, q, f)
    fs = pi.T(q, rng.standard_normal(4))
    ts = bundle_tangent_projector("T*W*", pi, pi, q, fs)
    t_star = bundle_tangent_projector("T*W", pi, pi, q, f)
    for _ in range(5):
        x = rng.standard_normal(4), rng.standard_normal(4)
        y = rng.standard_normal(4), rng.standard_normal(4)
        lhs = sum(inner(a_, b_) for a_, b_ in zip(t(*x), y))
        rhs = sum(inner(a_, b_) for a_, b_ in zip(x, t_star(*y)))
        assert lhs == pytest.approx(rhs, abs=1e-6)
    t_dual = bundle_tangent_projector("TW*", pi, pi, q, fs)
    for _ in range(5):
        x = rng.standard_normal(4), rng.standard_normal(4)
        y = rng.standard_normal(4), rng.standard_normal(4)
        lhs = sum(inner(a_, b_) for a_, b_ in zip(t_dual(*x), y))
        rhs = sum(inner(a_, b_) for a_, b_ in zip(x, ts(*y)))
        assert lhs == pytest.approx(rhs, abs=1e-6)
    with pytest.raises(OffBundle):
        bundle_tangent_projector("TW", pi, pi, q, q)
    with pytest.raises(ValueError):
        bundle_tangent_projector("XW", pi, pi, q, f)


def test_extend_metric():
    rng = np.random.default_rng(8)
    n = 4
    q = unit(rng, n)
    pe = np.eye(n) - np.outer(q, q)
    np.testing.assert_allclose(extend_metric(lambda a, b: a @ b, pe, q), np.eye(n), atol=1e-12)
    lam = rng.uniform(0.5, 2.0, n)
    g = extend_metric(lambda a, b: a @ (lam * b), pe, q)
    ref = np.outer(q, q) + pe @ np.diag(lam) @ pe
    np.testing.assert_allclose(g, ref, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(g) > 0)
    with pytest.raises(DegenerateTangentPairing):
        extend_metric(lambda a, b: 0.0 * (a @ b), pe, q)


def test_oblique_projector_kernel():
    a = np.array([0.2, 0.0, 0.1])
    pkg = make_sphere(3, a=a)
    q = pkg.sample_point(np.random.default_rng(9))
    pm = pkg.pi.matrix(q)
    np.testing.assert_allclose(pm @ pm, pm, atol=1e-14)
    np.testing.assert_allclose(pm @ (q + a), 0, atol=1e-14)
    np.testing.assert_allclose(q @ pm, 0, atol=1e-14)
