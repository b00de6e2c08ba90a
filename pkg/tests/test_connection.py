import numpy as np
import pytest

from embgeom.ambient import directional_derivative, inner
from embgeom.bundle import identity_metric, identity_projection
from embgeom.connection import (
    conjugate,
    conjugate_connection,
    covariant_derivative,
    curvature,
    gauss_codazzi_pairing,
    levi_civita,
    projection_connection,
    second_fundamental_form,
    trivial_connection,
)
from embgeom.errors import SectionViolation
from embgeom.zoo import make_se_n, make_stiefel
from embgeom.zoo.rigid import bracket
from embgeom.zoo.sphere import oblique_projector, sphere_curvature

rng = np.random.default_rng(21)


def unit(n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def sphere_lc(n=4):
    pi = oblique_projector(n)
    return pi, levi_civita(identity_metric(n), pi)


def test_sphere_christoffel():
    pi, lc = sphere_lc()
    q = unit(4)
    xi, eta = pi.apply(q, rng.standard_normal(4)), pi.apply(q, rng.standard_normal(4))
    np.testing.assert_allclose(lc(q, xi, eta), q * (xi @ eta), atol=1e-13)


@pytest.mark.parametrize("variant", ["rc1", "rc2"])
def test_sphere_curvature(variant):
    pi, lc = sphere_lc()
    q = unit(4)
    xi, eta, phi = (pi.apply(q, rng.standard_normal(4)) for _ in range(3))
    np.testing.assert_allclose(curvature(lc, q, xi, eta, phi, variant),
                               sphere_curvature(q, xi, eta, phi), atol=1e-8)


def test_flat_curvature_vanishes():
    gamma = trivial_connection(3)
    out = curvature(gamma, *rng.standard_normal((4, 3)))
    np.testing.assert_allclose(out, 0, atol=1e-12)


def test_se_n_unit_inertia_curvature():
    pkg = make_se_n(3, inertia=np.ones((3, 3)))
    lc = levi_civita(pkg.metric, pkg.pi)
    q = pkg.sample_point(rng)
    xi, eta, phi = (pkg.sample_tangent(q, rng) for _ in range(3))
    u, _ = pkg.space.split(q)
    a, b, c = (u.T @ pkg.space.split(v)[0] for v in (xi, eta, phi))
    ref = pkg.space.join(0.25 * u @ bracket(c, bracket(a, b)), np.zeros(3))
    np.testing.assert_allclose(curvature(lc, q, xi, eta, phi, "rc1"), ref, atol=1e-6)
    np.testing.assert_allclose(pkg.curvature(q, xi, eta, phi), ref, atol=1e-12)
    np.testing.assert_allclose(pkg.curvature(q, xi, xi, phi), 0, atol=1e-14)


def test_se_n_metric_compatibility():
    pkg = make_se_n(3, seed=4)
    gamma = pkg.christoffel
    q = pkg.sample_point(rng)
    x, eta, zeta = (pkg.sample_tangent(q, rng) for _ in range(3))
    y_field = lambda z: pkg.pi.apply(z, eta)
    z_field = lambda z: pkg.pi.apply(z, zeta)
    lhs = directional_derivative(lambda z: pkg.metric.pairing(z, y_field(z), z_field(z)), q, x)
    nab_y = covariant_derivative(gamma, y_field, q, x)
    nab_z = covariant_derivative(gamma, z_field, q, x)
    # eta and zeta are tangent at q, so y_field(q) = eta and z_field(q) = zeta
    rhs = pkg.metric.pairing(q, nab_y, zeta) + pkg.metric.pairing(q, eta, nab_z)
    assert lhs == pytest.approx(rhs, abs=1e-5)


def test_covariant_derivative_of_projected_constant():
    pi, lc = sphere_lc(3)
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    s = lambda x: pi.apply(x, e2)
    np.testing.assert_allclose(covariant_derivative(lc, s, e1, e2), 0, atol=1e-9)
    q = unit(3)
    w, d = rng.standard_normal(3), pi.apply(q, rng.standard_normal(3))
    s = lambda x: pi.apply(x, w)
    nab = covariant_derivative(projection_connection(pi), s, q, d)
    np.testing.assert_allclose(pi.apply(q, nab), nab, atol=1e-9)
    np.testing.assert_allclose(nab, pi.apply(q, directional_derivative(s, q, d)), atol=1e-9)
    with pytest.raises(SectionViolation):
        covariant_derivative(lc, lambda x: x, q, d)


def test_gauss_codazzi_sphere():
    pi = oblique_projector(3)
    e1, e2, e3 = np.eye(3)
    assert gauss_codazzi_pairing(pi, e1, e2, e3, e3, e2) == pytest.approx(1.0, abs=1e-12)
    xi = rng.standard_normal(3)
    assert gauss_codazzi_pairing(pi, e1, xi, xi, e3, e2) == pytest.approx(0.0, abs=1e-12)


def test_gauss_codazzi_stiefel_matches_rc1():
    pkg = make_stiefel(5, 2)
    q = pkg.sample_point(rng)
    xi, eta, w = (pkg.sample_tangent(q, rng) for _ in range(3))
    w_star = pkg.pi.T(q, rng.standard_normal(q.size))
    r = curvature(projection_connection(pkg.pi, pkg.pi), q, xi, eta, w, "rc1")
    assert inner(r, w_star) == pytest.approx(gauss_codazzi_pairing(pkg.pi, q, xi, eta, w, w_star),
                                            abs=1e-6)


def test_conjugate_self_dual():
    pi = oblique_projector(4)
    gamma = projection_connection(pi)
    q = unit(4)
    d, f = pi.apply(q, rng.standard_normal(4)), pi.apply(q, rng.standard_normal(4))
    np.testing.assert_allclose(conjugate_connection(gamma, q, d, f), gamma(q, d, f), atol=1e-12)
    flat = conjugate(trivial_connection(3))
    np.testing.assert_allclose(flat(q[:3], d[:3], f[:3]), 0, atol=1e-14)


def test_conjugate_duality_on_oblique_sphere():
    a = np.array([0.3, -0.1, 0.2, 0.0])
    pi = oblique_projector(4, a)
    gamma = projection_connection(pi)
    dual = conjugate(gamma)
    q = unit(4)
    w, ws = rng.standard_normal(4), rng.standard_normal(4)
    s = lambda x: pi.apply(x, w)
    s_star = lambda x: pi.T(x, ws)
    x = pi.apply(q, rng.standard_normal(4))
    lhs = directional_derivative(lambda z: inner(s(z), s_star(z)), q, x)
    rhs = (inner(covariant_derivative(gamma, s, q, x), s_star(q))
           + inner(s(q), covariant_derivative(dual, s_star, q, x)))
    assert lhs == pytest.approx(rhs, abs=1e-5)


def test_second_fundamental_forms():
    n = 4
    q = unit(n)
    xi, w = rng.standard_normal(n), rng.standard_normal(n)
    flat = trivial_connection(n)
    np.testing.assert_allclose(
        second_fundamental_form(flat, identity_projection(n), q, xi, w), 0, atol=1e-14)
    pi = oblique_projector(n)
    xi, w = pi.apply(q, xi), pi.apply(q, w)
    two = second_fundamental_form(flat, pi, q, xi, w)
    two_star = second_fundamental_form(flat, pi, q, xi, w, dual=True)
    np.testing.assert_allclose(two, two_star, atol=1e-12)
    np.testing.assert_allclose(pi.apply(q, two), 0, atol=1e-12)
    np.testing.assert_allclose(two, -q * (xi @ w), atol=1e-12)
