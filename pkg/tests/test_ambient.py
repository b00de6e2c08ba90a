import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embgeom.ambient import (
    AmbientSpace,
    DiffConfig,
    OperatorField,
    directional_derivative,
    fd_gradient,
    identity_field,
    inner,
    matrix_field,
    raise_index,
    second_directional_derivative,
)
from embgeom.errors import AnalyticNumericMismatch, NonFinite, SymmetryViolation
from embgeom.zoo.sphere import oblique_projector

rng = np.random.default_rng(11)


def test_space_roundtrip_and_inner():
    sp = AmbientSpace(((3, 2), (4,)))
    a, b = rng.standard_normal((3, 2)), rng.standard_normal(4)
    v = sp.join(a, b)
    assert sp.dim == 10
    x, y = sp.split(v)
    np.testing.assert_array_equal(x, a)
    np.testing.assert_array_equal(y, b)
    c, d = rng.standard_normal((3, 2)), rng.standard_normal(4)
    assert inner(v, sp.join(c, d)) == pytest.approx(np.trace(a.T @ c) + b @ d)
    assert len(sp.basis()) == sp.dim


@given(st.floats(1e-6, 1e6), st.booleans())
def test_step_positive(hint, rich):
    cfg = DiffConfig(richardson=rich, scale_hint=hint)
    assert cfg.step(np.zeros(3)) > 0
    assert cfg.step(np.array([1e3, -2.0])) >= cfg.step(np.zeros(2))


def test_identity_and_product_rule():
    q, xi = rng.standard_normal(3), rng.standard_normal(3)
    np.testing.assert_allclose(directional_derivative(lambda x: x, q, xi), xi, atol=1e-10)
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    d = directional_derivative(lambda x: np.outer(x, x), e1, e2)
    np.testing.assert_allclose(d, np.outer(e1, e2) + np.outer(e2, e1), atol=1e-10)


def test_sphere_projector_derivative_example():
    pi = oblique_projector(3)
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    analytic = pi.derivative(e1, e2, e1)
    np.testing.assert_allclose(analytic, -e2, atol=1e-14)
    fd = OperatorField(apply=pi.apply, dim=3).derivative(e1, e2, e1)
    np.testing.assert_allclose(fd, -e2, atol=1e-6)
    op = directional_derivative(pi, e1, e2)
    np.testing.assert_allclose(op(e1), -e2, atol=1e-14)


def test_analytic_mismatch_detected():
    cfg = DiffConfig(check_tolerance=1e-6)
    q, xi = rng.standard_normal(3), rng.standard_normal(3)
    with pytest.raises(AnalyticNumericMismatch) as info:
        directional_derivative(lambda x: x ** 2, q, xi, cfg, analytic=lambda x, d: 3 * x * d)
    assert info.value.analytic is not None and info.value.numeric is not None
    ok = directional_derivative(lambda x: x ** 2, q, xi, cfg, analytic=lambda x, d: 2 * x * d)
    np.testing.assert_allclose(ok, 2 * q * xi)


def test_non_finite():
    with pytest.raises(NonFinite), np.errstate(invalid="ignore"):
        directional_derivative(lambda x: np.log(x), np.array([-1.0, 1.0]), np.ones(2))


def test_second_derivative():
    q = rng.standard_normal(3)
    x1, x2 = rng.standard_normal(3), rng.standard_normal(3)
    np.testing.assert_allclose(second_directional_derivative(lambda x: 2 * x, q, x1, x2), 0, atol=1e-8)
    val = second_directional_derivative(lambda x: np.outer(x, x), q, x1, x2,
                                        DiffConfig(check_tolerance=1e-6))
    np.testing.assert_allclose(val, np.outer(x1, x2) + np.outer(x2, x1), atol=1e-7)


def test_second_derivative_of_sphere_christoffel_matches_nested_fd():
    q = rng.standard_normal(3)
    xi, eta, x1, x2 = (rng.standard_normal(3) for _ in range(4))

    def gamma(x):
        return x * (xi @ eta) + np.outer(x, x) @ eta

    ref = x1 * 0 + (np.outer(x1, x2) + np.outer(x2, x1)) @ eta
    np.testing.assert_allclose(second_directional_derivative(gamma, q, x1, x2), ref, atol=1e-7)


def test_symmetry_violation():
    cfg = DiffConfig(check_tolerance=1e-6)
    q = rng.standard_normal(2)
    x1, x2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    # a deliberately inconsistent first derivative: D_d F = (d_0 * x_1, 0)
    bad = lambda x, d: np.array([d[0] * x[1], 0.0])
    with pytest.raises(SymmetryViolation):
        second_directional_derivative(None, q, x1, x2, cfg, analytic_first=bad)


def test_raise_index_constant_is_zero():
    psi = identity_field(4)
    assert np.all(raise_index(psi, rng.standard_normal(4), rng.standard_normal(4),
                              rng.standard_normal(4)) == 0)


def test_raise_index_oblique_override_matches_sweep():
    a = np.array([0.3, 0.0, 0.0, 0.0])
    pi = oblique_projector(4, a)
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    p = pi.T(q, rng.standard_normal(4))
    w = rng.standard_normal(4)
    closed = raise_index(pi.transpose(), q, p, w, pi=pi)
    np.testing.assert_allclose(closed, pi.T(q, -(w @ q) / (1 + q @ a) * p), atol=1e-14)
    plain = OperatorField(apply=pi.T, dim=4, adjoint_apply=pi.apply)
    swept = raise_index(plain, q, p, w, pi=pi)
    np.testing.assert_allclose(closed, swept, atol=1e-8)


def test_raise_index_defining_identity():
    n = 4
    m0, m1 = rng.standard_normal((n, n)), rng.standard_normal((n, n))
    psi = matrix_field(lambda x: m0 + np.sin(x[0]) * m1 + np.outer(x, x), n)
    pi = oblique_projector(n)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    e1, e2 = rng.standard_normal(n), rng.standard_normal(n)
    w = raise_index(psi, q, e1, e2, pi=pi)
    np.testing.assert_allclose(pi.T(q, w), w, atol=1e-12)
    for d in np.eye(n):
        delta = pi.apply(q, d)
        assert inner(delta, w) == pytest.approx(inner(e2, psi.derivative(q, delta, e1)), abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_adjoint_consistency_of_oblique_projector(seed):
    r = np.random.default_rng(seed)
    a = r.standard_normal(5)
    a *= 0.9 * r.uniform() / np.linalg.norm(a)
    pi = oblique_projector(5, a)
    q = r.standard_normal(5)
    q /= np.linalg.norm(q)
    for _ in range(4):
        v, w = r.standard_normal(5), r.standard_normal(5)
        assert abs(inner(pi.apply(q, v), w) - inner(v, pi.T(q, w))) <= 1e-10 * np.linalg.norm(v) * np.linalg.norm(w) * 10


def test_fd_gradient():
    x = rng.standard_normal(5)
    np.testing.assert_allclose(fd_gradient(lambda z: np.sin(z).sum() + z @ z, x),
                               np.cos(x) + 2 * x, atol=1e-9)
