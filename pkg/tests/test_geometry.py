import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapetaylor.geometry import (BoundaryCurve, SelfIntersectionError, VelocityField, make_circle,
                                  make_ellipse, perturb, shape_derivative_normal_1,
                                  shape_derivative_normal_2, shape_derivative_tangent_1,
                                  shape_derivative_tangent_2, spectral_derivative)


def star(t):
    return 0.4 * np.sin(2 * t) * np.cos(3 * t)


def test_circle_geometry():
    c = make_circle(2.0, 400)
    assert np.allclose(c.curvature, 0.5)
    assert np.allclose(c.speed, 2.0)
    assert np.allclose(c.normal[0], [1.0, 0.0])
    assert np.allclose(np.sum(c.normal * c.position, axis=1), 2.0)
    gauss = np.sum(make_circle(2.5, 400).curvature * make_circle(2.5, 400).weights)
    assert abs(gauss - 2 * np.pi) < 1e-10


def test_ellipse_geometry():
    e = make_ellipse(3.0, 2.0, 400)
    assert e.curvature[0] == pytest.approx(0.75, abs=1e-14)
    assert abs(np.sum(e.curvature * e.weights) - 2 * np.pi) < 1e-8
    assert e.area() == pytest.approx(6 * np.pi, rel=1e-12)
    c, d = make_ellipse(2.0, 2.0, 400), make_circle(2.0, 400)
    for name in ("position", "d1", "d2", "curvature", "dcurvature"):
        assert np.array_equal(getattr(c, name), getattr(d, name))


def test_frame_orthonormal_and_orientation():
    for curve in (make_circle(2.0, 64), make_ellipse(3.0, 2.0, 64)):
        tau, n = curve.tangent, curve.normal
        assert np.allclose(np.sum(tau * n, axis=1), 0.0, atol=1e-12)
        assert np.allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-12)
        assert np.allclose(n, np.column_stack([tau[:, 1], -tau[:, 0]]))
        # outward: the origin is enclosed, so n points away from it
        assert np.all(np.sum(n * curve.position, axis=1) > 0)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        make_circle(0.0)
    with pytest.raises(ValueError):
        make_ellipse(3.0, -1.0)
    with pytest.raises(ValueError):
        make_circle(1.0, 7)


def test_spectral_derivative_exact_on_trig_modes():
    n = 64
    t = 2 * np.pi * np.arange(n) / n
    for m in range(0, n // 2):
        f = np.exp(1j * m * t)
        assert np.max(np.abs(spectral_derivative(f) - 1j * m * f)) < 1e-11 * max(m, 1)
    f = np.sin(3 * t)
    assert np.allclose(spectral_derivative(f, 2), -9 * f, atol=1e-11)


def test_from_samples_reproduces_analytic_geometry():
    for curve in (make_circle(2.0, 400), make_ellipse(3.0, 2.0, 400)):
        s = BoundaryCurve.from_samples(curve.position)
        assert np.max(np.abs(s.speed - curve.speed)) < 1e-10
        assert np.max(np.abs(s.curvature - curve.curvature)) < 1e-10
        assert np.max(np.abs(s.dcurvature - curve.dcurvature)) < 1e-9


def test_perturb_uniform_offset_of_circle():
    c = make_circle(2.0, 400)
    one = VelocityField.from_values(c, np.ones(c.n_nodes))
    p = perturb(c, [one], [0.3])
    assert np.max(np.abs(p.curvature - 1 / 2.3)) < 1e-10
    assert perturb(c, [one], [0.0]) is c


def test_perturb_round_trip():
    e = make_ellipse(3.0, 2.0, 256)
    v = VelocityField.from_function(e, star)
    p = perturb(e, [v], [0.05])
    # the inverse offset moves along the perturbed normal n - eps v' tau, leaving eps^2 v v' tau
    back = perturb(p, [VelocityField.from_values(p, v.values)], [-0.05])
    drift = back.position - e.position - 0.05**2 * (v.values * v.dvalues)[:, None] * e.tangent
    assert np.max(np.abs(drift)) < 1e-4
    c = make_circle(2.0, 128)
    one = VelocityField.from_values(c, np.full(128, 0.4))
    there = perturb(c, [one], [0.2])
    back = perturb(there, [VelocityField.from_values(there, one.values)], [-0.2])
    assert np.max(np.abs(back.position - c.position)) < 1e-9
    assert np.allclose(np.linalg.norm(p.normal, axis=1), 1.0, atol=1e-10)
    assert np.allclose(np.sum(p.normal * p.tangent, axis=1), 0.0, atol=1e-10)


def test_perturbed_area_against_dense_resampling():
    c = make_circle(2.0, 400)
    p = perturb(c, [VelocityField.from_function(c, star)], [0.3])
    dense_t = 2 * np.pi * np.arange(3200) / 3200
    r = 2.0 + 0.3 * star(dense_t)
    # polar area 1/2 int r^2 dt; the trapezoid rule is exact for this trigonometric polynomial
    exact = 0.5 * np.mean(r**2) * 2 * np.pi
    assert abs(p.area() - exact) < 1e-8


def test_self_intersection_guard():
    c = make_circle(1.0, 64)
    v = VelocityField.from_values(c, -np.ones(64))
    with pytest.raises(SelfIntersectionError):
        perturb(c, [v], [1.5])
    with pytest.raises(ValueError):
        perturb(c, [v, v], [0.1])


def test_contains_and_distance():
    e = make_ellipse(3.0, 2.0, 128)
    assert list(e.contains([[0, 0], [2.9, 0], [3.1, 0], [0, 2.1]])) == [True, True, False, False]
    assert e.distance([[5.0, 0.0]])[0] == pytest.approx(2.0)


def test_normal_derivative_1_closed_form():
    c = make_circle(2.0, 400)
    v = VelocityField.from_function(c, lambda t: np.sin(t))  # sin(s/2) in arc length
    dn = shape_derivative_normal_1(c, v)
    assert np.allclose(dn, -0.5 * np.cos(c.nodes)[:, None] * c.tangent, atol=1e-12)
    const = VelocityField.from_values(c, np.full(400, 0.7))
    assert np.allclose(shape_derivative_normal_1(c, const), 0.0, atol=1e-12)


@pytest.mark.parametrize("make", [lambda: make_circle(2.0, 256), lambda: make_ellipse(3.0, 2.0, 256)])
def test_frame_derivatives_finite_difference(make):
    curve = make()
    v = VelocityField.from_function(curve, lambda t: 0.3 * np.sin(2 * t) + 0.1 * np.cos(5 * t) + 0.2)
    eps = 1e-6
    n_p = perturb(curve, [v], [eps]).normal
    t_p = perturb(curve, [v], [eps]).tangent
    assert np.max(np.abs((n_p - curve.normal) / eps - shape_derivative_normal_1(curve, v))) < 1e-5
    assert np.max(np.abs((t_p - curve.tangent) / eps - shape_derivative_tangent_1(curve, v))) < 1e-5
    eps = 1e-3
    plus, minus = perturb(curve, [v], [eps]), perturb(curve, [v], [-eps])
    d2n = (plus.normal - 2 * curve.normal + minus.normal) / eps**2
    d2t = (plus.tangent - 2 * curve.tangent + minus.tangent) / eps**2
    assert np.max(np.abs(d2n - shape_derivative_normal_2(curve, v, v))) < 1e-4
    assert np.max(np.abs(d2t - shape_derivative_tangent_2(curve, v, v))) < 1e-4


def test_mixed_frame_derivative_by_polarization():
    curve = make_ellipse(3.0, 2.0, 256)
    v = VelocityField.from_function(curve, lambda t: np.sin(2 * t))
    w = VelocityField.from_function(curve, lambda t: np.cos(3 * t) + 0.5)
    eps = 1e-3

    def n_at(a, b):
        return perturb(curve, [v, w], [a, b]).normal

    mixed = (n_at(eps, eps) - n_at(eps, -eps) - n_at(-eps, eps) + n_at(-eps, -eps)) / (4 * eps**2)
    assert np.max(np.abs(mixed - shape_derivative_normal_2(curve, v, w))) < 1e-4
    assert np.array_equal(shape_derivative_normal_2(curve, v, w), shape_derivative_normal_2(curve, w, v))


def test_constant_offset_of_circle_leaves_normal_fixed():
    c = make_circle(2.0, 128)
    v = VelocityField.from_values(c, np.full(128, 0.8))
    assert np.allclose(shape_derivative_normal_2(c, v, v), 0.0, atol=1e-12)
    p = perturb(c, [v], [0.1])
    assert np.allclose(p.normal, c.normal, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4))
def test_tangent_variation_orthogonal(coeffs):
    curve = make_ellipse(2.5, 1.5, 64)
    t = curve.nodes
    v = VelocityField.from_values(curve, coeffs[0] + coeffs[1] * np.cos(t) + coeffs[2] * np.sin(2 * t)
                                  + coeffs[3] * np.cos(3 * t))
    assert np.max(np.abs(np.sum(curve.tangent * shape_derivative_tangent_1(curve, v), axis=1))) < 1e-12
    assert np.max(np.abs(np.sum(curve.normal * shape_derivative_normal_1(curve, v), axis=1))) < 1e-12
