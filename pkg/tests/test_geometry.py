import math
from unittest import TestCase

import numpy as np

from conegeom.bodies import Cube, EuclideanBall, lp_ball_normal
from conegeom.errors import AccuracyWarning, DimensionMismatch, NonSmoothBody, SingularMatrix
from conegeom.geometry import (PolarBody, UnitDirection, boundary_point, curvature_function,
                               linear_image, normalized, polar_body, polar_support,
                               polar_support_search, polar_volume, radial_boundary_points,
                               spread_directions, volume, volume_value)
from conegeom.quadrature import ball_volume
from tests.utils import ellipse, lp_ball


class CurvatureTester(TestCase):
    def test_ball_curvature_function(self):
        for n in (2, 3, 4):
            ball = EuclideanBall(n, 2.0)
            u = spread_directions(n, 10) if n <= 3 else np.eye(n)
            np.testing.assert_allclose(curvature_function(ball, u), 2.0 ** (n - 1), rtol=1e-12)

    def test_ellipsoid_curvature_function(self):
        body = ellipse()
        u = spread_directions(2, 16)
        h = body.support(u)
        expected = np.linalg.det(body.matrix) ** 2 / h ** 3
        np.testing.assert_allclose(curvature_function(body, u), expected, rtol=1e-10)

    def test_single_direction_returns_float(self):
        value = curvature_function(ellipse(), UnitDirection(np.array([1.0, 1.0])))
        self.assertIsInstance(value, float)

    def test_polytope_has_no_curvature(self):
        with self.assertRaises(NonSmoothBody):
            curvature_function(Cube(2), np.array([1.0, 0.0]))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            curvature_function(EuclideanBall(3), np.array([1.0, 0.0]))


class BoundaryTester(TestCase):
    def test_boundary_point_lies_on_boundary(self):
        body = lp_ball(3.0)
        points = boundary_point(body, spread_directions(2, 12) + 0.05)
        np.testing.assert_allclose(body.gauge(points.x), 1.0, rtol=1e-12)
        np.testing.assert_allclose(np.sum(points.x * points.normal, axis=1), points.support_value,
                                   rtol=1e-12)

    def test_radial_normals_match_closed_form(self):
        body = lp_ball(3.0)
        points = radial_boundary_points(body, spread_directions(2, 12) + 0.05)
        np.testing.assert_allclose(points.normal, lp_ball_normal(body.spec, points.x), atol=1e-12)

    def test_normal_and_radial_parametrizations_agree(self):
        body = ellipse()
        radial = radial_boundary_points(body, spread_directions(2, 9) + 0.1)
        normal = boundary_point(body, radial.normal)
        np.testing.assert_allclose(normal.x, radial.x, atol=1e-10)
        np.testing.assert_allclose(normal.gauss_curvature, radial.gauss_curvature, rtol=1e-10)


class VolumeTester(TestCase):
    def test_lp_ball_volumes(self):
        body = lp_ball(3.0)
        self.assertAlmostEqual(volume(body).value / body.exact_volume(), 1.0, delta=1e-8)
        self.assertAlmostEqual(polar_volume(body).value / body.exact_polar_volume(), 1.0, delta=1e-8)

    def test_linear_image_scales_volume(self):
        T = np.array([[2.0, 0.3], [0.1, 0.7]])
        body = linear_image(lp_ball(3.0), T)
        expected = abs(np.linalg.det(T)) * lp_ball(3.0).exact_volume()
        self.assertAlmostEqual(volume(body).value / expected, 1.0, delta=1e-8)
        self.assertAlmostEqual(volume_value(body) / expected, 1.0, delta=1e-14)

    def test_normalized_has_unit_volume(self):
        for body in (EuclideanBall(3), ellipse(), lp_ball(1.5)):
            self.assertAlmostEqual(volume_value(normalized(body)), 1.0, delta=1e-12)

    def test_singular_matrix(self):
        with self.assertRaises(SingularMatrix):
            linear_image(EuclideanBall(2), np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_unit_area_disc_polar_volume(self):
        disc = normalized(EuclideanBall(2))
        self.assertAlmostEqual(polar_volume(disc).value, math.pi ** 2, delta=1e-10)


class PolarTester(TestCase):
    def test_polar_support_is_reciprocal_radial(self):
        body = lp_ball(3.0)
        u = spread_directions(2, 8) + 0.01
        np.testing.assert_allclose(polar_support(body, u), 1.0 / body.radial(u / np.linalg.norm(
            u, axis=1, keepdims=True)), rtol=1e-12)

    def test_polar_support_search(self):
        body = ellipse()
        u = UnitDirection(np.array([0.3, 1.0]))
        self.assertAlmostEqual(polar_support_search(body, u), polar_support(body, u), delta=1e-3)

    def test_numerical_polar(self):
        body = lp_ball(3.0)
        with self.assertWarns(AccuracyWarning):
            numerical = PolarBody(body)
        u = spread_directions(2, 8) + 0.02
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        np.testing.assert_allclose(numerical.support(u), body.polar().support(u), rtol=1e-12)
        self.assertAlmostEqual(numerical.exact_volume(), body.exact_polar_volume(), delta=1e-14)

    def test_catalog_polar_preferred(self):
        self.assertIsInstance(polar_body(EuclideanBall(2, 2.0)), EuclideanBall)
        self.assertAlmostEqual(polar_body(EuclideanBall(2, 2.0)).radius, 0.5)


class DirectionsTester(TestCase):
    def test_spread_directions_are_unit(self):
        for n in (2, 3, 5):
            directions = spread_directions(n, 17)
            self.assertEqual(directions.shape, (17, n))
            np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0, rtol=1e-12)

    def test_spread_directions_fill_every_coordinate(self):
        for n in (4, 5):
            directions = spread_directions(n, 256)
            second_moment = directions.T @ directions / len(directions)
            eigenvalues = np.linalg.eigvalsh(second_moment)
            self.assertGreater(eigenvalues.min(), 0.6 / n)
            self.assertLess(eigenvalues.max(), 1.4 / n)
            np.testing.assert_array_equal(directions, spread_directions(n, 256))

    def test_ball_volume(self):
        self.assertAlmostEqual(ball_volume(2), math.pi)
        self.assertAlmostEqual(ball_volume(3), 4 * math.pi / 3)
