import math
from unittest import TestCase

import numpy as np

from conegeom.affine_surface import (affine_surface_area_boundary, as_p, as_p_mixed, dual_mixed_volume,
                                     monotone_quantities)
from conegeom.bodies import Cube, EuclideanBall, lp_ball_as_p
from conegeom.errors import DimensionMismatch, ExcludedExponent, NonSmoothBody
from conegeom.geometry import linear_image
from tests.config import get_test_config
from tests.utils import ellipse, lp_ball


class AspTester(TestCase):
    def setUp(self):
        self.config = get_test_config()

    def test_ball(self):
        for n in (2, 3):
            ball = EuclideanBall(n)
            area = n * ball.exact_volume()
            for p in (-1.0, 0.0, 1.0, 3.0, math.inf):
                self.assertAlmostEqual(as_p(ball, p).value / area, 1.0, delta=self.config['ball_rtol'])

    def test_lp_ball_closed_form(self):
        for r in self.config['r_values']:
            body = lp_ball(r)
            for p in (0.5, 1.0, 4.0, 64.0):
                expected = lp_ball_as_p(body.spec, p)
                self.assertAlmostEqual(as_p(body, p).value / expected, 1.0, delta=self.config['omega_rtol'])

    def test_three_dimensional_lp_ball(self):
        body = lp_ball(3.0, n=3)
        self.assertAlmostEqual(as_p(body, 1.0).value / lp_ball_as_p(body.spec, 1.0), 1.0,
                               delta=self.config['omega_rtol'])

    def test_special_unimodular_invariance(self):
        T = np.array([[1.5, 0.4], [0.2, 0.72]])
        T = T / math.sqrt(np.linalg.det(T))
        body = lp_ball(3.0)
        for p in (1.0, 5.0):
            self.assertAlmostEqual(as_p(linear_image(body, T), p).value / as_p(body, p).value, 1.0,
                                   delta=self.config['omega_rtol'])

    def test_scaling_law(self):
        body = ellipse()
        scale = 1.7
        n, p = 2, 3.0
        ratio = as_p(linear_image(body, scale * np.eye(2)), p).value / as_p(body, p).value
        self.assertAlmostEqual(ratio, scale ** (n * (n - p) / (n + p)), delta=1e-8)

    def test_excluded_exponent(self):
        with self.assertRaises(ExcludedExponent):
            as_p(ellipse(), -2.0)

    def test_polytopes(self):
        self.assertEqual(as_p(Cube(2), 1.0).value, 0.0)
        with self.assertRaises(NonSmoothBody):
            as_p(Cube(2), -1.0)

    def test_boundary_form(self):
        for body in (EuclideanBall(2), ellipse(), lp_ball(3.0)):
            self.assertAlmostEqual(affine_surface_area_boundary(body) / as_p(body, 1.0).value, 1.0,
                                   delta=self.config['omega_rtol'])
        with self.assertRaises(NonSmoothBody):
            affine_surface_area_boundary(Cube(2))


class MixedTester(TestCase):
    def test_equal_bodies(self):
        body = lp_ball(3.0)
        for p in (1.0, 2.0):
            self.assertAlmostEqual(as_p_mixed([body, body], p).value / as_p(body, p).value, 1.0, delta=1e-8)
        self.assertAlmostEqual(as_p_mixed([body, body], math.inf).value / (2 * body.exact_polar_volume()),
                               1.0, delta=1e-8)

    def test_dual_mixed_volume_of_balls(self):
        value = dual_mixed_volume([EuclideanBall(2, 2.0), EuclideanBall(2, 0.5)])
        self.assertAlmostEqual(value, 2 * math.pi, delta=1e-10)

    def test_wrong_number_of_bodies(self):
        with self.assertRaises(DimensionMismatch):
            as_p_mixed([ellipse()], 1.0)
        with self.assertRaises(DimensionMismatch):
            dual_mixed_volume([ellipse(), EuclideanBall(3)])


class MonotoneTester(TestCase):
    def test_monotone_quantities(self):
        frame = monotone_quantities(lp_ball(3.0), [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0])
        self.assertTrue(math.isnan(frame['over_volume'].iloc[0]))
        self.assertTrue(np.all(np.diff(frame['over_as_inf']) <= 1e-9))
        self.assertTrue(np.all(np.diff(frame['over_polar']) <= 1e-9))
        self.assertTrue(np.all(np.diff(frame['over_volume'].iloc[1:]) >= -1e-9))

    def test_constant_for_ellipsoids(self):
        frame = monotone_quantities(ellipse(), [0.5, 2.0, 8.0])
        np.testing.assert_allclose(frame['over_as_inf'], 1.0, rtol=1e-8)
        np.testing.assert_allclose(frame['over_volume'], 1.0, rtol=1e-8)
