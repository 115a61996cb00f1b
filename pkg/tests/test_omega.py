import math
from unittest import TestCase

import numpy as np

from conegeom.bodies import Cube, EuclideanBall
from conegeom.errors import DomainError, NonSmoothBody, VolumeNotNormalized
from conegeom.geometry import linear_image, normalized
from conegeom.omega import (as_p_bound_slack, information_inequality_slack, isoperimetric_slack,
                            max_relative_gap, omega_closed_form, omega_dual_p_limit, omega_entropy,
                            omega_entropy_dual, omega_from_second_limit, omega_lp_closed_form,
                            omega_mixed, omega_mixed_p_limit, omega_p_limit, omega_report,
                            polar_product_slack)
from tests.config import get_test_config
from tests.utils import ellipse, lp_ball, random_matrix, rotated_ellipse, unit_area_disc
from tests.utils_testing import slow


class ClosedFormTester(TestCase):
    def test_ball_is_one(self):
        for n in (2, 3, 4, 5):
            self.assertAlmostEqual(omega_entropy(EuclideanBall(n)), 1.0, delta=1e-12)
            self.assertEqual(omega_lp_closed_form(n, 2.0), 1.0)

    def test_unit_area_disc(self):
        disc = unit_area_disc()
        self.assertAlmostEqual(omega_closed_form(disc) / math.pi ** -4, 1.0, delta=1e-12)
        self.assertAlmostEqual(omega_entropy(disc) / math.pi ** -4, 1.0, delta=1e-10)

    def test_ellipsoid(self):
        body = rotated_ellipse()
        expected = np.linalg.det(body.matrix) ** 4
        self.assertAlmostEqual(omega_closed_form(body), expected, delta=1e-14)
        self.assertAlmostEqual(omega_entropy(body) / expected, 1.0, delta=1e-10)

    def test_lp_balls(self):
        config = get_test_config()
        for r in config['r_values']:
            body = lp_ball(r)
            self.assertAlmostEqual(omega_entropy(body) / omega_lp_closed_form(2, r), 1.0,
                                   delta=config['omega_rtol'])
        body = lp_ball(3.0, n=3)
        self.assertAlmostEqual(omega_entropy(body) / omega_lp_closed_form(3, 3.0), 1.0,
                               delta=config['omega_rtol'])

    def test_polytopes(self):
        self.assertEqual(omega_entropy(Cube(2)), 0.0)
        self.assertEqual(omega_closed_form(Cube(3)), 0.0)

    def test_invalid_exponent(self):
        with self.assertRaises(DomainError):
            omega_lp_closed_form(2, 1.0)


class InvarianceTester(TestCase):
    def test_linear_images(self):
        config = get_test_config()
        rng = np.random.default_rng(config['seed'])
        body = lp_ball(3.0)
        base = omega_lp_closed_form(2, 3.0)
        for _ in range(3):
            T = random_matrix(rng, 2, max_condition=4.0)
            image = linear_image(body, T)
            expected = abs(np.linalg.det(T)) ** 4 * base
            self.assertAlmostEqual(omega_closed_form(image) / expected, 1.0, delta=1e-12)
            self.assertAlmostEqual(omega_entropy(image) / expected, 1.0, delta=config['omega_rtol'])

    @slow
    def test_many_linear_images(self):
        rng = np.random.default_rng(get_test_config()['seed'])
        for body, base in ((EuclideanBall(2), 1.0), (lp_ball(3.0), omega_lp_closed_form(2, 3.0))):
            for _ in range(20):
                T = random_matrix(rng, 2, max_condition=10.0)
                self.assertLessEqual(np.linalg.cond(T), 10.0 + 1e-9)
                image = linear_image(body, T)
                expected = abs(np.linalg.det(T)) ** 4 * base
                self.assertAlmostEqual(omega_closed_form(image) / expected, 1.0, delta=1e-12)
                self.assertAlmostEqual(omega_entropy(image) / expected, 1.0, delta=1e-5)

    def test_dual_entropy_route(self):
        config = get_test_config()
        for body in (ellipse(), lp_ball(1.5), lp_ball(5.0)):
            self.assertAlmostEqual(omega_entropy_dual(body) / omega_entropy(body), 1.0,
                                   delta=config['omega_rtol'])

    def test_mixed_with_equal_bodies(self):
        body = lp_ball(3.0)
        self.assertAlmostEqual(omega_mixed([body, body]) / omega_entropy(body), 1.0, delta=1e-8)


class SlackTester(TestCase):
    def test_information_inequality(self):
        self.assertAlmostEqual(information_inequality_slack(rotated_ellipse()), 0.0, delta=1e-9)
        for r in get_test_config()['r_values']:
            self.assertGreater(information_inequality_slack(lp_ball(r)), 0.0)

    def test_as_p_bound(self):
        body = lp_ball(3.0)
        for p in (1.0, 4.0, 32.0):
            self.assertGreaterEqual(as_p_bound_slack(body, p), -1e-9)
        self.assertAlmostEqual(as_p_bound_slack(ellipse(), 2.0), 0.0, delta=1e-8)

    def test_polar_product(self):
        self.assertAlmostEqual(polar_product_slack(ellipse()), 0.0, delta=1e-9)
        self.assertGreater(polar_product_slack(lp_ball(3.0)), 0.0)

    def test_isoperimetric(self):
        self.assertAlmostEqual(isoperimetric_slack(unit_area_disc()), 0.0, delta=1e-9)
        self.assertGreater(isoperimetric_slack(normalized(lp_ball(3.0))), 0.0)
        with self.assertRaises(VolumeNotNormalized):
            isoperimetric_slack(ellipse())

    def test_second_limit_inversion(self):
        n, polar_vol, omega = 2, math.pi ** 2, math.pi ** -4
        limit = -(polar_vol / 2) * math.log(omega * 2 ** (n * (n + 1)) * math.pi ** (n * (n - 1)))
        self.assertAlmostEqual(limit, -math.pi ** 2 * math.log(8 / math.pi), delta=1e-12)
        self.assertAlmostEqual(omega_from_second_limit(limit, polar_vol, n) / omega, 1.0, delta=1e-12)

    def test_max_relative_gap(self):
        self.assertEqual(max_relative_gap([]), 0.0)
        self.assertAlmostEqual(max_relative_gap([1.0, 1.1, 0.9]), 0.2 / 1.1)


class LimitRouteTester(TestCase):
    def test_ball_limit_is_exact(self):
        fit = omega_p_limit(EuclideanBall(2))
        self.assertAlmostEqual(fit.exp_limit, 1.0, delta=1e-10)

    def test_grid_validation(self):
        with self.assertRaises(ValueError):
            omega_p_limit(ellipse(), [16.0, 32.0, 64.0, 128.0])
        with self.assertRaises(ValueError):
            omega_p_limit(ellipse(), [2048.0, 1024.0, 512.0, 256.0])
        with self.assertRaises(ValueError):
            omega_dual_p_limit(ellipse(), [0.001, 0.01, 0.1, 0.2])
        with self.assertRaises(NonSmoothBody):
            omega_p_limit(Cube(2))

    @slow
    def test_p_limit_routes(self):
        config = get_test_config()
        for r in config['r_values']:
            body = lp_ball(r)
            expected = omega_lp_closed_form(2, r)
            self.assertAlmostEqual(omega_p_limit(body, config['p_grid']).exp_limit / expected, 1.0,
                                   delta=config['limit_rtol'])
            q_grid = sorted((4 / p for p in config['p_grid']), reverse=True)
            self.assertAlmostEqual(omega_dual_p_limit(body, q_grid).exp_limit / expected, 1.0,
                                   delta=config['limit_rtol'])

    @slow
    def test_mixed_p_limit(self):
        body = lp_ball(3.0)
        fit = omega_mixed_p_limit([body, body])
        self.assertAlmostEqual(fit.exp_limit / omega_lp_closed_form(2, 3.0), 1.0,
                               delta=get_test_config()['limit_rtol'])


class ReportTester(TestCase):
    def test_report_for_an_ellipse(self):
        report = omega_report(ellipse(), routes=['entropy', 'dual-entropy', 'closed-form'])
        self.assertEqual(set(report.estimates()), {'entropy', 'dual-entropy', 'closed-form'})
        self.assertLess(report.cross_route_max_rel_discrepancy, 1e-8)
        self.assertIn('estimates', report.to_dict())

    def test_report_for_a_polytope(self):
        report = omega_report(Cube(2), routes=['entropy', 'closed-form'])
        self.assertEqual(report.estimates(), {'entropy': 0.0, 'closed-form': 0.0})

    def test_unknown_route(self):
        with self.assertRaises(ValueError):
            omega_report(ellipse(), routes=['guesswork'])

    @slow
    def test_all_default_routes(self):
        report = omega_report(lp_ball(3.0))
        self.assertEqual(len(report.estimates()), 5)
        self.assertLess(report.cross_route_max_rel_discrepancy, get_test_config()['limit_rtol'])
