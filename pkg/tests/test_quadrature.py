import dataclasses
import math
from unittest import TestCase

import numpy as np

from conegeom.bodies import EuclideanBall
from conegeom.config import default_config
from conegeom.enums import RuleKind
from conegeom.errors import (NonFiniteIntegrand, OutOfRange, QuadratureBudgetExceeded,
                             QuadratureWarning)
from conegeom.quadrature import (cap_rule, cap_volume, circle_rule, concentrated_rule, graded_panels,
                                 integrate_sphere, ray_exit, section_volume, slab_volume, sphere_area,
                                 sphere_rule, stream_rng)
from tests.utils import ellipse


class SphereRuleTester(TestCase):
    def test_weights_sum_to_area(self):
        for n in (2, 3, 4, 5):
            rule = sphere_rule(n)
            self.assertAlmostEqual(np.sum(rule.weights) / sphere_area(n), 1.0, delta=1e-12)
            np.testing.assert_allclose(np.linalg.norm(rule.nodes, axis=1), 1.0, rtol=1e-12)

    def test_rule_kinds(self):
        self.assertIs(sphere_rule(3).kind, RuleKind.product_gauss)
        self.assertIs(sphere_rule(6).kind, RuleKind.quasi_monte_carlo)

    def test_second_moments(self):
        for n in (2, 3, 4):
            value = integrate_sphere(lambda u: u[:, 0] ** 2, n).value
            self.assertAlmostEqual(value, sphere_area(n) / n, delta=1e-10)

    def test_transported_rule_keeps_the_measure(self):
        frame = np.array([[2.0, 0.5], [0.0, 0.7]])
        rule = sphere_rule(2, frame=frame)
        self.assertAlmostEqual(np.sum(rule.weights), 2 * math.pi, delta=1e-10)
        value = integrate_sphere(lambda u: u[:, 1] ** 4, rule).value
        self.assertAlmostEqual(value, 3 * math.pi / 4, delta=1e-10)

    def test_refined_and_coarsened(self):
        rule = sphere_rule(3, level=1)
        self.assertEqual(rule.refined().level, 2)
        self.assertEqual(rule.coarsened().level, 0)
        self.assertGreater(len(rule.refined()), len(rule))
        np.testing.assert_array_equal(rule.reflected().nodes, -rule.nodes)

    def test_graded_panels(self):
        x, w = graded_panels(0.0, 2.0, 5, 8)
        self.assertAlmostEqual(np.sum(w), 2.0, delta=1e-14)
        self.assertAlmostEqual(np.sum(w * np.sqrt(x)), 2.0 / 3 * 2.0 ** 1.5, delta=1e-6)


class SpecialRulesTester(TestCase):
    def test_circle_rule_with_cuts(self):
        rule = circle_rule(cuts=[0.3, 2.0])
        self.assertAlmostEqual(np.sum(rule.weights), 2 * math.pi, delta=1e-12)

    def test_concentrated_rule_integrates_constants(self):
        rule = concentrated_rule(np.array([1.0, 1.0]), 1e-3)
        self.assertAlmostEqual(np.sum(rule.weights), 2 * math.pi, delta=1e-12)
        rule = concentrated_rule(np.array([0.0, 0.0, 1.0]), 1e-2)
        self.assertAlmostEqual(np.sum(rule.weights), 4 * math.pi, delta=1e-10)
        with self.assertRaises(ValueError):
            concentrated_rule(np.ones(4), 0.1)

    def test_cap_rule_weights(self):
        for alpha in (0.1, 0.7, 1.5):
            self.assertAlmostEqual(np.sum(cap_rule(np.array([0.0, 1.0]), alpha).weights), 2 * alpha,
                                   delta=1e-13)
            self.assertAlmostEqual(np.sum(cap_rule(np.array([1.0, 0.0, 0.0]), alpha).weights),
                                   2 * math.pi * (1 - math.cos(alpha)), delta=1e-12)
        with self.assertRaises(ValueError):
            cap_rule(np.array([0.0, 1.0]), 0.0)


class IntegrateSphereTester(TestCase):
    def setUp(self):
        self.kink = lambda u: np.abs(u[:, 0] - 0.3 * u[:, 1])

    def test_strict_budget(self):
        config = dataclasses.replace(default_config(), sphere_tol=1e-15, strict=True)
        with self.assertRaises(QuadratureBudgetExceeded):
            integrate_sphere(self.kink, sphere_rule(2, config=config), config=config)

    def test_lenient_budget_warns(self):
        config = dataclasses.replace(default_config(), sphere_tol=1e-15, strict=False)
        with self.assertWarns(QuadratureWarning):
            result = integrate_sphere(self.kink, sphere_rule(2, config=config), config=config)
        self.assertAlmostEqual(result.value, 4 * math.sqrt(1.09), delta=1e-2)

    def test_non_finite_integrand(self):
        with self.assertRaises(NonFiniteIntegrand):
            integrate_sphere(lambda u: 1.0 / (u[:, 0] - u[:, 0]), 2)

    def test_single_evaluation(self):
        result = integrate_sphere(lambda u: np.ones(len(u)), 3, estimate_error=False)
        self.assertTrue(math.isnan(result.error_estimate))
        self.assertAlmostEqual(result.value, 4 * math.pi, delta=1e-12)

    def test_stream_rng(self):
        a = stream_rng(7, 3).standard_normal(5)
        np.testing.assert_array_equal(a, stream_rng(7, 3).standard_normal(5))
        self.assertFalse(np.allclose(a, stream_rng(7, 4).standard_normal(5)))


class SliceTester(TestCase):
    def test_disc_sections(self):
        disc = EuclideanBall(2)
        theta = np.array([0.6, 0.8])
        for t in (0.0, 0.3, 0.9):
            self.assertAlmostEqual(section_volume(disc, theta, t), 2 * math.sqrt(1 - t * t), delta=1e-10)
            cap = math.acos(t) - t * math.sqrt(1 - t * t)
            self.assertAlmostEqual(cap_volume(disc, theta, t), cap, delta=1e-9)
            self.assertAlmostEqual(slab_volume(disc, theta, t), math.pi - 2 * cap, delta=1e-9)

    def test_ball_sections(self):
        ball = EuclideanBall(3)
        theta = np.array([0.0, 0.0, 1.0])
        t = 0.4
        self.assertAlmostEqual(section_volume(ball, theta, t), math.pi * (1 - t * t), delta=1e-10)
        expected = math.pi * (1 - t) ** 2 * (2 + t) / 3
        self.assertAlmostEqual(cap_volume(ball, theta, t), expected, delta=1e-8)

    def test_top_of_the_body(self):
        body = ellipse()
        theta = np.array([1.0, 0.0])
        self.assertEqual(section_volume(body, theta, 2.0), 0.0)
        self.assertEqual(cap_volume(body, theta, 2.0), 0.0)
        with self.assertRaises(OutOfRange):
            section_volume(body, theta, 2.5)
        with self.assertRaises(OutOfRange):
            cap_volume(body, theta, -0.1)

    def test_ray_exit(self):
        body = ellipse()
        directions = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        np.testing.assert_allclose(ray_exit(body, np.zeros((3, 2)), directions),
                                   body.radial(directions / np.linalg.norm(directions, axis=1,
                                                                           keepdims=True))
                                   / np.linalg.norm(directions, axis=1), rtol=1e-12)
        origins = np.tile([0.5, 0.0], (2, 1))
        np.testing.assert_allclose(ray_exit(body, origins, np.array([[1.0, 0.0], [-1.0, 0.0]])),
                                   [1.5, 2.5], rtol=1e-10)
