import os
import tempfile
from unittest import TestCase

from conegeom.config import (ExperimentConfig, FitConfig, QuadratureConfig, default_config,
                             default_fit_config, experiment_settings, load_config)
from conegeom.errors import ConfigError


class DefaultsTester(TestCase):
    def test_shipped_defaults(self):
        config = default_config()
        self.assertIsInstance(config, QuadratureConfig)
        self.assertEqual(config.sphere_tol, 1e-10)
        self.assertEqual(config.mc_samples, 10_000_000)
        self.assertEqual(config.default_level(2), 2)
        self.assertEqual(config.max_level(3), 3)
        self.assertEqual(config.default_level(7), 0)
        self.assertEqual(default_fit_config(), FitConfig())

    def test_fit_threshold(self):
        self.assertAlmostEqual(FitConfig(rtol=0.1, atol=0.0).threshold(-2.0), 0.2)


class ExperimentTester(TestCase):
    def test_flags_override_sections(self):
        experiment = ExperimentConfig(subcommand='omega', tol=1e-8, mc_samples=1000, seed=5,
                                      quadrature={'sphere_tol': 1e-6, 'cap_nodes': '32'},
                                      fit={'rtol': 0.01})
        quadrature, fit = experiment_settings(experiment)
        self.assertEqual(quadrature.sphere_tol, 1e-8)
        self.assertEqual(quadrature.mc_samples, 1000)
        self.assertEqual(quadrature.seed, 5)
        self.assertEqual(quadrature.cap_nodes, 32)
        self.assertEqual(fit.rtol, 0.01)
        self.assertTrue(fit.strict)

    def test_invalid_sections(self):
        with self.assertRaises(ConfigError):
            experiment_settings(ExperimentConfig(quadrature={'nonsense': 1}))
        with self.assertRaises(ConfigError):
            experiment_settings(ExperimentConfig(fit={'nonsense': 1}))
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_dict({'subcommand': 'omega', 'colour': 'blue'})

    def test_dump_and_load(self):
        experiment = ExperimentConfig(subcommand='zp', bodies=[{'kind': 'ball', 'n': 2}],
                                      p_grid=[16.0, 32.0], quadrature={'sphere_tol': 1e-9},
                                      fit={'strict': False})
        with tempfile.TemporaryDirectory() as directory:
            for name in ('experiment.yaml', 'experiment.json'):
                path = os.path.join(directory, name)
                experiment.dump(path)
                quadrature, fit = load_config(path)
                self.assertEqual(quadrature.sphere_tol, 1e-9)
                self.assertFalse(fit.strict)
