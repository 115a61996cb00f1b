import contextlib
import io
import json
import math
import os
import tempfile
from pathlib import Path
from unittest import TestCase, mock

import pandas as pd

from conegeom.config import ExperimentConfig
from conegeom.eval import (EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, THREADS_ENV, experiment_from_args, main,
                           run)
from conegeom.utils import parse_args


def quiet_main(argv):
    with contextlib.redirect_stdout(io.StringIO()) as stdout:
        status = main(parse_args(argv))
    return status, stdout.getvalue()


class LpBallTableTester(TestCase):
    def test_table(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'lpball.csv')
            status, printed = quiet_main(['lpball-table', '--n', '2,3', '--r', '1.5,2,3', '--out', out])
            self.assertEqual(status, EXIT_OK)
            self.assertIn('| n |', printed)
            with open(out) as f:
                self.assertTrue(f.readline().startswith('# '))
            table = pd.read_csv(out, comment='#')
            self.assertEqual(len(table), 6)
            balls = table[table['r'] == 2.0]
            self.assertTrue((balls['omega'] == 1.0).all())
            with open(os.path.join(tmp, 'summary.json')) as f:
                summary = json.load(f)
            self.assertEqual(summary['status'], EXIT_OK)
            self.assertTrue(all(check['passed'] for check in summary['checks']))


class ZpTester(TestCase):
    def test_columns(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'zp.csv')
            status, _ = quiet_main(['zp', '--body', '{"kind": "ball", "n": 2}', '--p-grid', '2,16',
                                    '--out', out])
            self.assertEqual(status, EXIT_OK)
            with open(out) as f:
                header = f.readline()
            self.assertIn('anchor', header)
            table = pd.read_csv(out, comment='#')
        for column in ('p', 'h_min', 'h_max', 'polar_volume', 'error'):
            self.assertIn(column, table.columns)
        self.assertEqual(table['p'].tolist(), [2.0, 16.0])
        for row in table.itertuples():
            self.assertAlmostEqual(row.h_min / row.h_max, 1.0, delta=1e-8)
            self.assertEqual(row.error_source, 'closed_form')
            self.assertLess(row.error / row.polar_volume, 1e-6)
        self.assertAlmostEqual(table['polar_volume'].iloc[0] / (4 * math.pi ** 2), 1.0, delta=1e-6)


class ConfigErrorTester(TestCase):
    def test_bad_body_json(self):
        status, printed = quiet_main(['omega', '--body', '{"kind": "ball", "n": 2'])
        self.assertEqual(status, EXIT_CONFIG)
        self.assertIn('ConfigError', printed)

    def test_unknown_body_kind(self):
        status, _ = quiet_main(['omega', '--body', '{"kind": "torus", "n": 2}'])
        self.assertEqual(status, EXIT_CONFIG)

    def test_out_of_range_budget(self):
        experiment = ExperimentConfig(subcommand='section5', n_values=[2], r_values=[3.0], mc_samples=0)
        with contextlib.redirect_stdout(io.StringIO()):
            self.assertEqual(run(experiment, progress=False), EXIT_BUDGET)


class Section5Tester(TestCase):
    def test_reproducible_artifacts(self):
        contents = []
        with tempfile.TemporaryDirectory() as tmp:
            for name in ('first.json', 'second.json'):
                out = os.path.join(tmp, name)
                quiet_main(['section5', '--n', '2', '--r', '3', '--mc', '20000', '--seed', '3', '--out', out])
                contents.append(Path(out).read_bytes())
        self.assertEqual(contents[0], contents[1])
        result = json.loads(contents[0])[0]
        self.assertEqual(result['samples'], 20000)
        self.assertLess(abs(result['closed_form'] + 0.0669), 5e-4)
        self.assertTrue(math.isfinite(result['z_score']))


class ArgumentsTester(TestCase):
    def test_flags_override_the_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'experiment.yaml')
            ExperimentConfig(subcommand='omega', seed=5, caps=4, p_grid=[16.0, 32.0]).dump(path)
            experiment = experiment_from_args(parse_args(['entropy', '--config', path, '--seed', '9']))
        self.assertEqual(experiment.subcommand, 'entropy')
        self.assertEqual(experiment.seed, 9)
        self.assertEqual(experiment.caps, 4)
        self.assertEqual(experiment.p_grid, [16.0, 32.0])

    def test_threads_from_the_environment(self):
        args = parse_args(['omega', '--threads', '2'])
        with mock.patch.dict(os.environ, {THREADS_ENV: '4'}):
            self.assertEqual(experiment_from_args(args).threads, 4)
        with mock.patch.dict(os.environ, {THREADS_ENV: ''}):
            self.assertEqual(experiment_from_args(args).threads, 2)
