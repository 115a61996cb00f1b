import json
import math
import os
import tempfile
from unittest import TestCase

import mpmath
import numpy as np
import pandas as pd

from conegeom.applications import Section5Result
from conegeom.utils import (default_p_grid, parse_args, parse_floats, parse_grid, to_jsonable,
                            write_csv, write_json)
from tests.config import get_test_config


class GridTester(TestCase):
    def test_geometric_grid(self):
        self.assertEqual(parse_grid('16:16384:geometric'), get_test_config()['p_grid'])

    def test_linear_grid(self):
        self.assertEqual(parse_grid('0:1:5'), [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_lists(self):
        self.assertEqual(parse_grid('1,2.5,4'), [1.0, 2.5, 4.0])
        self.assertEqual(parse_grid([1, 2]), [1.0, 2.0])
        self.assertEqual(parse_floats('1e-2, 0.1,'), [1e-2, 0.1])

    def test_default_p_grid(self):
        grid = default_p_grid()
        self.assertEqual(len(grid), 11)
        self.assertEqual(grid[0], 16.0)
        self.assertEqual(grid[-1], 16384.0)


class SerializationTester(TestCase):
    def test_to_jsonable(self):
        result = Section5Result(n=2, r=3.0, mc_value=np.float64(1.0), std_error=0.0, closed_form=1.0,
                                samples=10, seed=1)
        data = to_jsonable({'result': result, 'inf': math.inf, 'array': np.arange(3),
                            'mp': mpmath.mpf(2), 'frame': pd.DataFrame({'p': [1.0]})})
        self.assertEqual(data['result']['rel_error'], 0.0)
        self.assertEqual(data['inf'], 'inf')
        self.assertEqual(data['array'], [0, 1, 2])
        self.assertEqual(data['mp'], '2.0')
        self.assertEqual(data['frame'], [{'p': 1.0}])
        json.dumps(data)

    def test_write_files(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'nested', 'out.json')
            write_json(path, {'value': np.float64(0.5)})
            with open(path) as f:
                self.assertEqual(json.load(f), {'value': 0.5})
            path = os.path.join(directory, 'table.csv')
            write_csv(path, pd.DataFrame({'p': [16.0], 'value': [0.1]}), header='p: exponent')
            with open(path) as f:
                lines = f.read().splitlines()
            self.assertEqual(lines[0], '# p: exponent')
            self.assertEqual(lines[1], 'p,value')
            self.assertEqual(float(lines[2].split(',')[1]), 0.1)


class ArgsTester(TestCase):
    def test_parse_args(self):
        args = parse_args(['omega', '--body', '{"kind": "ball", "n": 2}', '--body', '{"kind": "cube", "n": 2}',
                           '--mc', '1e6', '--seed', '3', '--p-grid', '16:64:geometric'])
        self.assertEqual(args.subcommand, 'omega')
        self.assertEqual(len(args.body), 2)
        self.assertEqual(args.mc, 1e6)
        self.assertEqual(args.seed, 3)
        self.assertEqual(args.p_grid, '16:64:geometric')
        self.assertFalse(args.verbose)

    def test_unknown_subcommand(self):
        with self.assertRaises(SystemExit):
            parse_args(['nonsense'])
