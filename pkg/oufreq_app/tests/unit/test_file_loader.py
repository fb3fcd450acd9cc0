from oufreq_app.src.utils.file_loader import (config_hash, find_file_in_directories, load_config_file,
                                              load_json, load_schema, provenance_line, read_csv,
                                              save_json, write_csv)
import json
import math
import os
import shutil
import sys
import tempfile
import unittest

import numpy as np

# Add parent directory to path for importing from the main app
sys.path.insert(0, os.path.abspath(
    os.path.join(os.path.dirname(__file__), '../../..')))


class TestFileLoader(unittest.TestCase):
    """Test suite for configuration and table I/O."""

    def setUp(self):
        """Set up a scratch directory with one JSON config."""
        self.directory = tempfile.mkdtemp()
        self.test_data = {"model": {"theta": 1.0, "epsilon": 0.02}, "signal": {"kind": "offset-cosine"}}
        self.json_file = os.path.join(self.directory, 'config.json')
        with open(self.json_file, 'w') as f:
            json.dump(self.test_data, f)

    def tearDown(self):
        """Clean up after tests."""
        shutil.rmtree(self.directory, ignore_errors=True)

    def test_load_json(self):
        self.assertEqual(load_json(self.json_file), self.test_data)
        # Extension is optional
        self.assertEqual(load_json(self.json_file[:-5]), self.test_data)
        self.assertEqual(load_json('non_existent_file'), {})

    def test_load_json_invalid(self):
        broken = os.path.join(self.directory, 'broken.json')
        with open(broken, 'w') as f:
            f.write('{"model": ')
        self.assertEqual(load_json(broken), {})

    def test_save_json_with_provenance_header(self):
        target = os.path.join(self.directory, 'nested', 'summary.json')
        header = provenance_line('deadbeef', 3)
        self.assertTrue(save_json(self.test_data, target, header=header))
        with open(target, 'r') as f:
            self.assertEqual(f.readline().strip(), '# config_sha256=deadbeef seed=3')
        self.assertEqual(load_json(target), self.test_data)

    def test_config_hash_is_order_independent(self):
        reordered = {"signal": {"kind": "offset-cosine"}, "model": {"epsilon": 0.02, "theta": 1.0}}
        self.assertEqual(config_hash(self.test_data), config_hash(reordered))
        changed = {"model": {"theta": 1.0, "epsilon": 0.01}, "signal": {"kind": "offset-cosine"}}
        self.assertNotEqual(config_hash(self.test_data), config_hash(changed))
        self.assertEqual(len(config_hash(self.test_data)), 64)

    def test_write_and_read_csv(self):
        target = os.path.join(self.directory, 'table.csv')
        rows = [(0.1, True, None, np.float64(1.0 / 3.0), np.int64(4))]
        self.assertTrue(write_csv(target, ['a', 'b', 'c', 'd', 'e'], rows, header='# note'))
        parsed = read_csv(target)
        self.assertEqual(len(parsed), 1)
        self.assertEqual(parsed[0]['b'], 'true')
        self.assertEqual(parsed[0]['c'], '')
        self.assertEqual(float(parsed[0]['d']), 1.0 / 3.0)
        self.assertEqual(parsed[0]['e'], '4')

    def test_full_precision_floats(self):
        target = os.path.join(self.directory, 'precision.csv')
        value = math.pi * 1e-7
        write_csv(target, ['x'], [(value,)])
        self.assertEqual(float(read_csv(target)[0]['x']), value)

    def test_read_csv_missing(self):
        self.assertEqual(read_csv(os.path.join(self.directory, 'missing.csv')), [])

    def test_find_file_in_directories(self):
        self.assertEqual(find_file_in_directories('config.json', ['/nonexistent', self.directory]),
                         self.json_file)
        self.assertIsNone(find_file_in_directories('missing.json', [self.directory]))

    def test_packaged_configs(self):
        default = load_config_file('default')
        self.assertEqual(default['model']['theta'], 1.0)
        self.assertEqual(default['model']['T'], 10.0)
        self.assertEqual(load_config_file(self.json_file), self.test_data)
        self.assertEqual(load_config_file('no_such_config'), {})
        self.assertEqual(load_schema()['type'], 'object')


if __name__ == '__main__':
    unittest.main()
