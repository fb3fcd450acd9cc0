from oufreq_app.src.utils.errors import ConfigurationError
from oufreq_app.src.utils.file_loader import load_config_file, load_schema
from oufreq_app.src.utils.validation import (apply_overrides, check_config, parse_override_value,
                                             schema_errors)
import copy
import os
import sys
import unittest

# Add parent directory to path for importing from the main app
sys.path.insert(0, os.path.abspath(
    os.path.join(os.path.dirname(__file__), '../../..')))


class TestValidation(unittest.TestCase):
    """Schema checks and --set overrides."""

    def setUp(self):
        self.schema = load_schema()
        self.config = load_config_file('default')

    def test_packaged_configs_are_valid(self):
        for name in ('default', 'mle_normality'):
            with self.subTest(name=name):
                ok, message = check_config(load_config_file(name), self.schema)
                self.assertTrue(ok, message)

    def test_unknown_key_is_named(self):
        self.config['model']['thetaa'] = 1.0
        ok, message = check_config(self.config, self.schema)
        self.assertFalse(ok)
        self.assertEqual(message, 'model.thetaa: unknown key')

    def test_wrong_type(self):
        self.config['model']['epsilon'] = "small"
        ok, message = check_config(self.config, self.schema)
        self.assertFalse(ok)
        self.assertTrue(message.startswith('model.epsilon'))

    def test_enum_and_item_counts(self):
        self.config['signal']['kind'] = 'square'
        self.config['model']['theta_interval'] = [0.5]
        errors = schema_errors(self.config, self.schema)
        self.assertEqual(len(errors), 2)

    def test_missing_required_key(self):
        del self.config['model']['epsilon']
        ok, message = check_config(self.config, self.schema)
        self.assertFalse(ok)
        self.assertEqual(message, 'model.epsilon: required key missing')

    def test_empty_config(self):
        ok, _ = check_config({}, self.schema)
        self.assertFalse(ok)

    def test_parse_override_value(self):
        self.assertEqual(parse_override_value('0.01'), 0.01)
        self.assertEqual(parse_override_value('[0.1, 0.05]'), [0.1, 0.05])
        self.assertIsNone(parse_override_value('null'))
        self.assertEqual(parse_override_value('raised-cosine'), 'raised-cosine')

    def test_apply_overrides(self):
        original = copy.deepcopy(self.config)
        updated = apply_overrides(self.config, ['model.epsilon=0.01', 'signal.kind=raised-cosine'],
                                  self.schema)
        self.assertEqual(updated['model']['epsilon'], 0.01)
        self.assertEqual(updated['signal']['kind'], 'raised-cosine')
        self.assertEqual(self.config, original)

    def test_override_errors(self):
        with self.assertRaises(ConfigurationError) as ctx:
            apply_overrides(self.config, ['model.thetaa=1'], self.schema)
        self.assertIn('model.thetaa', str(ctx.exception))
        with self.assertRaises(ConfigurationError):
            apply_overrides(self.config, ['model.epsilon'], self.schema)


if __name__ == '__main__':
    unittest.main()
