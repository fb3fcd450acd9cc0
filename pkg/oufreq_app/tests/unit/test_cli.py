from oufreq_app.src.models.reports import CheckResult
from oufreq_app.src.ui.cli import (EXIT_ACCEPTANCE, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE,
                                   exit_code_for, load_effective_config, parse_args, run)
from oufreq_app.src.ui.run_audit_trail import read_audit_log
from oufreq_app.src.utils.errors import (AcceptanceError, ConfigurationError, PlanAbortedError,
                                         StiffnessError)
from oufreq_app.src.utils.file_loader import read_csv
import logging
import os
import shutil
import sys
import tempfile
import unittest
from unittest.mock import MagicMock, patch

# Add parent directory to path for importing from the main app
sys.path.insert(0, os.path.abspath(
    os.path.join(os.path.dirname(__file__), '../../..')))

FIXTURE = os.path.join(os.path.dirname(__file__), '..', 'fixtures', 'test_config.json')


def reset_logging():
    """Detach the handlers the CLI installs so temp directories can be removed."""
    root = logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)
        handler.close()


class TestArgumentParsing(unittest.TestCase):
    """Command-line parsing and config loading."""

    def test_parse_args(self):
        cli = parse_args(['estimate', '--config', 'default', '--out', 'runs', '--seed', '3',
                          '--workers', '2', '--set', 'model.epsilon=0.05', '--set', 'model.T=5'])
        self.assertEqual(cli.subcommand, 'estimate')
        self.assertEqual(cli.seed, 3)
        self.assertEqual(cli.workers, 2)
        self.assertEqual(cli.overrides, ('model.epsilon=0.05', 'model.T=5'))

    def test_workers_from_environment(self):
        with patch.dict(os.environ, {'OUFREQ_WORKERS': '3'}):
            cli = parse_args(['mc', '--config', 'default', '--out', 'runs'])
        self.assertEqual(cli.workers, 3)

    def test_invalid_workers(self):
        with self.assertRaises(ConfigurationError):
            parse_args(['mc', '--config', 'default', '--out', 'runs', '--workers', '0'])

    def test_effective_config_applies_seed_and_overrides(self):
        cli = parse_args(['simulate', '--config', FIXTURE, '--out', 'runs', '--seed', '99',
                          '--set', 'model.epsilon=0.2'])
        data = load_effective_config(cli)
        self.assertEqual(data['model']['seed'], 99)
        self.assertEqual(data['model']['epsilon'], 0.2)

    def test_exit_code_mapping(self):
        self.assertEqual(exit_code_for(ConfigurationError('x')), EXIT_USAGE)
        self.assertEqual(exit_code_for(StiffnessError('x')), EXIT_NUMERICAL)
        self.assertEqual(exit_code_for(PlanAbortedError('x')), EXIT_NUMERICAL)
        self.assertEqual(exit_code_for(AcceptanceError('x')), EXIT_ACCEPTANCE)
        self.assertEqual(exit_code_for(OSError('x')), EXIT_NUMERICAL)


class TestRun(unittest.TestCase):
    """End-to-end behaviour of single CLI invocations."""

    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.out = os.path.join(self.directory, 'out')

    def tearDown(self):
        reset_logging()
        shutil.rmtree(self.directory, ignore_errors=True)

    def test_simulate_writes_path_with_provenance(self):
        code = run(['simulate', '--config', FIXTURE, '--out', self.out, '--seed', '7'])
        self.assertEqual(code, EXIT_OK)
        path_file = os.path.join(self.out, 'path.csv')
        with open(path_file, 'r', encoding='utf-8') as f:
            first = f.readline().strip()
        self.assertTrue(first.startswith('# config_sha256='))
        self.assertTrue(first.endswith('seed=7'))
        rows = read_csv(path_file)
        self.assertEqual(list(rows[0].keys()), ['t', 'X', 'Y'])
        self.assertEqual(float(rows[0]['X']), 0.0)
        self.assertTrue(os.path.exists(os.path.join(self.out, 'oufreq.log')))
        events = [e['event_type'] for e in read_audit_log(os.path.join(self.out, 'run_audit.jsonl'))]
        self.assertEqual(events, ['session_start', 'artefact', 'session_end'])

    def test_logs_begin_with_provenance(self):
        code = run(['simulate', '--config', FIXTURE, '--out', self.out, '--seed', '11'])
        self.assertEqual(code, EXIT_OK)
        reset_logging()
        with open(os.path.join(self.out, 'path.csv'), 'r', encoding='utf-8') as f:
            expected = f.readline().strip()
        for name in ('oufreq.log', 'run_audit.jsonl'):
            with self.subTest(file=name):
                with open(os.path.join(self.out, name), 'r', encoding='utf-8') as f:
                    self.assertEqual(f.readline().strip(), expected)

    def test_unwritable_output_exit_code(self):
        path = MagicMock(**{'to_csv.return_value': False})
        with patch('oufreq_app.src.ui.cli.simulate', return_value=path):
            code = run(['simulate', '--config', FIXTURE, '--out', self.out])
        self.assertEqual(code, EXIT_NUMERICAL)
        entries = read_audit_log(os.path.join(self.out, 'run_audit.jsonl'))
        failure = [e for e in entries if e['event_type'] == 'failure'][0]
        self.assertEqual(failure['error_type'], 'OSError')
        self.assertEqual(failure['exit_code'], EXIT_NUMERICAL)

    def test_same_seed_same_output(self):
        first_out = os.path.join(self.directory, 'first')
        second_out = os.path.join(self.directory, 'second')
        self.assertEqual(run(['simulate', '--config', FIXTURE, '--out', first_out, '--seed', '5']), EXIT_OK)
        self.assertEqual(run(['simulate', '--config', FIXTURE, '--out', second_out, '--seed', '5']), EXIT_OK)
        with open(os.path.join(first_out, 'path.csv'), 'rb') as a, \
                open(os.path.join(second_out, 'path.csv'), 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_usage_errors(self):
        self.assertEqual(run(['simulate', '--out', self.out]), EXIT_USAGE)
        self.assertEqual(run(['transmogrify', '--config', FIXTURE, '--out', self.out]), EXIT_USAGE)

    def test_unknown_override_key(self):
        code = run(['simulate', '--config', FIXTURE, '--out', self.out, '--set', 'model.thetaa=1'])
        self.assertEqual(code, EXIT_USAGE)

    def test_missing_config(self):
        code = run(['simulate', '--config', os.path.join(self.directory, 'nope.json'), '--out', self.out])
        self.assertEqual(code, EXIT_USAGE)

    def test_theta_outside_interval(self):
        code = run(['filter', '--config', FIXTURE, '--out', self.out, '--theta', '2.5'])
        self.assertEqual(code, EXIT_USAGE)

    def test_filter_trace(self):
        code = run(['filter', '--config', FIXTURE, '--out', self.out, '--theta', '1.1'])
        self.assertEqual(code, EXIT_OK)
        rows = read_csv(os.path.join(self.out, 'filter_trace.csv'))
        self.assertEqual(list(rows[0].keys()), ['t', 'm', 'gamma', 'm_dot', 'gamma_dot', 'innovation'])
        self.assertEqual(float(rows[0]['gamma']), 0.0)
        self.assertEqual(rows[-1]['innovation'], '')

    def test_numerical_failure_exit_code(self):
        with patch('oufreq_app.src.ui.cli.simulate', side_effect=StiffnessError('non-finite')):
            code = run(['simulate', '--config', FIXTURE, '--out', self.out])
        self.assertEqual(code, EXIT_NUMERICAL)
        events = [e['event_type'] for e in read_audit_log(os.path.join(self.out, 'run_audit.jsonl'))]
        self.assertIn('failure', events)

    def test_failed_check_exit_code(self):
        rows = [CheckResult('fisher-limit', 0.5, '|rel| <= 0.25', False, 'single path')]
        with patch('oufreq_app.src.ui.cli.acceptance_checks', return_value=rows):
            code = run(['check', '--config', FIXTURE, '--out', self.out, '--workers', '1'])
        self.assertEqual(code, EXIT_ACCEPTANCE)
        self.assertEqual(read_csv(os.path.join(self.out, 'checks.csv'))[0]['passed'], 'false')

    def test_passing_check_exit_code(self):
        rows = [CheckResult('riccati-rate', 4.0, 'in [3.0, 5.0]', True, 'eps=0.08')]
        with patch('oufreq_app.src.ui.cli.acceptance_checks', return_value=rows):
            code = run(['check', '--config', FIXTURE, '--out', self.out, '--workers', '1'])
        self.assertEqual(code, EXIT_OK)


if __name__ == '__main__':
    unittest.main()
