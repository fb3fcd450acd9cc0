from oufreq_app.src.models.reports import ESTIMATE_COLUMNS
from oufreq_app.src.ui.cli import EXIT_ACCEPTANCE, EXIT_OK, run
from oufreq_app.src.ui.run_audit_trail import read_audit_log
from oufreq_app.src.utils.file_loader import config_hash, load_json, read_csv
import logging
import math
import os
import shutil
import sys
import tempfile
import unittest

# Add parent directory to path for importing from the main app
sys.path.insert(0, os.path.abspath(
    os.path.join(os.path.dirname(__file__), '../../..')))

FIXTURE = os.path.join(os.path.dirname(__file__), '..', 'fixtures', 'test_config.json')


class TestCliFlow(unittest.TestCase):
    """Integration tests running each subcommand on the small fixture config."""

    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.out = os.path.join(self.directory, 'out')

    def tearDown(self):
        root = logging.getLogger()
        for handler in root.handlers[:]:
            root.removeHandler(handler)
            handler.close()
        shutil.rmtree(self.directory, ignore_errors=True)

    def artefacts(self):
        entries = read_audit_log(os.path.join(self.out, 'run_audit.jsonl'))
        return {e['kind']: e for e in entries if e['event_type'] == 'artefact'}

    def test_estimate(self):
        code = run(['estimate', '--config', FIXTURE, '--out', self.out])
        self.assertEqual(code, EXIT_OK)
        rows = read_csv(os.path.join(self.out, 'estimates.csv'))
        self.assertEqual(list(rows[0].keys()), ESTIMATE_COLUMNS)
        self.assertEqual([r['method'] for r in rows], ['mle', 'kernel-psi', 'limit-oracle'])
        for row in rows:
            self.assertEqual(row['seed'], '11')
            self.assertTrue(math.isfinite(float(row['theta_hat'])))
            self.assertTrue(0.5 <= float(row['theta_hat']) <= 1.5)
        self.assertIn('estimates', self.artefacts())

    def test_estimate_config_hash_matches_effective_config(self):
        code = run(['estimate', '--config', FIXTURE, '--out', self.out,
                    '--set', 'estimation.methods=["limit-oracle"]'])
        self.assertEqual(code, EXIT_OK)
        data = load_json(FIXTURE)
        data['estimation']['methods'] = ['limit-oracle']
        with open(os.path.join(self.out, 'estimates.csv'), 'r', encoding='utf-8') as f:
            header = f.readline().strip()
        self.assertEqual(header, f"# config_sha256={config_hash(data)} seed=11")
        session = read_audit_log(os.path.join(self.out, 'run_audit.jsonl'))[0]
        self.assertEqual(session['config_sha256'], config_hash(data))

    def test_filter_defaults_to_true_theta(self):
        code = run(['filter', '--config', FIXTURE, '--out', self.out])
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.artefacts()['filter-trace']['metadata']['theta'], 1.0)
        rows = read_csv(os.path.join(self.out, 'filter_trace.csv'))
        self.assertAlmostEqual(float(rows[-1]['t']), 4.0)
        gammas = [float(r['gamma']) for r in rows]
        self.assertTrue(all(g >= 0.0 for g in gammas))

    def test_monte_carlo(self):
        code = run(['mc', '--config', FIXTURE, '--out', self.out, '--workers', '1'])
        self.assertIn(code, (EXIT_OK, EXIT_ACCEPTANCE))
        rows = read_csv(os.path.join(self.out, 'replications.csv'))
        self.assertEqual(len(rows), 4)
        self.assertEqual(sorted({float(r['epsilon']) for r in rows}), [0.1, 0.2])
        summary = load_json(os.path.join(self.out, 'summary.json'))
        self.assertEqual(len(summary['epsilon_summaries']), 2)
        self.assertEqual(set(self.artefacts()), {'replications', 'summary'})

    def test_check(self):
        code = run(['check', '--config', FIXTURE, '--out', self.out, '--workers', '1'])
        self.assertIn(code, (EXIT_OK, EXIT_ACCEPTANCE))
        rows = read_csv(os.path.join(self.out, 'checks.csv'))
        self.assertEqual([r['check'] for r in rows],
                         ['riccati-rate', 'fisher-limit', 'fisher-limit', 'lan-residual'])
        passed = all(r['passed'] == 'true' for r in rows)
        self.assertEqual(code, EXIT_OK if passed else EXIT_ACCEPTANCE)


if __name__ == '__main__':
    unittest.main()
