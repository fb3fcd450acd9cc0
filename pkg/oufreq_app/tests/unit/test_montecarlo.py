from oufreq_app.src.core.montecarlo import (_check_stats, normality_report, plan_from_config,
                                            riccati_rate_table, run_plan, write_replications_csv,
                                            write_summary_json)
from oufreq_app.src.core.simulator import derive_seed
from oufreq_app.src.models.model_config import ModelConfig
from oufreq_app.src.models.reports import (ESTIMATE_COLUMNS, CheckName, EstimatorMethod,
                                           ExperimentPlan, ReplicationResult)
from oufreq_app.src.models.signal_spec import SignalSpec
from oufreq_app.src.utils.errors import ConfigurationError, PlanAbortedError, StiffnessError
from oufreq_app.src.utils.file_loader import load_json, read_csv
import math
import os
import shutil
import sys
import tempfile
import unittest
from unittest.mock import patch

import numpy as np

# Add parent directory to path for importing from the main app
sys.path.insert(0, os.path.abspath(
    os.path.join(os.path.dirname(__file__), '../../..')))


def small_plan(**overrides):
    """Two-rung plan that runs in a few seconds."""
    settings = dict(config=ModelConfig(epsilon=0.1, T=2.0, seed=5), signal=SignalSpec(),
                    epsilon_ladder=(0.2, 0.1), replications=2, methods=(EstimatorMethod.MLE,),
                    base_seed=5)
    settings.update(overrides)
    return ExperimentPlan(**settings)


class TestNormalityReport(unittest.TestCase):
    """Moments and KS distance of normalised errors."""

    def test_matches_reference_distribution(self):
        I0 = 4.0
        errors = np.random.default_rng(7).normal(0.0, 0.5, size=4000)
        report = normality_report(errors, I0)
        self.assertEqual(report.n, 4000)
        self.assertAlmostEqual(report.variance_ratio, 1.0, delta=0.1)
        self.assertLess(report.ks_distance, 0.05)
        self.assertLess(abs(report.skewness), 0.2)
        self.assertLess(abs(report.excess_kurtosis), 0.4)
        self.assertFalse(report.degenerate)

    def test_needs_thirty_values(self):
        with self.assertRaises(ConfigurationError):
            normality_report(np.zeros(29), 1.0)

    def test_degenerate_input(self):
        report = normality_report(np.zeros(30), 1.0)
        self.assertTrue(report.degenerate)
        self.assertEqual(report.variance, 0.0)


class TestExperimentPlan(unittest.TestCase):
    """Plan validation."""

    def test_ladder_must_decrease(self):
        with self.assertRaises(ConfigurationError):
            small_plan(epsilon_ladder=(0.1, 0.2))
        with self.assertRaises(ConfigurationError):
            small_plan(epsilon_ladder=())

    def test_normality_needs_thirty_replications(self):
        with self.assertRaises(ConfigurationError):
            small_plan(checks=(CheckName.NORMALITY,), replications=10)

    def test_limit_oracle_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            small_plan(methods=(EstimatorMethod.LIMIT_ORACLE,))

    def test_from_config(self):
        data = load_json(os.path.join(os.path.dirname(__file__), '..', 'fixtures', 'test_config.json'))
        plan = plan_from_config(data, seed=77, workers=3)
        self.assertEqual(plan.base_seed, 77)
        self.assertEqual(plan.workers, 3)
        self.assertEqual(plan.epsilon_ladder, (0.2, 0.1))
        self.assertEqual(plan.methods, (EstimatorMethod.MLE,))
        self.assertEqual(plan.lan_u, 0.5)


class TestRunPlan(unittest.TestCase):
    """Plan execution, ordering and failure handling."""

    @classmethod
    def setUpClass(cls):
        cls.plan = small_plan()
        cls.result = run_plan(cls.plan)

    def test_replications_in_order(self):
        keys = [(r.epsilon_index, r.replication) for r in self.result.replications]
        self.assertEqual(keys, [(0, 0), (0, 1), (1, 0), (1, 1)])
        self.assertEqual(self.result.replications[3].seed, derive_seed(5, 1, 1))
        self.assertEqual(self.result.replications[2].epsilon, 0.1)

    def test_one_summary_per_epsilon_and_method(self):
        self.assertEqual([(s.epsilon, s.method) for s in self.result.summaries],
                         [(0.2, 'mle'), (0.1, 'mle')])
        self.assertEqual(len(self.result.estimate_rows()), 4)

    def test_rerun_is_identical(self):
        again = run_plan(self.plan)
        self.assertEqual(again.estimate_rows(), self.result.estimate_rows())

    def test_worker_count_does_not_change_results(self):
        plan = small_plan(epsilon_ladder=(0.2,), workers=2)
        parallel = run_plan(plan)
        serial = run_plan(small_plan(epsilon_ladder=(0.2,), workers=1))
        self.assertEqual(parallel.estimate_rows(), serial.estimate_rows())

    def test_fisher_limit_recorded(self):
        self.assertGreater(self.result.fisher_limit, 0.0)
        # f >= 1 on the default signal, so the 1/f weight can only lower the limit
        self.assertLess(self.result.stationary_fisher_limit, self.result.fisher_limit)
        self.assertGreater(self.result.stationary_fisher_limit, 0.0)
        for summary in self.result.summaries:
            self.assertGreater(summary.expected_fisher, 0.0)

    def test_outputs(self):
        directory = tempfile.mkdtemp()
        try:
            csv_file = os.path.join(directory, 'replications.csv')
            json_file = os.path.join(directory, 'summary.json')
            self.assertTrue(write_replications_csv(self.result, csv_file, 'abc'))
            self.assertTrue(write_summary_json(self.result, json_file, 'abc'))
            with open(csv_file, 'r', encoding='utf-8') as f:
                self.assertEqual(f.readline().strip(), '# config_sha256=abc seed=5')
            rows = read_csv(csv_file)
            self.assertEqual(len(rows), 4)
            self.assertEqual(list(rows[0].keys()), ESTIMATE_COLUMNS)
            summary = load_json(json_file)
            self.assertEqual(len(summary['epsilon_summaries']), 2)
        finally:
            shutil.rmtree(directory)

    def test_plan_aborts_when_replications_fail(self):
        with patch('oufreq_app.src.core.montecarlo.simulate', side_effect=StiffnessError("boom")):
            with self.assertRaises(PlanAbortedError):
                run_plan(small_plan(epsilon_ladder=(0.2,)))


class TestChecks(unittest.TestCase):
    """Per-path check values and the Riccati rate table."""

    def test_check_stats(self):
        results = [ReplicationResult(0, i, 0.1, i, checks={'score': float(i)}) for i in range(3)]
        stats = _check_stats(results)
        self.assertEqual(stats['score_mean'], 1.0)
        self.assertEqual(stats['score_median'], 1.0)
        self.assertEqual(stats['score_variance'], 1.0)

    def test_plan_with_checks(self):
        plan = small_plan(epsilon_ladder=(0.1,), methods=(),
                          checks=(CheckName.FISHER_LIMIT, CheckName.LAN_RESIDUAL, CheckName.CONTRAST),
                          lan_u=0.5)
        result = run_plan(plan)
        stats = result.summaries[0].check_stats
        for key in ('score_mean', 'fisher_eps_median', 'lan_residual_median', 'contrast_mean'):
            self.assertIn(key, stats)
        self.assertGreater(stats['fisher_eps_mean'], 0.0)
        for key in ('fisher_eps_ratio_expected', 'fisher_eps_ratio_limit', 'fisher_eps_ratio_stationary'):
            self.assertGreater(stats[key], 0.0)

    def test_riccati_rate_table(self):
        rows = riccati_rate_table(ModelConfig(T=2.0), SignalSpec(), [0.08, 0.04])
        self.assertEqual(len(rows), 2)
        self.assertGreater(rows[0]['error'], rows[1]['error'])
        self.assertTrue(math.isnan(rows[1]['ratio']))


if __name__ == '__main__':
    unittest.main()
