"""
Monte Carlo harness for OUFreq.
Runs experiment plans over an epsilon ladder, aggregates estimator errors and
per-path checks, and builds the acceptance table of the `check` command.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..models.model_config import ModelConfig
from ..models.reports import (ESTIMATE_COLUMNS, CheckName, CheckResult, EpsilonSummary,
                              EstimatorMethod, ExperimentPlan, NormalityReport, PlanResult,
                              ReplicationResult)
from ..models.signal_spec import SignalSpec
from ..utils.errors import ConfigurationError, PlanAbortedError
from ..utils.file_loader import provenance_line, save_json, write_csv
from .estimators import default_kernel, mle, psi_estimator
from .inference import (empirical_contrast, expected_fisher_eps, fisher_from_output, fisher_limit,
                        lan_expansion_check, score_from_output, stationary_fisher_limit)
from .kalman_filter import riccati_asymptotic_error, run_filter
from .simulator import derive_seed, simulate

# Set up logger for this module
logger = logging.getLogger(__name__)

# Plan aborts when more than this share of replications fails at one eps
MAX_FAILURE_RATE = 0.20
# Plan fails when more than this share of estimates is excluded at the smallest eps
MAX_EXCLUSION_RATE = 0.10
# Normality needs at least this many usable errors
MIN_NORMALITY_SAMPLES = 30

# Acceptance windows used by the `check` command
RICCATI_RATIO_WINDOW = (3.0, 5.0)
FISHER_SINGLE_TOLERANCE = 0.25
FISHER_MEAN_TOLERANCE = 0.10


def normality_report(errors: Sequence[float], information: float) -> NormalityReport:
    """
    Moments and Kolmogorov-Smirnov distance of normalised errors against N(0, 1/information).

    Args:
        errors: Normalised errors (theta_hat - theta)/sqrt(eps)
        information: Reference information, > 0; run_plan passes E[eps I_eps] at the
            rung's eps

    Returns:
        NormalityReport; degenerate=True for zero-variance input

    Raises:
        ConfigurationError: Fewer than 30 values or information <= 0
    """
    values = np.asarray(errors, dtype=float)
    if values.size < MIN_NORMALITY_SAMPLES:
        raise ConfigurationError(
            f"normality_report: needs >= {MIN_NORMALITY_SAMPLES} values, got {values.size}")
    if not information > 0:
        raise ConfigurationError(f"normality_report: information must be > 0, got {information}")

    mean = float(values.mean())
    variance = float(values.var(ddof=1))
    reference_sd = 1.0 / math.sqrt(information)
    ks_distance = float(stats.kstest(values, "norm", args=(0.0, reference_sd)).statistic)
    if variance <= 0.0:
        logger.warning("normality_report: zero variance, flagging degenerate input")
        return NormalityReport(n=int(values.size), mean=mean, variance=0.0, skewness=0.0,
                               excess_kurtosis=0.0, ks_distance=ks_distance, variance_ratio=0.0,
                               degenerate=True)
    return NormalityReport(
        n=int(values.size),
        mean=mean,
        variance=variance,
        skewness=float(stats.skew(values)),
        excess_kurtosis=float(stats.kurtosis(values, fisher=True)),
        ks_distance=ks_distance,
        variance_ratio=variance * information,
    )


def riccati_rate_table(config: ModelConfig, spec: SignalSpec,
                       ladder: Sequence[float]) -> List[Dict[str, float]]:
    """
    e(eps) = sup_{t >= T/10} |gamma - b eps/f| over a ladder, with e(eps)/e(next eps).

    Returns:
        List of rows {epsilon, error, ratio}; ratio is NaN on the last row
    """
    errors = [riccati_asymptotic_error(config.theta, config.with_epsilon(eps), spec) for eps in ladder]
    rows = []
    for index, (eps, error) in enumerate(zip(ladder, errors)):
        ratio = errors[index] / errors[index + 1] if index + 1 < len(errors) else math.nan
        rows.append({'epsilon': float(eps), 'error': error, 'ratio': ratio})
        logger.info(f"Riccati rate: eps={eps}, e={error:.6g}, ratio={ratio:.4g}")
    return rows


def _run_replication(task: Tuple[ExperimentPlan, int, int]) -> ReplicationResult:
    """One (eps, replication) work unit; runs in a worker process."""
    plan, eps_index, replication = task
    epsilon = plan.epsilon_ladder[eps_index]
    seed = derive_seed(plan.base_seed, eps_index, replication)
    config = plan.config.with_epsilon(epsilon).with_seed(seed)
    spec = plan.signal
    try:
        path = simulate(config, spec)
        observed = path.observed()

        estimates = []
        for method in plan.methods:
            if method is EstimatorMethod.MLE:
                estimates.append(mle(observed, config, spec))
            elif method is EstimatorMethod.KERNEL_PSI:
                kernel = default_kernel(config, plan.bandwidth)
                estimates.append(psi_estimator(observed, config, spec, kernel, plan.panel_fractions))

        checks: Dict[str, float] = {}
        if CheckName.FISHER_LIMIT in plan.checks or CheckName.LAN_RESIDUAL in plan.checks:
            output = run_filter(config.theta, observed, config, spec)
            checks['score'] = score_from_output(output, observed, epsilon)
            checks['fisher_eps'] = fisher_from_output(output, observed, epsilon)
        if CheckName.LAN_RESIDUAL in plan.checks:
            lhs, rhs = lan_expansion_check(plan.lan_u, observed, config, spec)
            checks['lan_residual'] = abs(lhs - rhs)
        if CheckName.CONTRAST in plan.checks:
            checks['contrast'] = empirical_contrast(plan.contrast_theta, observed, config, spec)

        return ReplicationResult(eps_index, replication, epsilon, seed, tuple(estimates), checks)
    except Exception as e:
        logger.error(f"Replication eps={epsilon}, rep={replication}, seed={seed} failed: {e}")
        return ReplicationResult(eps_index, replication, epsilon, seed, error=f"{type(e).__name__}: {e}")


def _check_stats(results: Sequence[ReplicationResult]) -> Dict[str, float]:
    """Mean, median and variance of each per-path check value."""
    keys = sorted({key for result in results for key in result.checks})
    summary: Dict[str, float] = {}
    for key in keys:
        values = np.array([r.checks[key] for r in results if key in r.checks], dtype=float)
        summary[f"{key}_mean"] = float(values.mean())
        summary[f"{key}_median"] = float(np.median(values))
        summary[f"{key}_variance"] = float(values.var(ddof=1)) if values.size > 1 else math.nan
    return summary


def _summarise(plan: ExperimentPlan, eps_index: int, results: Sequence[ReplicationResult],
               information: float, limits: Tuple[float, float]) -> List[EpsilonSummary]:
    epsilon = plan.epsilon_ladder[eps_index]
    succeeded = [r for r in results if not r.failed]
    failures = len(results) - len(succeeded)
    check_stats = _check_stats(succeeded)
    if 'fisher_eps_mean' in check_stats:
        mean = check_stats['fisher_eps_mean']
        I0, stationary = limits
        check_stats['fisher_eps_ratio_expected'] = mean / information if information > 0 else math.nan
        check_stats['fisher_eps_ratio_limit'] = mean / I0 if I0 > 0 else math.nan
        check_stats['fisher_eps_ratio_stationary'] = mean / stationary if stationary > 0 else math.nan

    summaries = []
    for method in plan.methods or (None,):
        if method is None:
            summaries.append(EpsilonSummary(epsilon, "none", len(results), failures, 0, math.nan,
                                            None, check_stats, information))
            continue
        reports = [e for r in succeeded for e in r.estimates if e.method is method]
        usable = [e for e in reports if e.usable]
        # Sort so the summary does not depend on replication order
        errors = sorted(e.normalized_error for e in usable)
        abs_errors = [abs(e.theta_hat - e.theta_true) for e in usable]
        normality = None
        if len(errors) >= MIN_NORMALITY_SAMPLES and information > 0:
            normality = normality_report(errors, information)
        summaries.append(EpsilonSummary(
            epsilon=epsilon,
            method=method.value,
            replications=len(results),
            failures=failures,
            excluded=len(reports) - len(usable),
            median_abs_error=float(np.median(abs_errors)) if abs_errors else math.nan,
            normality=normality,
            check_stats=check_stats,
            expected_fisher=information,
        ))
    return summaries


def run_plan(plan: ExperimentPlan) -> PlanResult:
    """
    Run every (eps, replication) work unit of a plan and aggregate.

    Work units are mapped in order over a process pool (inline when
    workers == 1), so results do not depend on the worker count.

    Args:
        plan: Experiment plan

    Returns:
        PlanResult with ordered replications and per-eps summaries

    Raises:
        PlanAbortedError: More than 20% of replications failed at some eps
    """
    start = time.perf_counter()
    I0 = fisher_limit(plan.config.theta, plan.config.T, plan.config.b, plan.signal)
    stationary = stationary_fisher_limit(plan.config.theta, plan.config.T, plan.config.b, plan.signal)
    tasks = [(plan, eps_index, rep)
             for eps_index in range(len(plan.epsilon_ladder))
             for rep in range(plan.replications)]
    logger.info(f"Running plan: ladder={list(plan.epsilon_ladder)}, replications={plan.replications}, "
                f"methods={[m.value for m in plan.methods]}, checks={[c.value for c in plan.checks]}, "
                f"workers={plan.workers}, I0={I0:.6g}, stationary limit={stationary:.6g}")

    if plan.workers == 1:
        results = [_run_replication(task) for task in tasks]
    else:
        chunksize = max(1, len(tasks) // (4 * plan.workers))
        with ProcessPoolExecutor(max_workers=plan.workers) as executor:
            results = list(executor.map(_run_replication, tasks, chunksize=chunksize))

    summaries: List[EpsilonSummary] = []
    messages: List[str] = []
    for eps_index, epsilon in enumerate(plan.epsilon_ladder):
        block = results[eps_index * plan.replications:(eps_index + 1) * plan.replications]
        failures = sum(1 for r in block if r.failed)
        if failures > MAX_FAILURE_RATE * len(block):
            raise PlanAbortedError(
                f"{failures} of {len(block)} replications failed at eps={epsilon}")
        if failures:
            messages.append(f"{failures} replications failed at eps={epsilon}")
        expected = expected_fisher_eps(plan.config.theta, plan.config.with_epsilon(epsilon), plan.signal)
        summaries.extend(_summarise(plan, eps_index, block, expected, (I0, stationary)))
        logger.info(f"Finished eps={epsilon}: {len(block) - failures}/{len(block)} replications succeeded")

    passed = True
    smallest = plan.epsilon_ladder[-1]
    for summary in summaries:
        if summary.epsilon == smallest and summary.method != "none" \
                and summary.exclusion_rate > MAX_EXCLUSION_RATE:
            passed = False
            messages.append(f"{summary.method}: {summary.excluded} estimates excluded at eps={smallest} "
                            f"({summary.exclusion_rate:.1%})")

    rates = None
    if CheckName.RICCATI_RATE in plan.checks:
        rates = riccati_rate_table(plan.config, plan.signal, plan.epsilon_ladder)
        low, high = RICCATI_RATIO_WINDOW
        for row in rates[:-1]:
            if not low <= row['ratio'] <= high:
                passed = False
                messages.append(f"Riccati rate ratio {row['ratio']:.4g} at eps={row['epsilon']} "
                                f"outside [{low}, {high}]")

    logger.info(f"Plan finished in {time.perf_counter() - start:.1f}s, passed={passed}")
    return PlanResult(plan=plan, replications=tuple(results), summaries=tuple(summaries),
                      fisher_limit=I0, riccati_rates=rates, passed=passed, messages=tuple(messages),
                      stationary_fisher_limit=stationary)


def write_replications_csv(result: PlanResult, filename: str, config_digest: str) -> bool:
    """One row per (replication, method) in the estimate CSV column order."""
    return write_csv(filename, ESTIMATE_COLUMNS, result.estimate_rows(),
                     header=provenance_line(config_digest, result.plan.base_seed))


def write_summary_json(result: PlanResult, filename: str, config_digest: str) -> bool:
    """Per-eps summaries with all NormalityReport fields."""
    return save_json(result.to_dict(), filename,
                     header=provenance_line(config_digest, result.plan.base_seed))


def acceptance_checks(config: ModelConfig, spec: SignalSpec, ladder: Sequence[float],
                      replications: int, fisher_epsilon: float, lan_u: float = 1.0,
                      lan_replications: Optional[int] = None, workers: int = 1) -> List[CheckResult]:
    """
    Checks run by the `check` command: Riccati rate, Fisher limit and LAN residual.

    Args:
        config: Base configuration
        spec: Signal specification
        ladder: Decreasing eps ladder for the rate and residual checks
        replications: Paths for the Fisher-limit check
        fisher_epsilon: eps at which simulated eps I_eps is compared with its exact
            expectation; the detail column also gives its ratio to I0 and to the
            stationary limit
        lan_u: Local parameter of the LAN check
        lan_replications: Paths per eps for the LAN check (default: replications)
        workers: Worker processes

    Returns:
        List[CheckResult]: One row per criterion
    """
    rows: List[CheckResult] = []

    rates = riccati_rate_table(config, spec, ladder)
    low, high = RICCATI_RATIO_WINDOW
    for row in rates[:-1]:
        rows.append(CheckResult("riccati-rate", row['ratio'], f"in [{low}, {high}]",
                                low <= row['ratio'] <= high, f"eps={row['epsilon']}"))

    I0 = fisher_limit(config.theta, config.T, config.b, spec)
    stationary = stationary_fisher_limit(config.theta, config.T, config.b, spec)
    expected = expected_fisher_eps(config.theta, config.with_epsilon(fisher_epsilon), spec)
    if not (I0 > 0 and stationary > 0 and expected > 0):
        raise ConfigurationError("fisher-limit: the signal carries no information about theta "
                                 "(b = 0 or constant f)")
    fisher_plan = ExperimentPlan(config=config, signal=spec, epsilon_ladder=(fisher_epsilon,),
                                 replications=replications, methods=(),
                                 checks=(CheckName.FISHER_LIMIT,), base_seed=config.seed,
                                 workers=workers)
    fisher_result = run_plan(fisher_plan)
    values = [r.checks['fisher_eps'] for r in fisher_result.replications if not r.failed]
    if not values:
        raise PlanAbortedError(f"fisher-limit: no replication succeeded at eps={fisher_epsilon}")
    single, mean_value = values[0], float(np.mean(values))
    first = single / expected - 1.0
    mean = mean_value / expected - 1.0
    rows.append(CheckResult(
        "fisher-limit", first, f"|rel to E[eps I_eps]| <= {FISHER_SINGLE_TOLERANCE}",
        abs(first) <= FISHER_SINGLE_TOLERANCE,
        f"single path, E={expected:.6g}, /I0={single / I0:.4f}, /stationary={single / stationary:.4f}"))
    rows.append(CheckResult(
        "fisher-limit", mean, f"|rel to E[eps I_eps]| <= {FISHER_MEAN_TOLERANCE}",
        abs(mean) <= FISHER_MEAN_TOLERANCE,
        f"mean of {len(values)} paths, /I0={mean_value / I0:.4f}, /stationary={mean_value / stationary:.4f}"))

    lan_plan = ExperimentPlan(config=config, signal=spec, epsilon_ladder=tuple(ladder),
                              replications=lan_replications or replications, methods=(),
                              checks=(CheckName.LAN_RESIDUAL,), base_seed=config.seed,
                              workers=workers, lan_u=lan_u)
    lan_result = run_plan(lan_plan)
    medians = [s.check_stats['lan_residual_median'] for s in lan_result.summaries]
    decreasing = all(later < earlier for earlier, later in zip(medians, medians[1:]))
    rows.append(CheckResult("lan-residual", medians[-1], "median decreases as eps halves", decreasing,
                            "medians " + ", ".join(f"{m:.4g}" for m in medians)))

    for row in rows:
        logger.info(f"Check {row.name}: value={row.value:.6g} ({row.criterion}) -> "
                    f"{'PASS' if row.passed else 'FAIL'}")
    return rows


def plan_from_config(data: Dict[str, Any], seed: Optional[int] = None, workers: int = 1) -> ExperimentPlan:
    """Build an ExperimentPlan from a validated configuration dictionary."""
    return ExperimentPlan.from_dict(data, base_seed=seed, workers=workers)
