"""
Command-line interface for OUFreq.

    oufreq <simulate|filter|estimate|mc|check> --config FILE --out DIR
           [--seed N] [--workers N] [--theta X] [--set section.key=value]...

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 acceptance-check failure.
"""

import argparse
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

from ..core.estimators import default_kernel, limit_oracle_estimate, mle, psi_estimator
from ..core.kalman_filter import run_filter
from ..core.montecarlo import (acceptance_checks, plan_from_config, run_plan, write_replications_csv,
                               write_summary_json)
from ..core.simulator import simulate
from ..models.model_config import ModelConfig
from ..models.reports import ESTIMATE_COLUMNS, EstimatorMethod
from ..models.signal_spec import SignalSpec
from ..utils.errors import AcceptanceError, ConfigurationError
from ..utils.file_loader import config_hash, load_config_file, load_schema, provenance_line, write_csv
from ..utils.logger import configure_logging
from ..utils.validation import apply_overrides, check_config
from .run_audit_trail import RunAuditTrail

# Set up logger for this module
logger = logging.getLogger(__name__)

SUBCOMMANDS = ("simulate", "filter", "estimate", "mc", "check")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3

CHECK_COLUMNS = ['check', 'value', 'criterion', 'passed', 'detail']


@dataclass(frozen=True)
class CliConfig:
    """Parsed command line."""
    subcommand: str
    config_path: str
    output_dir: str
    seed: Optional[int] = None
    workers: int = 1
    theta: Optional[float] = None
    overrides: Tuple[str, ...] = field(default_factory=tuple)


def _default_workers() -> int:
    env_value = os.environ.get("OUFREQ_WORKERS")
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError:
            logger.warning(f"Ignoring non-integer OUFREQ_WORKERS={env_value!r}")
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-parser per subcommand sharing the common options."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Experiment config (path or packaged name)")
    common.add_argument("--out", required=True, help="Output directory; nothing is written elsewhere")
    common.add_argument("--seed", type=int, default=None, help="Base seed (overrides model.seed)")
    common.add_argument("--workers", type=int, default=None,
                        help="Worker processes (default: OUFREQ_WORKERS or CPU count)")
    common.add_argument("--theta", type=float, default=None,
                        help="Candidate frequency for `filter` (default: filter.theta or model.theta)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a config value, e.g. model.epsilon=0.01 (repeatable)")

    parser = argparse.ArgumentParser(
        prog="oufreq",
        description="Frequency estimation for OU-modulated periodic signals in small noise")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "simulate": "Simulate one path and write t, X, Y",
        "filter": "Write the filter trace at a candidate frequency",
        "estimate": "Run the configured estimators on one path",
        "mc": "Run the Monte Carlo plan of the config",
        "check": "Run the Riccati-rate, Fisher-limit and LAN-residual checks",
    }
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], help=helps[name])
    return parser


def parse_args(argv: Sequence[str]) -> CliConfig:
    """
    Parse argv into a CliConfig.

    Raises:
        SystemExit: On usage errors or --help (argparse behaviour)
    """
    args = build_parser().parse_args(list(argv))
    workers = _default_workers() if args.workers is None else args.workers
    if workers < 1:
        raise ConfigurationError(f"--workers: must be >= 1, got {workers}")
    return CliConfig(subcommand=args.subcommand, config_path=args.config, output_dir=args.out,
                     seed=args.seed, workers=workers, theta=args.theta,
                     overrides=tuple(args.overrides))


def load_effective_config(cli: CliConfig) -> Dict[str, Any]:
    """
    Load the config, apply --set and --seed, and validate against the schema.

    Raises:
        ConfigurationError: Unreadable file, unknown key or schema violation
    """
    data = load_config_file(cli.config_path)
    if not data:
        raise ConfigurationError(f"could not read configuration '{cli.config_path}'")
    schema = load_schema()
    if not schema:
        raise ConfigurationError("configuration schema is missing")
    data = apply_overrides(data, cli.overrides, schema)
    if cli.seed is not None:
        data.setdefault('model', {})['seed'] = cli.seed
    ok, message = check_config(data, schema)
    if not ok:
        raise ConfigurationError(message)
    return data


def _model_and_signal(data: Dict[str, Any]) -> Tuple[ModelConfig, SignalSpec]:
    return ModelConfig.from_dict(data.get('model', {})), SignalSpec.from_dict(data.get('signal', {}))


def _run_simulate(cli: CliConfig, data: Dict[str, Any], digest: str, audit: RunAuditTrail) -> int:
    config, spec = _model_and_signal(data)
    path = simulate(config, spec)
    filename = os.path.join(cli.output_dir, "path.csv")
    if not path.to_csv(filename, digest):
        raise OSError(f"could not write {filename}")
    audit.log_artefact(filename, "path", {"n_steps": path.n_steps, "h": path.h})
    return EXIT_OK


def _run_filter(cli: CliConfig, data: Dict[str, Any], digest: str, audit: RunAuditTrail) -> int:
    config, spec = _model_and_signal(data)
    theta = cli.theta
    if theta is None:
        theta = data.get('filter', {}).get('theta')
    if theta is None:
        theta = config.theta
    if not config.alpha <= theta <= config.beta:
        raise ConfigurationError(f"--theta: {theta} is outside [{config.alpha}, {config.beta}]")
    path = simulate(config, spec)
    output = run_filter(theta, path.observed(), config, spec)
    filename = os.path.join(cli.output_dir, "filter_trace.csv")
    if not output.to_csv(filename, digest, config.seed):
        raise OSError(f"could not write {filename}")
    audit.log_artefact(filename, "filter-trace", {"theta": theta})
    return EXIT_OK


def _run_estimate(cli: CliConfig, data: Dict[str, Any], digest: str, audit: RunAuditTrail) -> int:
    config, spec = _model_and_signal(data)
    estimation = data.get('estimation', {})
    methods = [EstimatorMethod(m) for m in estimation.get('methods', ['mle'])]
    path = simulate(config, spec)
    observed = path.observed()

    reports = []
    for method in methods:
        if method is EstimatorMethod.MLE:
            reports.append(mle(observed, config, spec))
        elif method is EstimatorMethod.KERNEL_PSI:
            kernel = default_kernel(config, estimation.get('bandwidth'))
            reports.append(psi_estimator(observed, config, spec, kernel,
                                         tuple(estimation.get('panel_fractions', (0.3, 0.5, 0.7))),
                                         n_sub=estimation.get('n_sub')))
        else:
            reports.append(limit_oracle_estimate(config, spec))
        logger.info(f"{method.value}: theta_hat={reports[-1].theta_hat:.10g}")

    filename = os.path.join(cli.output_dir, "estimates.csv")
    if not write_csv(filename, ESTIMATE_COLUMNS, [r.to_row() for r in reports],
                     header=provenance_line(digest, config.seed)):
        raise OSError(f"could not write {filename}")
    audit.log_artefact(filename, "estimates", {"methods": [m.value for m in methods]})
    return EXIT_OK


def _run_mc(cli: CliConfig, data: Dict[str, Any], digest: str, audit: RunAuditTrail) -> int:
    plan = plan_from_config(data, workers=cli.workers)
    result = run_plan(plan)
    replications_file = os.path.join(cli.output_dir, "replications.csv")
    summary_file = os.path.join(cli.output_dir, "summary.json")
    if not write_replications_csv(result, replications_file, digest):
        raise OSError(f"could not write {replications_file}")
    audit.log_artefact(replications_file, "replications", {"rows": len(result.estimate_rows())})
    if not write_summary_json(result, summary_file, digest):
        raise OSError(f"could not write {summary_file}")
    audit.log_artefact(summary_file, "summary", {"passed": result.passed})
    if not result.passed:
        raise AcceptanceError("; ".join(result.messages) or "plan failed")
    return EXIT_OK


def _run_check(cli: CliConfig, data: Dict[str, Any], digest: str, audit: RunAuditTrail) -> int:
    config, spec = _model_and_signal(data)
    experiment = data.get('experiment', {})
    rows = acceptance_checks(
        config, spec,
        ladder=experiment.get('epsilon_ladder', [0.08, 0.04, 0.02]),
        replications=int(experiment.get('check_replications', 20)),
        fisher_epsilon=float(experiment.get('fisher_epsilon', 0.01)),
        lan_u=float(experiment.get('lan_u', 1.0)),
        lan_replications=experiment.get('lan_replications'),
        workers=cli.workers,
    )
    filename = os.path.join(cli.output_dir, "checks.csv")
    if not write_csv(filename, CHECK_COLUMNS, [row.to_row() for row in rows],
                     header=provenance_line(digest, config.seed)):
        raise OSError(f"could not write {filename}")
    audit.log_artefact(filename, "checks", {"passed": all(row.passed for row in rows)})

    print(f"{'check':<14} {'value':>14}  {'criterion':<32} result")
    for row in rows:
        print(f"{row.name:<14} {row.value:>14.6g}  {row.criterion:<32} {'PASS' if row.passed else 'FAIL'}"
              f"  {row.detail}")
    failed = [row for row in rows if not row.passed]
    if failed:
        raise AcceptanceError(f"{len(failed)} of {len(rows)} checks failed")
    return EXIT_OK


HANDLERS = {
    "simulate": _run_simulate,
    "filter": _run_filter,
    "estimate": _run_estimate,
    "mc": _run_mc,
    "check": _run_check,
}


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the documented exit code."""
    if isinstance(error, AcceptanceError):
        return EXIT_ACCEPTANCE
    if isinstance(error, ConfigurationError):
        return EXIT_USAGE
    if isinstance(error, OSError):
        # Unwritable output is a runtime failure, not a usage error
        return EXIT_NUMERICAL
    # NumericalError, PlanAbortedError and anything unexpected
    return EXIT_NUMERICAL


def run(argv: Sequence[str]) -> int:
    """
    Run one CLI invocation.

    Args:
        argv: Arguments without the program name

    Returns:
        int: Exit code (0, 1, 2 or 3)

    Example:
        >>> run(["simulate", "--config", "default", "--out", "runs/demo", "--seed", "42"])
        0
    """
    try:
        cli = parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors; --help exits with 0
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    except ConfigurationError as e:
        print(f"Error: {e}")
        return EXIT_USAGE

    try:
        os.makedirs(cli.output_dir, exist_ok=True)
    except OSError as e:
        print(f"Error: cannot create output directory {cli.output_dir}: {e}")
        return EXIT_NUMERICAL
    log_file = os.path.join(cli.output_dir, "oufreq.log")
    console_level = os.environ.get("OUFREQ_LOG_LEVEL", "INFO")

    try:
        data = load_effective_config(cli)
    except ConfigurationError as e:
        configure_logging(log_file=log_file, console_level=console_level)
        logger.error(f"Configuration error: {e}")
        print(f"Error: {e}")
        return EXIT_USAGE

    digest = config_hash(data)
    seed = data.get('model', {}).get('seed')
    configure_logging(log_file=log_file, console_level=console_level, header=provenance_line(digest, seed))
    logger.info(f"Starting oufreq {cli.subcommand} with config {cli.config_path}")
    audit = RunAuditTrail(os.path.join(cli.output_dir, "run_audit.jsonl"), cli.subcommand, digest, seed)

    try:
        exit_code = HANDLERS[cli.subcommand](cli, data, digest, audit)
    except KeyboardInterrupt:
        logger.info("Run interrupted by user")
        exit_code = EXIT_NUMERICAL
    except Exception as e:
        exit_code = exit_code_for(e)
        if exit_code == EXIT_ACCEPTANCE:
            logger.warning(f"Acceptance failure: {e}")
        elif exit_code == EXIT_USAGE:
            logger.error(f"Configuration error: {e}")
        else:
            logger.critical(f"Run failed: {e}", exc_info=True)
        print(f"Error: {e}")
        audit.log_failure(e, exit_code)

    audit.log_session_end(exit_code)
    return exit_code
