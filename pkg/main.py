"""
Main application - command-line surface of the multi-SIM coordination simulator

    python main.py run <scenario.json> [--seed N] [--reps N] [--out DIR] [--assert] [--scalability] ...
    python main.py sweep <scenario.json> --param devices.count --values 20,40,80 ...
    python main.py validate <scenario.json>
    python main.py history [--db PATH] [--scenario ID]
"""
import argparse
import json
import logging
import sys
from typing import Any, List, Optional

# Import configuration
import config

from domain.errors import ConfigInvalidError, NotApplicableError
from metrics.report import compare
from runner.orchestrator import (
    replication_seeds, run_replications, run_sweep, write_event_logs, write_report, write_results_csv,
)
from runner.scenario import load_scenario, validate_scenario

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_ASSERT_FAILED, EXIT_CONFIG_INVALID = 0, 1, 2


def setup_logging():
    # stdout plus a UTF-8 log file
    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout),
            logging.FileHandler(config.LOG_FILE, encoding='utf-8')
        ]
    )


def parse_values(raw: str) -> List[Any]:
    """'20,40,80' -> [20, 40, 80]; items that are not JSON stay strings"""
    values = []
    for item in raw.split(','):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(json.loads(item))
        except json.JSONDecodeError:
            values.append(item)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Multi-SIM coordination simulator')
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('scenario', help='Scenario JSON file')
    common.add_argument('--seed', type=int, default=None, help='First seed (default: scenario seed)')
    common.add_argument('--reps', type=int, default=None, help='Replications (default: scenario value)')
    common.add_argument('--out', default=config.OUTPUT_DIR, help=f'Output directory (default: {config.OUTPUT_DIR})')
    common.add_argument('--assert', dest='assert_checks', action='store_true',
                        help='Exit 1 when a direction check fails')
    common.add_argument('--log-events', action='store_true', help='Write events-<seed>.ndjson per replication')
    common.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help='Override a scenario value (dotted path, JSON value)')
    common.add_argument('--workers', type=int, default=config.WORKERS, help='Parallel replications')
    common.add_argument('--db', default=config.RESULTS_DB or None, help='Store runs in this SQLite file')

    run_parser = subparsers.add_parser('run', parents=[common], help='Run one scenario and the comparison report')
    run_parser.add_argument('--scalability', action='store_true',
                            help=f'Score scalability over device counts {config.COMPARE_SWEEP_DEVICES}')

    sweep_parser = subparsers.add_parser('sweep', parents=[common], help='Vary one scenario parameter')
    sweep_parser.add_argument('--param', required=True, help='Dotted scenario key, e.g. devices.count')
    sweep_parser.add_argument('--values', required=True, help='Comma-separated values')

    validate_parser = subparsers.add_parser('validate', help='Check a scenario file')
    validate_parser.add_argument('scenario', help='Scenario JSON file')
    validate_parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE')

    history_parser = subparsers.add_parser('history', help='List stored runs')
    history_parser.add_argument('--db', default=config.RESULTS_DB or None, help='SQLite file')
    history_parser.add_argument('--scenario', default=None, help='Only this scenario id')
    history_parser.add_argument('--limit', type=int, default=20)
    return parser


def _store(db_path: Optional[str], replications) -> None:
    if not db_path:
        return
    from database.results_db import ResultsDatabase
    ResultsDatabase(db_path).add_runs(replications)


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, args.overrides)
    seeds = replication_seeds(scenario, args.seed, args.reps)
    replications = run_replications(scenario, seeds, args.workers)
    write_results_csv(replications, args.out)
    if args.log_events:
        write_event_logs(replications, args.out)
    _store(args.db, replications)

    sweep_devices = config.COMPARE_SWEEP_DEVICES if args.scalability else None
    report = compare(scenario, seeds=seeds, workers=args.workers, sweep_devices=sweep_devices)
    write_report(report.to_markdown(), args.out)
    return _finish(report, args.assert_checks)


def cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario, args.overrides)
    seeds = replication_seeds(scenario, args.seed, args.reps)
    values = parse_values(args.values)
    if not values:
        raise ConfigInvalidError(["--values must name at least one value"])
    points = run_sweep(scenario, args.param, values, seeds, args.workers)
    replications = [rep for p in points for rep in p.replications]
    write_results_csv(replications, args.out)
    if args.log_events:
        write_event_logs(replications, args.out)
    _store(args.db, replications)

    sweep_devices = [int(v) for v in values] if args.param == 'devices.count' else None
    report = compare(scenario, seeds=seeds, workers=args.workers, sweep_devices=sweep_devices)
    write_report(report.to_markdown(), args.out)
    return _finish(report, args.assert_checks)


def _finish(report, assert_checks: bool) -> int:
    for check in report.checks:
        logger.info(f"[Main] {check.name}: {check.status} - {check.claim} ({check.detail})")
    if assert_checks and not report.passed:
        logger.error("[Main] direction checks failed")
        return EXIT_ASSERT_FAILED
    return EXIT_OK


def cmd_validate(args) -> int:
    outcome = validate_scenario(args.scenario, args.overrides)
    if isinstance(outcome, list):
        print(f"CONFIG_INVALID: {args.scenario}")
        for violation in outcome:
            print(f"  - {violation}")
        return EXIT_CONFIG_INVALID
    print(f"valid: {outcome.scenario_id} stack={outcome.strategies.label}")
    for key, value in outcome.classify().items():
        print(f"  {key}: {value}")
    return EXIT_OK


def cmd_history(args) -> int:
    if not args.db:
        print("No run-history database configured (use --db or RESULTS_DB)")
        return EXIT_CONFIG_INVALID
    from database.results_db import ResultsDatabase
    db = ResultsDatabase(args.db)
    runs = db.get_runs(scenario_id=args.scenario, limit=args.limit)
    print(f"{len(runs)} runs")
    for run in runs:
        print(f"  #{run['id']} {run['scenario_id']} seed={run['seed']} stack={run['stack']} "
              f"MT {run['mt_delivered']}/{run['mt_arrivals']} units={run['signaling_units']} "
              f"digest={run['digest'][:12]}")
    stats = db.get_run_stats(args.scenario)
    for row in stats.get('stacks', []):
        print(f"  [{row['stack']}] runs={row['runs']} avg units={row['avg_signaling_units']:.1f} "
              f"misleading={row['misleading_events']}")
    return EXIT_OK


COMMANDS = {'run': cmd_run, 'sweep': cmd_sweep, 'validate': cmd_validate, 'history': cmd_history}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_OK

    setup_logging()
    try:
        config.validate_config()
    except ValueError as e:
        logger.error(f"[Main] {e}")
        return EXIT_CONFIG_INVALID

    try:
        return COMMANDS[args.command](args)
    except (ConfigInvalidError, NotApplicableError) as e:
        logger.error(f"[Main] CONFIG_INVALID: {e}")
        return EXIT_CONFIG_INVALID


if __name__ == '__main__':
    sys.exit(main())
