#!/usr/bin/env python3
import sys
import json
import signal
import logging
import argparse
from typing import Dict, List, Optional

from quadomain.certify.pipeline import certify_construction
from quadomain.config import RunConfig, load_config
from quadomain.construct.pipeline import construct_quadrature_domain
from quadomain.errors import ConfigError, QuadomainError, StageError
from quadomain.kernels.selftest import SUITES, run_selftest
from quadomain.onepoint.pipeline import run_onepoint
from quadomain.storage.handler import ReportStorage, to_jsonable

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
DEFAULT_OUT = 'runs'


def signal_handler(signum, frame):
    """Handle system signals gracefully."""
    logger.info(f"Received signal {signum}. Shutting down gracefully...")
    sys.exit(0)


def _finish(storage: ReportStorage, kind: str, config: RunConfig, progress: Dict,
            failure: Optional[StageError], clouds=None) -> int:
    run = storage.create_run(kind)
    timings = progress.pop('timing', {})
    passed = failure is None
    report = {'kind': kind, 'status': 'PASS' if passed else 'FAIL', 'config': config.to_dict(),
              'seed': config.seed, 'stages': progress}
    if failure is not None:
        report['failure'] = {'stage': failure.stage, 'message': failure.detail}
    storage.write_report(run, report)
    storage.write_timing(run, timings)
    if clouds is not None:
        storage.write_points(run, 'source', clouds[0])
        storage.write_points(run, 'image', clouds[1])
    storage.write_summary(run, passed, None if passed else failure.stage)
    storage.prune()
    logger.info(f"{kind} run {'PASS' if passed else 'FAIL'}; outputs in {run}")
    return EXIT_PASS if passed else EXIT_FAIL


def _as_stage_error(error: QuadomainError) -> StageError:
    if isinstance(error, StageError):
        return error
    logger.error(f"Run failed outside a pipeline stage: {error}")
    return StageError('run', str(error))


def cmd_construct(config: RunConfig, storage: ReportStorage) -> int:
    """Construct, certify and report a quadrature domain image."""
    if config.kind != 'construct':
        raise ConfigError(f"construct needs a construct configuration, got kind {config.kind!r}")
    progress: Dict = {}
    failure, clouds = None, None
    try:
        construction = construct_quadrature_domain(config, progress)
        clouds = construction.point_clouds(config.margin)
        certify_construction(construction, config, progress)
    except QuadomainError as e:
        failure = _as_stage_error(e)
    return _finish(storage, 'construct', config, progress, failure, clouds)


def cmd_onepoint(config: RunConfig, storage: ReportStorage) -> int:
    """Certify a one-point quadrature domain ``f^{-1}(B)``."""
    if config.kind != 'onepoint':
        raise ConfigError(f"onepoint needs a onepoint configuration, got kind {config.kind!r}")
    progress: Dict = {}
    failure, clouds = None, None
    try:
        result = run_onepoint(config, progress)
        clouds = result.point_clouds(seed=config.seed)
        progress['result'] = result.to_dict()
    except QuadomainError as e:
        failure = _as_stage_error(e)
    return _finish(storage, 'onepoint', config, progress, failure, clouds)


def cmd_selftest(suites: Optional[List[str]], margin: float, seed: int, out: Optional[str]) -> int:
    """Kernel invariant suite; prints the machine-readable report."""
    report = run_selftest(SUITES if suites is None else suites, margin, seed)
    timing = report.pop('timing', {})
    if out is not None:
        storage = ReportStorage(out)
        run = storage.create_run('selftest')
        storage.write_report(run, report)
        storage.write_timing(run, timing)
        storage.write_summary(run, report['status'] != 'FAIL', 'selftest')
    print(json.dumps(to_jsonable(report), sort_keys=True, indent=2))
    return EXIT_FAIL if report['status'] == 'FAIL' else EXIT_PASS


def cmd_runs(storage: ReportStorage, keep: Optional[int]) -> int:
    if keep is not None:
        storage.prune(keep)
    for run in storage.list_runs():
        print(f"{run['timestamp']}  {run['kind']:<10} {run['verdict']:<20} {run['path']}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='quadomain', description='Quadrature domain construction and certification')
    parser.add_argument('--verbose', action='store_true', help='Log numeric diagnostics')
    commands = parser.add_subparsers(dest='command', required=True)

    for name, text in (('construct', 'Construct and certify a quadrature domain image'),
                       ('onepoint', 'Certify a one-point quadrature domain')):
        command = commands.add_parser(name, help=text)
        command.add_argument('--config', required=True, help='JSON run configuration')
        command.add_argument('--out', default=DEFAULT_OUT, help='Directory for run outputs')
        command.add_argument('--seed', type=int, default=None, help='Override the configured seed')
        command.add_argument('--tolerance-scale', type=float, default=1.0, help='Multiply every tolerance')
        command.add_argument('--keep', type=int, default=None, help='Keep only this many runs in --out')

    selftest = commands.add_parser('selftest', help='Run the kernel invariant suite')
    selftest.add_argument('--suites', nargs='*', default=None, help=f"Any of {', '.join(SUITES)}")
    selftest.add_argument('--margin', type=float, default=0.05, help='Evaluation margin')
    selftest.add_argument('--seed', type=int, default=0)
    selftest.add_argument('--out', default=None, help='Also store the report as a run')

    runs = commands.add_parser('runs', help='List previous runs')
    runs.add_argument('--out', default=DEFAULT_OUT, help='Directory holding run outputs')
    runs.add_argument('--keep', type=int, default=None, help='Prune to this many runs first')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)

    try:
        if args.command == 'selftest':
            return cmd_selftest(args.suites, args.margin, args.seed, args.out)
        if args.command == 'runs':
            return cmd_runs(ReportStorage(args.out), args.keep)
        config = load_config(args.config, args.tolerance_scale, args.seed)
        storage = ReportStorage(args.out, retention=args.keep)
        if args.command == 'construct':
            return cmd_construct(config, storage)
        return cmd_onepoint(config, storage)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
