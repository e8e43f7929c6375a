import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional

from .config import config
from .report import HTMLReportGenerator, ReportGenerator, write_csv, write_json
from .runner import EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_PASS, EXIT_USAGE, QUANTITIES, TARGETS, RunReport, \
    run_sweep, run_verify
from .scenarios import ScenarioConfig, list_scenarios, load_scenario
from .validator import EpiqError

logger = logging.getLogger(__name__)


def parse_tolerances(items: Optional[List[str]]) -> Dict[str, float]:
    tolerances = {}
    for item in items or []:
        name, sep, value = item.partition('=')
        if not sep:
            raise ValueError(f"--tolerance expects NAME=VALUE, got '{item}'")
        tolerances[name.strip()] = float(value)
    return tolerances


def parse_times(text: str) -> List[float]:
    return [float(t) for t in text.split(',') if t.strip()]


def combined_exit_code(runs: List[RunReport]) -> int:
    codes = {run.exit_code for run in runs}
    if EXIT_FAIL in codes:
        return EXIT_FAIL
    if EXIT_INCONCLUSIVE in codes:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


def _apply_overrides(scenario: ScenarioConfig, args) -> ScenarioConfig:
    return scenario.with_overrides(
        grid_points=args.grid_points,
        tolerances=parse_tolerances(args.tolerance),
        seed=args.seed,
    )


def verify_all(scenarios: List[ScenarioConfig], parallel: bool = False) -> List[RunReport]:
    """Run scenarios in order; with ``parallel`` they run in worker processes, results keep input order."""
    if parallel and len(scenarios) > 1:
        with ProcessPoolExecutor() as pool:
            return list(pool.map(run_verify, scenarios))
    return [run_verify(s) for s in scenarios]


def _write_outputs(runs: List[RunReport], args) -> None:
    out_dir = Path(args.out) if args.out else config.paths.ensure_output_dir()
    for run in runs:
        path = write_json(run, out_dir / f"{run.scenario['name']}.json")
        print(f"Report JSON: {path}")
    if args.html:
        print(f"Report HTML: {HTMLReportGenerator(out_dir).generate(runs, 'report.html')}")
    if args.pdf:
        print(f"Report PDF: {ReportGenerator(out_dir).generate(runs, 'report.pdf')}")


def _print_summary(runs: List[RunReport]) -> None:
    print(f"\n{'=' * 60}")
    for run in runs:
        s = run.summary()
        print(f"{run.scenario['name']:<24} pass {s['passed']:>4}  fail {s['failed']:>3}  "
              f"inconclusive {s['inconclusive']:>3}  errors {s['errors']:>3}  ({run.wall_clock:.1f}s)")
    print(f"{'=' * 60}")


def cmd_verify(args) -> int:
    scenarios = [_apply_overrides(load_scenario(source), args) for source in args.config]
    logger.info("verifying %d scenario(s)", len(scenarios))
    runs = verify_all(scenarios, args.parallel)
    _print_summary(runs)
    _write_outputs(runs, args)
    return combined_exit_code(runs)


def cmd_demo(args) -> int:
    names = [entry["name"] for entry in list_scenarios()] if args.name == 'all' else [args.name]
    args.config = names
    return cmd_verify(args)


def cmd_sweep(args) -> int:
    scenario = _apply_overrides(load_scenario(args.config), args)
    table = run_sweep(scenario, args.quantity, parse_times(args.t), lam=args.lam, target=args.target)
    if args.out:
        print(f"Sweep CSV: {write_csv(table, Path(args.out))}")
    else:
        sys.stdout.write(table.to_csv(index=False, float_format="%.12g"))
    return EXIT_PASS


def cmd_list(args) -> int:
    for entry in list_scenarios():
        print(f"{entry['name']:<24} {entry['description']}")
    return EXIT_PASS


def _add_run_options(parser: argparse.ArgumentParser):
    parser.add_argument('--grid-points', type=int, default=None,
                        help='Override the point count of both axes')
    parser.add_argument('--tolerance', action='append', metavar='NAME=VALUE',
                        help='Override a tolerance (repeatable), e.g. --tolerance entropic=1e-4')
    parser.add_argument('--seed', type=int, default=None, help='Override the scenario seed')
    parser.add_argument('--out', default=None, help='Output directory (verify/demo) or CSV path (sweep)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='epiq',
        description='Numerical checks of the entropy power inequality conditioned on quantum side information'
    )
    sub = parser.add_subparsers(dest='command', required=True)

    verify = sub.add_parser('verify', help='Run the checks listed in scenario configs')
    verify.add_argument('config', nargs='+', help='Scenario JSON file(s) or bundled scenario name(s)')
    _add_run_options(verify)
    verify.add_argument('--parallel', action='store_true', help='Run scenarios in worker processes')
    verify.add_argument('--html', action='store_true', help='Also write an HTML summary')
    verify.add_argument('--pdf', action='store_true', help='Also write a PDF summary')
    verify.set_defaults(handler=cmd_verify)

    demo = sub.add_parser('demo', help="Run a bundled scenario, or 'all'")
    demo.add_argument('name')
    _add_run_options(demo)
    demo.add_argument('--parallel', action='store_true', help='Run scenarios in worker processes')
    demo.add_argument('--html', action='store_true', help='Also write an HTML summary')
    demo.add_argument('--pdf', action='store_true', help='Also write a PDF summary')
    demo.set_defaults(handler=cmd_demo)

    sweep = sub.add_parser('sweep', help='Tabulate a quantity along the heat flow as CSV')
    sweep.add_argument('config')
    sweep.add_argument('--quantity', required=True, choices=QUANTITIES)
    sweep.add_argument('--t', required=True, help='Comma-separated times, e.g. 0,0.5,1')
    sweep.add_argument('--lambda', dest='lam', type=float, default=0.5, help='Weight for the phi flow')
    sweep.add_argument('--target', choices=TARGETS, default='x', help='CQ state for entropy/Fisher flows')
    _add_run_options(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    lister = sub.add_parser('list', help='List bundled scenarios')
    lister.set_defaults(handler=cmd_list)
    return parser


def main(argv: List[str] = None) -> int:
    logging.basicConfig(level=config.logging.level, format=config.logging.format)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors
        return EXIT_USAGE if e.code else EXIT_PASS
    try:
        return args.handler(args)
    except EpiqError as e:
        print(f"✗ {e.error_type.value}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
