"""Command-line entry point: ``meso run|compare|validate|export-mps``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import default_config_path, default_forecast_path, load_config
from .errors import FleetError, MesoError, ValidationError
from .milp import write_mps
from .milp.problem import GAP_LIMIT, OPTIMAL
from .scheduler import (
    SCENARIOS, ScenarioId, build, compare, format_comparison, read_costs_csv, read_schedule_csv,
    run_scenario, validate_schedule, write_comparison, write_report,
)
from .timegrid_io import load_forecasts

log = logging.getLogger("meso")

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


def _gap(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("gap must lie in (0, 1)")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seconds(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _scenarios(text):
    if text.strip().lower() == "all":
        return list(SCENARIOS)
    try:
        return [ScenarioId.parse(t) for t in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meso", description="Day-ahead energy hub scheduling.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_default="all"):
        sp.add_argument("--config", type=Path, default=None, help="YAML system configuration (bundled if omitted)")
        sp.add_argument("--forecasts", type=Path, default=None, help="forecast CSV (bundled if omitted)")
        sp.add_argument("--scenario", type=_scenarios, default=_scenarios(scenario_default),
                        help="s1..s4, comma separated, or 'all'")
        sp.add_argument("--output-dir", type=Path, default=Path("meso_out"))

    def solver(sp):
        sp.add_argument("--gap", type=_gap, default=None, help="relative optimality gap")
        sp.add_argument("--nodes", type=_positive_int, default=None, help="branch-and-bound node limit")
        sp.add_argument("--segments", type=_positive_int, default=None, help="PWL segments per fuel curve")
        sp.add_argument("--time-limit", type=_seconds, default=None, help="seconds per scenario")

    r = sub.add_parser("run", help="solve scenarios and write schedule and cost files")
    common(r)
    solver(r)
    r.add_argument("--mps", action="store_true", help="also dump each model as MPS")
    c = sub.add_parser("compare", help="solve all scenarios and write the cost comparison")
    common(c)
    solver(c)
    v = sub.add_parser("validate", help="check an existing schedule CSV")
    common(v, "s1")
    v.add_argument("--schedule", type=Path, required=True)
    v.add_argument("--costs", type=Path, default=None, help="cost CSV to cross-check")
    e = sub.add_parser("export-mps", help="write the MPS model without solving")
    common(e)
    e.add_argument("--segments", type=_positive_int, default=None)
    return p


def _existing(path, what):
    if path is not None and not path.is_file():
        raise _UsageError(f"{what} not found: {path}")
    return path


def _inputs(args):
    cfg_path = _existing(args.config, "config") or default_config_path()
    fc_path = _existing(args.forecasts, "forecasts") or default_forecast_path()
    config = load_config(cfg_path)
    forecasts = load_forecasts(fc_path, config.grid, config.reserve_fraction)
    return config, forecasts


def _solved(rep):
    return rep.status in (OPTIMAL, GAP_LIMIT) and rep.x is not None


def _cmd_run(args, config, forecasts):
    out = args.output_dir
    out.mkdir(parents=True, exist_ok=True)
    code = EXIT_OK
    for s in args.scenario:
        mps = out / f"model_{s.short.lower()}.mps" if args.mps else None
        rep = run_scenario(config, forecasts, s, args.gap, args.nodes, args.segments, args.time_limit,
                           mps_path=mps)
        if not _solved(rep):
            log.error("%s: %s", s.value, rep.status)
            code = EXIT_INFEASIBLE
            continue
        files = write_report(rep, out)
        log.info("%s: total %.2f, files %s", s.value, rep.total, ", ".join(f.name for f in files))
    return code


def _cmd_compare(args, config, forecasts):
    out = args.output_dir
    out.mkdir(parents=True, exist_ok=True)
    reports = compare(config, forecasts, args.scenario, args.gap, args.nodes, args.segments, args.time_limit)
    code = EXIT_OK
    for rep in reports:
        if not _solved(rep):
            log.error("%s: %s", rep.scenario.value, rep.status)
            code = EXIT_INFEASIBLE
        else:
            write_report(rep, out)
    if code == EXIT_OK:
        write_comparison(reports, out / "comparison.csv")
        log.info("cost comparison\n%s", format_comparison(reports))
    return code


def _cmd_validate(args, config, forecasts):
    if len(args.scenario) != 1:
        raise _UsageError("validate needs exactly one scenario")
    cols = read_schedule_csv(_existing(args.schedule, "schedule"))
    costs = read_costs_csv(_existing(args.costs, "costs")) if args.costs else None
    found = validate_schedule(cols, config, forecasts, args.scenario[0], costs)
    for v in found:
        log.error("%s", v)
    log.info("%d violation(s)", len(found))
    return EXIT_OK if not found else EXIT_INFEASIBLE


def _cmd_export(args, config, forecasts):
    out = args.output_dir
    out.mkdir(parents=True, exist_ok=True)
    for s in args.scenario:
        asm = build(config, forecasts, s, args.segments)
        path = write_mps(asm.problem, out / f"model_{s.short.lower()}.mps")
        log.info("wrote %s", path)
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "compare": _cmd_compare, "validate": _cmd_validate, "export-mps": _cmd_export}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config, forecasts = _inputs(args)
        return COMMANDS[args.command](args, config, forecasts)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        log.error("%s", exc)
        return EXIT_USAGE
    except FleetError as exc:
        log.error("infeasible pump fleet: %s", exc)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        log.error("schedule failed validation: %s", exc)
        return EXIT_INFEASIBLE
    except MesoError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
