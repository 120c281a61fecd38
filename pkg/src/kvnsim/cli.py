"""Command-line entry point.

Verbs:
  run <cfg>                 full propagation + verification report
  converge <cfg> --ladder   resolution ladder with measured orders
  check <cfg>               static operator diagnostics, no stepping
  version

Exit codes: 0 all asserted thresholds pass, 1 assertion failure,
2 usage or validation error.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import ConfigError, parse_scenario
from .pipeline import check_scenario, converge_scenario, run_scenario
from .propagators import SolverError

__all__ = ["main"]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kvnsim", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run a scenario and verify it")
    run.add_argument("config", help="scenario config path")
    run.add_argument("--output", default=None, help="override output directory")
    run.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    conv = sub.add_parser("converge", help="resolution ladder convergence study")
    conv.add_argument("config", help="scenario config path")
    conv.add_argument("--ladder", required=True,
                      help="comma-separated resolutions, e.g. 64,128,256")
    conv.add_argument("--output", default=None, help="override output directory")
    conv.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    chk = sub.add_parser("check", help="static diagnostics without time stepping")
    chk.add_argument("config", help="scenario config path")
    chk.add_argument("--output", default=None, help="override output directory")
    chk.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    sub.add_parser("version", help="print the version")
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; keep its code
        return int(exc.code or 0)

    if args.verb == "version":
        print(f"kvnsim {__version__}")
        return 0

    try:
        cfg = parse_scenario(args.config)
        if args.verb == "run":
            outputs = run_scenario(cfg, output_dir=args.output,
                                   make_plots=not args.no_plots)
        elif args.verb == "check":
            outputs = check_scenario(cfg, output_dir=args.output,
                                     make_plots=not args.no_plots)
        else:
            try:
                ladder = [int(v) for v in args.ladder.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"--ladder: {exc}") from exc
            outputs = converge_scenario(cfg, ladder, output_dir=args.output,
                                        make_plots=not args.no_plots)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    code = outputs.exit_code
    status = "PASS" if code == 0 else "FAIL"
    print(f"{args.verb} {cfg.name}: {status} (outputs in {outputs.output_dir})")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
