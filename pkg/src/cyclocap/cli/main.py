"""Command-line entry point.

Exit codes: 0 success, 2 unparsable scenario file, 3 invalid parameter
(the message names the key), 4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from cyclocap import __version__
from cyclocap.cli.scenario import ScenarioParseError, load_scenario
from cyclocap.errors import CyclocapError, ResourceError

log = logging.getLogger("cyclocap")


def _base(value):
    if value not in ("2", "e"):
        raise argparse.ArgumentTypeError("log base must be 2 or e")
    return value


def _common(p, config=True):
    if config:
        p.add_argument("--config", required=True, metavar="PATH", help="scenario YAML file")
    p.add_argument("--out", metavar="DIR", help="output directory (default: output.dir or .)")
    p.add_argument("--format", choices=("csv", "csv+svg"), help="artifacts to write")
    p.add_argument("--log-base", type=_base, help="2 (bits) or e (nats)")
    p.add_argument("--threads", type=int, metavar="N", help="worker threads (default: THREADS)")
    p.add_argument("--seed", type=int, metavar="U64", help="seed for Monte Carlo steps")
    p.add_argument("--verbose", action="store_true", help="one line per computed point")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cyclocap",
        description="Capacity of sampled channels with periodic Gaussian noise variance.",
    )
    parser.add_argument("--version", action="version", version=f"cyclocap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("pulse", help="tabulate the variance profile over one period"))
    _common(sub.add_parser("capacity", help="capacity at the scenario's single operating point"))
    _common(sub.add_parser("sweep", help="run the scenario's sweep"))
    _common(sub.add_parser("infospec", help="information-density p-liminf estimates"))
    rep = sub.add_parser("reproduce", help="rerun a pinned figure and compare reference values")
    rep.add_argument("figure", choices=("fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "all"))
    _common(rep, config=False)
    acc = sub.add_parser("acceptance", help="run the numbered acceptance checks")
    acc.add_argument("--criteria", type=int, nargs="+", metavar="N", help="subset to run")
    _common(acc, config=False)
    return parser


def _out_dir(args, scenario=None):
    if args.out:
        return Path(args.out)
    if scenario is not None and scenario.output.get("dir"):
        return Path(scenario.output["dir"])
    return Path(".")


def _finish(paths):
    for p in paths:
        print(f"wrote {p}")


def _scenario_command(args):
    from cyclocap.cli.runner import emit, run_infospec, run_pulse, run_scenario

    scenario = load_scenario(args.config)
    log_base = args.log_base or str(scenario.output.get("log_base", "2"))
    _base(log_base)
    fmt = args.format or scenario.output["format"]
    name = scenario.output["name"]
    if args.command == "pulse":
        table = run_pulse(scenario)
        name += "_pulse"
    elif args.command == "capacity":
        scenario.sweep = None
        table = run_scenario(scenario, log_base, args.threads, args.verbose)
    elif args.command == "sweep":
        if scenario.sweep is None:
            raise CyclocapError("scenario has no sweep block; use 'capacity'")
        table = run_scenario(scenario, log_base, args.threads, args.verbose)
    else:
        table = run_infospec(scenario, args.seed, args.threads, args.verbose)
        name += "_infospec"
    _finish(emit(table, _out_dir(args, scenario), name, fmt, title=scenario.name))
    return 0


def _reproduce(args):
    from cyclocap.cli.figures import FIGURE_IDS, reproduce

    ids = FIGURE_IDS if args.figure == "all" else (args.figure,)
    status = 0
    for fid in ids:
        rep = reproduce(fid, _out_dir(args), args.threads, args.format or "csv+svg")
        print(rep.render(), end="")
        _finish(rep.artifacts)
        if not rep.passed("e"):
            status = 1
    return status


def _acceptance(args):
    from cyclocap.cli.acceptance import run_acceptance

    results = run_acceptance(_out_dir(args), args.seed or 0, args.threads, args.criteria)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if passed == len(results) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 3
    try:
        if args.command == "reproduce":
            return _reproduce(args)
        if args.command == "acceptance":
            return _acceptance(args)
        return _scenario_command(args)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ResourceError as exc:
        print(f"error: resource limit: {exc}", file=sys.stderr)
        return exc.exit_code
    except CyclocapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code != 1 else 3


if __name__ == "__main__":
    sys.exit(main())
