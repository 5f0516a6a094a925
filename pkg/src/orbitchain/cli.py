"""Command-line entry point.

Exit codes: 0 ok, 1 usage or I/O error, 2 numeric failure, 3 internal
inconsistency (Bessel-bound violation).
"""
import argparse
import json
import logging
from pathlib import Path
import sys

from . import __version__
from .errors import InconsistencyError, InvalidInputError, NumericalFailure
from .scenarios import (
    OUTPUT_ENV,
    ScenarioConfig,
    bundled_names,
    bundled_scenario,
    default_output_dir,
    emit_plot_data,
    run_batch,
    run_scenario,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INCONSISTENT = 0, 1, 2, 3

logger = logging.getLogger("orbitchain")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_overrides(p):
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--dim", type=int, help="override the ambient dimension")
    p.add_argument("--depth", type=int, help="override the orbit depth")
    p.add_argument("--gs-variant", choices=["classical", "modified"])
    p.add_argument("--reorthogonalize", choices=["on", "off"])
    p.add_argument("--out", type=Path, help=f"output directory (default ${OUTPUT_ENV} or ./orbitchain-runs)")


def build_parser():
    parser = _Parser(prog="orbitchain", description="Run orbit-chain scenarios and write JSON reports.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one scenario (JSON file or bundled name)")
    run.add_argument("config")
    _add_overrides(run)

    batch = sub.add_parser("batch", help="run every *.json scenario in a directory")
    batch.add_argument("directory", type=Path)
    batch.add_argument("--parallelism", type=int, default=1)
    _add_overrides(batch)

    plot = sub.add_parser("plot", help="write per-probe CSV series from a report")
    plot.add_argument("report", type=Path)
    plot.add_argument("--out", type=Path, help="target directory (default: next to the report)")

    sub.add_parser("list", help="list bundled scenarios")
    return parser


def _load_config(ref):
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        return ScenarioConfig.load(path)
    return bundled_scenario(ref)


def _overrides(args):
    reorth = None if args.reorthogonalize is None else args.reorthogonalize == "on"
    return dict(seed=args.seed, dim=args.dim, depth=args.depth,
                gs_variant=args.gs_variant, reorthogonalize=reorth)


def _cmd_run(args):
    config = _load_config(args.config).with_overrides(**_overrides(args))
    report = run_scenario(config)
    path = report.write(args.out or default_output_dir())
    print(f"{config.name}: {report.verdict} -> {path}")
    return EXIT_OK


def _cmd_batch(args):
    if not args.directory.is_dir():
        raise InvalidInputError(f"{args.directory} is not a directory")
    configs = [ScenarioConfig.load(p).with_overrides(**_overrides(args))
               for p in sorted(args.directory.glob("*.json"))]
    reports = run_batch(configs, args.parallelism, args.out or default_output_dir())
    for r in reports:
        print(f"{r.name}: {r.verdict if r.status == 'ok' else r.status}")
    statuses = {r.status for r in reports}
    if "inconsistency" in statuses:
        return EXIT_INCONSISTENT
    if "numeric_failure" in statuses:
        return EXIT_NUMERIC
    if "invalid_input" in statuses:
        return EXIT_USAGE
    return EXIT_OK


def _cmd_plot(args):
    target = args.out or args.report.parent / f"{args.report.stem}_series"
    paths = emit_plot_data(args.report, target)
    print(f"wrote {len(paths)} series to {target}")
    return EXIT_OK


def _cmd_list(args):
    for name in bundled_names():
        print(name)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "batch": _cmd_batch, "plot": _cmd_plot, "list": _cmd_list}[args.command]
    try:
        return handler(args)
    except InconsistencyError as exc:
        logger.error("inconsistency: %s", exc)
        return EXIT_INCONSISTENT
    except NumericalFailure as exc:
        logger.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except InvalidInputError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
