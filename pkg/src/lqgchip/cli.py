"""``lqgchip`` command line.

Subcommands: ``vertex``, ``run``, ``scan``, ``report``.

Exit codes:
    0  success
    1  other package error (domain, dimension, planning, ...)
    2  configuration error (bad config file, unknown setup, bad flag)
    3  I/O error (unwritable output, unreadable file)
    4  numerical invariant failure (non-unitary matrix, gate not normalized)
    5  missing upstream artifact (e.g. ``scan --source reconstructed`` before ``run``)
"""

from __future__ import annotations

import argparse
import sys

from . import __version__, pipeline
from .errors import (
    ConfigError,
    DependencyError,
    InvariantError,
    LqgChipError,
    NormalizationError,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INVARIANT = 4
EXIT_DEPENDENCY = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lqgchip", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    common.add_argument("--out", metavar="DIR", help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("vertex", parents=[common], help="write tensor, gate, unitary and mesh files")
    sub.add_parser("run", parents=[common], help="simulate the experiment and write a report")
    scan = sub.add_parser("scan", parents=[common], help="write amplitude grid files")
    scan.add_argument("--setup", action="append", metavar="NAME",
                      help="ALL_EQUAL or VARY_ONE(a); repeatable; default all six")
    scan.add_argument("--source", choices=("theory", "reconstructed"), default="theory")
    sub.add_parser("report", parents=[common], help="summarize the last run report")
    return parser


def load_config(args) -> pipeline.ExperimentConfig:
    config = (pipeline.ExperimentConfig.from_file(args.config) if args.config
              else pipeline.ExperimentConfig())
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out_dir"] = args.out
    return config.replace(**changes) if changes else config


def dispatch(args) -> None:
    config = load_config(args)
    if args.command == "vertex":
        for path in pipeline.cmd_vertex(config).values():
            print(path)
    elif args.command == "run":
        _, paths = pipeline.cmd_run(config)
        for path in paths.values():
            print(path)
    elif args.command == "scan":
        for path in pipeline.cmd_scan(config, args.setup, args.source).values():
            print(path)
    elif args.command == "report":
        sys.stdout.write(pipeline.cmd_report(config))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        dispatch(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "configuration error", exc)
    except DependencyError as exc:
        return _fail(EXIT_DEPENDENCY, "missing input", exc)
    except (InvariantError, NormalizationError) as exc:
        return _fail(EXIT_INVARIANT, "numerical invariant violated", exc)
    except LqgChipError as exc:
        return _fail(EXIT_ERROR, "error", exc)
    except OSError as exc:
        return _fail(EXIT_IO, "I/O error", exc)
    return EXIT_OK


def _fail(code: int, kind: str, exc: Exception) -> int:
    print(f"lqgchip: {kind}: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
