"""Command-line entry point: ``mixedoracle solve`` and ``mixedoracle bench``.

Exit codes: 0 success, 1 gap target missed, 2 usage or configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import __version__
from .bench import (APPROACHES, Cell, ConfigError, exit_code, load_config,
                    records_to_csv, run_cell, run_experiment, write_csv)
from .core import Mode


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mixedoracle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one problem from a config file")
    s.add_argument("--approach", required=True, choices=sorted(APPROACHES))
    s.add_argument("--config", required=True, help="INI file with a [problem NAME] section")
    s.add_argument("--problem", help="section name when the config holds several problems")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--sigma", type=float, default=0.25)
    s.add_argument("--out", help="CSV file for the single run record (default: stdout)")
    s.add_argument("--no-timing", action="store_true", help="write wall_ms = 0")

    b = sub.add_parser("bench", help="run an experiment grid")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--no-timing", action="store_true", help="write wall_ms = 0")
    return p


def _solve(args) -> int:
    cfg = load_config(args.config)
    specs = cfg.problems
    if args.problem is not None:
        specs = [s for s in specs if s.name == args.problem]
        if not specs:
            raise ConfigError(f"no [problem {args.problem}] section")
    if len(specs) != 1:
        raise ConfigError("config must define exactly one problem, or pass --problem")
    spec = specs[0]
    mode = Mode.MIN_MIN if spec.family == "QuadMinMin" else Mode.MIN_MAX
    if APPROACHES[args.approach] is not mode:
        raise ConfigError(f"approach {args.approach} does not apply to {spec.family}")
    if not args.eps > 0 or not 0 < args.sigma < 1:
        raise ConfigError("need eps > 0 and 0 < sigma < 1")
    cell = Cell(replace(spec, seed=args.seed), args.approach, args.eps, args.sigma, args.seed,
                cfg.inner_sigma, not args.no_timing)
    rec = run_cell(cell)
    if args.out:
        write_csv([rec], args.out)
    else:
        sys.stdout.write(records_to_csv([rec]))
    if rec.error:
        print(f"error: {rec.error}", file=sys.stderr)
    return exit_code([rec])


def _bench(args) -> int:
    cfg = load_config(args.config)
    if args.no_timing:
        cfg.timing = False
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    records, code = run_experiment(cfg, args.out, args.jobs)
    failed = [r for r in records if not r.ok]
    print(f"{len(records)} cells, {len(failed)} missed or failed; wrote {args.out}")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return _solve(args) if args.command == "solve" else _bench(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
