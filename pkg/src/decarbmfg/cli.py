"""Command-line interface.

Subcommands:

- ``run --config <path> [--out <dir>] [--threads <k>] [--seed <u64>]``
- ``reproduce-table --config <path> [--out <dir>] [--threads <k>] [--seed <u64>]``
- ``oracle --config <path> --n {1,2} [--out <dir>] [--level <G>]``

Exit codes: 0 success, 2 invalid configuration (with a field-path
diagnostic), 3 numerical or resource failure (with iteration context).
Thread limits are applied to the BLAS environment before the numerical
modules are imported; results are bitwise independent of the thread count
by construction.
"""

from __future__ import annotations

import argparse
import os
import sys

__all__ = ["main", "console"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decarbmfg",
        description="Equilibrium SDF solver for a decarbonizing mean-field market",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides config out_dir)")
        p.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP thread limit")
        p.add_argument("--seed", type=int, default=None, help="base seed (overrides config seed)")

    add_common(sub.add_parser("run", help="single run or parameter sweep with full artifacts"))
    add_common(sub.add_parser("reproduce-table", help="evaluate the 9 price-sensitivity rows"))
    oracle_p = sub.add_parser("oracle", help="quadrature reference solve (n <= 2)")
    add_common(oracle_p)
    oracle_p.add_argument("--n", type=int, choices=(1, 2), required=True,
                          help="number of time steps for the quadrature grid")
    oracle_p.add_argument("--level", type=int, default=32, help="quadrature nodes per dimension")
    return parser


def _apply_thread_env(threads):
    if threads is None:
        return
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_thread_env(args.threads)

    # numerical imports happen after the thread environment is pinned
    import dataclasses

    from . import runner
    from .config import load_config
    from .errors import ConfigError, NumericalError, ParameterError, ResourceError, UsageError

    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, out_dir=args.out)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, params=cfg.params.replace(seed=args.seed))
        if args.command == "run":
            runner.run(cfg)
        elif args.command == "reproduce-table":
            runner.reproduce_table(cfg)
        else:
            runner.run_oracle(cfg, n=args.n, level=args.level)
    except (ConfigError, ParameterError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (NumericalError, ResourceError, UsageError) as err:
        context = ""
        if getattr(err, "iteration", None) is not None:
            context = f" (iteration {err.iteration})"
        print(f"numerical error: {err}{context}", file=sys.stderr)
        return 3
    return 0


def console():
    sys.exit(main())


if __name__ == "__main__":
    console()
