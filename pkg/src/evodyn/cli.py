"""Command line front end: ``evodyn <runner> --config FILE --out DIR``.

Exit codes: 0 success, 2 invalid config or parameters, 3 numerical failure,
4 refusal (e.g. an ergodic study of a share without an invariant law).
"""
from __future__ import annotations

import argparse
import sys

from . import config as cfg
from .errors import (DimensionError, DynamicsUndefinedError, InfeasibleMomentsError,
                     ParameterRangeError, PreconditionError, RefusalError, StepSizeError,
                     UnsupportedFamilyError, ValidationError)
from .runners import RUNNERS

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_REFUSAL = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evodyn", description="Wealth-share dynamics experiments.")
    p.add_argument("runner", choices=sorted(RUNNERS))
    p.add_argument("--config", required=True, help="TOML experiment file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float, dest="T")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        conf = cfg.load(args.config)
        if conf.kind != args.runner:
            raise ValidationError([f"config kind is {conf.kind!r}, runner is {args.runner!r}"])
        conf = conf.with_overrides(seed=args.seed, paths=args.paths, dt=args.dt, T=args.T)
        files = RUNNERS[args.runner](conf, args.out)
    except (ValidationError, DimensionError, ParameterRangeError, InfeasibleMomentsError,
            PreconditionError, UnsupportedFamilyError) as exc:
        print(f"evodyn: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StepSizeError, DynamicsUndefinedError) as exc:
        print(f"evodyn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RefusalError as exc:
        print(f"evodyn: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSAL
    except OSError as exc:
        print(f"evodyn: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
