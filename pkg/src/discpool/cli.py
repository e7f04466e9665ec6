"""``discpool`` command line: fit, apply, eval and heatmap.

Exit codes: 0 ok, 1 usage error, 2 malformed input, 3 shape/scale or index
mismatch, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .exceptions import (
    DimensionMismatchError,
    EmptyClassError,
    MalformedFileError,
    OutOfRangeError,
    ShapeMismatchError,
)
from .metrics import operator_separability
from .pooling import FitConfig, apply_dataset, average_pooling_operator, fit

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MALFORMED = 2
EXIT_MISMATCH = 3
EXIT_NUMERICAL = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="discpool", description="Learned spatially-varying linear pooling")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("fit", help="learn a pooling operator from a dataset file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--scale", type=float, required=True)
    p.add_argument("--norm", choices=["l1", "l2"], default="l2")
    p.add_argument("--eigvecs", type=int, choices=[1, 2], default=1)
    p.add_argument("--ridge", type=float, default=None)
    p.add_argument("--max-per-class", type=_positive_int, default=None)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--grand-mean", choices=["algo", "weighted"], default="algo")
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("apply", help="pool every sample of a dataset file")
    p.add_argument("--input", required=True)
    p.add_argument("--operator", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(handler=_cmd_apply)

    p = sub.add_parser("eval", help="report class separability after pooling")
    p.add_argument("--input", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--operator")
    src.add_argument("--baseline", choices=["average"])
    p.add_argument("--scale", type=float)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("heatmap", help="export one operator row as CSV or PGM")
    p.add_argument("--operator", required=True)
    p.add_argument("--location", type=int, required=True)
    p.add_argument("--eigvec", type=int, default=1)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=["csv", "pgm"], default="csv")
    p.set_defaults(handler=_cmd_heatmap)
    return parser


def _cmd_fit(args) -> int:
    data = io.read_dataset(args.input)
    try:
        cfg = FitConfig(
            alpha=args.alpha,
            scale=args.scale,
            norm=args.norm,
            num_eigvecs=args.eigvecs,
            ridge=args.ridge,
            max_per_class=args.max_per_class,
            epsilon=args.epsilon,
            grand_mean="algorithm" if args.grand_mean == "algo" else "weighted",
        )
    except ValueError as exc:
        raise _UsageError(str(exc))
    op = fit(data, cfg)
    io.write_operator(args.output, op)

    print(f"input_shape={op.input_shape.rows}x{op.input_shape.cols}")
    print(f"output_shape={op.output_shape.rows}x{op.output_shape.cols}")
    print(f"locations={op.n_outputs}")
    print(f"eigvecs={op.num_eigvecs}")
    print(f"alpha={op.config.alpha!r}")
    print(f"ridge={op.config.ridge!r}")
    print(f"norm={op.config.norm}")
    print(f"grand_mean={cfg.grand_mean}")
    for r in range(op.num_eigvecs):
        for m in range(op.n_outputs):
            print(
                f"location={m + 1} eigvec={r + 1} "
                f"eigenvalue={float(op.eigenvalues[r, m])!r} "
                f"residual={float(op.residuals[r, m])!r}"
            )
    print(f"max_residual={float(np.max(op.residuals))!r}")
    return EXIT_OK


def _cmd_apply(args) -> int:
    data = io.read_dataset(args.input)
    op = io.read_operator(args.operator)
    io.write_dataset(args.output, apply_dataset(op, data))
    return EXIT_OK


def _cmd_eval(args) -> int:
    data = io.read_dataset(args.input)
    if args.operator is not None:
        op = io.read_operator(args.operator)
        if op.input_shape != data.shape:
            raise ShapeMismatchError(
                f"operator expects {op.input_shape.rows}x{op.input_shape.cols} input, "
                f"got {data.shape.rows}x{data.shape.cols}"
            )
    else:
        if args.scale is None:
            raise _UsageError("--baseline average requires --scale")
        op = average_pooling_operator(data.shape, args.scale, data.channels)
    for line in operator_separability(op, data).lines():
        print(line)
    return EXIT_OK


def _cmd_heatmap(args) -> int:
    op = io.read_operator(args.operator)
    io.write_heatmap(args.output, op, args.location, args.eigvec, args.format)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.handler(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (MalformedFileError, EmptyClassError, OSError) as exc:
        print(f"discpool: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (ShapeMismatchError, OutOfRangeError, DimensionMismatchError) as exc:
        print(f"discpool: mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except np.linalg.LinAlgError as exc:
        print(f"discpool: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
