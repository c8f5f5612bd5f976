"""Command-line interface: benchmark runs, standalone resampling, clover generation."""

import argparse
import logging
import sys

from . import __version__, bench
from .data import generate_clover, load_csv, save_csv
from .samplers import KINDS, SamplerSpec, resample

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; runtime failures exit 2 (see main)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rebalance", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[], help="run a benchmark config (JSON)")
    run.add_argument("--config", required=True, help="path to the JSON experiment config")
    run.add_argument("--workers", type=int, default=None,
                     help=f"worker processes (default: ${bench.WORKERS_ENV_VAR} or all cores)")

    res = sub.add_parser("resample", help="rebalance a CSV dataset and write the result")
    res.add_argument("--input", required=True, help="input CSV path")
    res.add_argument("--output", required=True, help="output CSV path")
    res.add_argument("--sampler", required=True, choices=[k for k in KINDS if k != "none"])
    res.add_argument("--label-column", default=-1,
                     help="label column name, or index for headerless files (default: last)")
    res.add_argument("--positive-label", default=None,
                     help="class treated as minority when class sizes tie")
    res.add_argument("--k", type=int, default=5, help="neighbor count")
    res.add_argument("--r", type=int, default=10, help="interpolation subdivisions")
    res.add_argument("--eta", type=float, default=0.1, help="cluster-count fraction")
    res.add_argument("--pt", type=float, default=0.5, help="posterior probability threshold")
    res.add_argument("--wt", type=float, default=0.5, help="cluster weight threshold")
    res.add_argument("--seed", type=int, default=0)

    gen = sub.add_parser("gen-clover", help="generate the synthetic 2-D clover dataset")
    gen.add_argument("--majority", type=int, required=True)
    gen.add_argument("--minority", type=int, required=True)
    gen.add_argument("--disturbance", type=int, default=0, help="percent of minority points relocated to petal borders")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", required=True, help="output CSV path")

    return parser


def _parse_label_column(raw):
    try:
        return int(raw)
    except (TypeError, ValueError):
        return raw


def _cmd_run(args) -> int:
    config = bench.load_config(args.config)
    report = bench.run(config, workers=args.workers)
    bench.emit(report, config.output_format, config.output_path)
    print(f"wrote {config.output_format} report to {config.output_path}")
    return 0


def _cmd_resample(args) -> int:
    dataset = load_csv(args.input, _parse_label_column(args.label_column),
                       positive_label=args.positive_label)
    spec = SamplerSpec(kind=args.sampler, K=args.k, r=args.r, eta=args.eta,
                       p_t=args.pt, w_t=args.wt, seed=args.seed)
    balanced = resample(dataset, spec)
    save_csv(balanced, args.output)
    print(f"wrote {balanced.n_samples} rows ({balanced.minority_count} per class) to {args.output}")
    return 0


def _cmd_gen_clover(args) -> int:
    dataset = generate_clover(args.majority, args.minority, args.disturbance, args.seed)
    save_csv(dataset, args.output)
    print(f"wrote {dataset.n_samples} rows to {args.output}")
    return 0


_COMMANDS = {"run": _cmd_run, "resample": _cmd_resample, "gen-clover": _cmd_gen_clover}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:
        logger.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
