"""Command line entry point: ``genunif <command> [options]``.

Exit codes: 0 ran, 1 invariant or calibration failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from .core import ConfigError, TesterConfig, derive_seed, make_source
from .gut import amplified_test, gen_uniformity_test
from .instances import CorpusFormatError, standard_corpus, write_corpus

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(None),
                        help="master seed (falls back to $GUT_SEED, then 0)")
    parser.add_argument("--config", type=Path, default=default(None), help="key=value file of TesterConfig fields")
    parser.add_argument("--trials", type=int, default=default(None), help="number of trials")
    parser.add_argument("--out", type=Path, default=default(None), help="write output here instead of stdout")
    parser.add_argument("--jobs", type=int, default=default(None), help="worker processes (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genunif", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_options(p, suppress=True)
        return p

    p = command("test", "run the tester once on one instance")
    p.add_argument("instance", help="instance descriptor, e.g. uniform:1000 or paired_bias:1000,0.4")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--amplified", action="store_true", help="majority over amplification_rounds runs")

    p = command("experiment", "estimate the accept rate on one instance")
    p.add_argument("instance")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--amplified", action="store_true")
    p.add_argument("--summary", action="store_true", help="omit per-trial verdicts")

    p = command("scaling", "mean sample counts over a geometric support grid (CSV)")
    p.add_argument("--grid", required=True, help="comma-separated support sizes")
    eps = p.add_mutually_exclusive_group(required=True)
    eps.add_argument("--epsilon", type=float)
    eps.add_argument("--case3-rule", action="store_true",
                     help="eps = half the lower regime threshold at each grid point")
    p.add_argument("--expect-slope", type=float, help="exit 1 unless the log-log slope is within --tol")
    p.add_argument("--tol", type=float, default=0.15)

    p = command("calibrate", "sweep tester constants against the calibration suite")
    p.add_argument("--axis", action="append", default=[], metavar="KEY=V1,V2,...",
                   help="config values to sweep (repeatable; cartesian product)")

    p = command("oracle-check", "check oracle invariants on a corpus file or directory")
    p.add_argument("corpus", type=Path)

    p = command("gen", "write corpus files")
    p.add_argument("instances", nargs="*", help="instance descriptors (default: the standard corpus)")
    return parser


def _resolve(args) -> tuple[int, TesterConfig]:
    """Seed precedence: --seed, then $GUT_SEED, then the config's rng_seed."""
    cfg = TesterConfig.from_file(args.config) if args.config else TesterConfig()
    seed = args.seed
    if seed is None:
        env = os.environ.get("GUT_SEED", "")
        try:
            seed = int(env) if env else cfg.rng_seed
        except ValueError:
            raise UsageError(f"GUT_SEED must be an integer, got {env!r}") from None
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.jobs is not None and args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return seed, cfg.replace(rng_seed=seed)


def _emit(args, text: str) -> None:
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _cmd_test(args, seed, cfg) -> int:
    dist = harness.parse_instance(args.instance, derive_seed(seed, "instance"))
    if args.amplified:
        v = amplified_test(lambda s: make_source(dist, s), args.epsilon, cfg)
    else:
        v = gen_uniformity_test(make_source(dist, derive_seed(seed, "source")), args.epsilon, cfg)
    out = {"instance": args.instance, "epsilon": args.epsilon, "seed": seed, **v.to_dict()}
    _emit(args, _json(out))
    return EXIT_OK


def _cmd_experiment(args, seed, cfg) -> int:
    spec = harness.ExperimentSpec(args.instance, args.epsilon, args.trials or 100, cfg, seed,
                                  amplified=args.amplified)
    report = harness.run_accept_rate(spec, args.jobs)
    if args.summary:
        report.pop("verdicts")
    _emit(args, _json(report))
    return EXIT_OK


def _cmd_scaling(args, seed, cfg) -> int:
    try:
        grid = [int(float(x)) for x in args.grid.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --grid {args.grid!r}") from None
    rule = harness.case3_epsilon if args.case3_rule else None
    base = harness.ExperimentSpec(f"uniform:{grid[0]}", args.epsilon or 0.5, args.trials or 50, cfg, seed, "scaling")
    result = harness.run_scaling(base, grid, rule, args.jobs)
    _emit(args, harness.scaling_csv(result))
    print(f"slope {result['slope']:.4f}", file=sys.stderr)
    if args.expect_slope is not None and abs(result["slope"] - args.expect_slope) > args.tol:
        return EXIT_FAIL
    return EXIT_OK


def _cmd_calibrate(args, seed, cfg) -> int:
    axes = {}
    for item in args.axis:
        key, sep, values = item.partition("=")
        if not sep or not values:
            raise UsageError(f"--axis expects KEY=V1,V2,..., got {item!r}")
        axes[key.strip()] = [v.strip() for v in values.split(",") if v.strip()]
    grid = harness.config_grid(cfg, axes) if axes else [cfg]
    result = harness.run_calibration(grid, args.trials or 30, seed, jobs=args.jobs)
    _emit(args, _json(result))
    return EXIT_OK if result["best"] is not None else EXIT_FAIL


def _cmd_oracle_check(args, seed, cfg) -> int:
    if not args.corpus.exists():
        raise UsageError(f"no such corpus: {args.corpus}")
    result = harness.run_oracle_check(args.corpus)
    for w in result["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    _emit(args, _json(result))
    return EXIT_OK if result["passed"] else EXIT_FAIL


def _cmd_gen(args, seed, cfg) -> int:
    if args.instances:
        members = [(d, harness.parse_instance(d, derive_seed(seed, "instance"))) for d in args.instances]
    else:
        members = standard_corpus(seed)
    if args.out:
        write_corpus(args.out, members)
    else:
        for name, dist in members:
            sys.stdout.write(f"# {name}\n")
            sys.stdout.writelines(f"{lab}\t{m!r}\n" for lab, m in zip(dist.labels.tolist(), dist.masses.tolist()))
    return EXIT_OK


COMMANDS = {
    "test": _cmd_test,
    "experiment": _cmd_experiment,
    "scaling": _cmd_scaling,
    "calibrate": _cmd_calibrate,
    "oracle-check": _cmd_oracle_check,
    "gen": _cmd_gen,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad usage
    try:
        seed, cfg = _resolve(args)
        return COMMANDS[args.command](args, seed, cfg)
    except (UsageError, ConfigError, CorpusFormatError, ValueError, FileNotFoundError) as exc:
        print(f"genunif {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
