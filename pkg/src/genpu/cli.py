"""Command-line entry point.

Subcommands:
  run <config>                      run an experiment from a JSON config or preset name
  oracle verify [--trials N]       randomized verification of the theory oracles
  generate <checkpoint> --class p  sample one generator into a CSV
  eval <checkpoint> <test-csv>     train the downstream classifier and score it

Exit codes: 0 success, 2 config/usage error, 3 training divergence,
4 verification failure.
"""

from __future__ import annotations

import argparse
import sys

from .autodiff import DivergenceError
from .baselines import evaluate, train_pn_on_generated
from .checkpoint import load_checkpoint
from .config import ConfigError, list_presets, load_config
from .core import generate
from .datagen import load_csv
from .experiment import run_experiment
from .verify import run_verification

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_VERIFY = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genpu", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file or preset name")
    run_p.add_argument("config", help=f"JSON config path or preset ({', '.join(list_presets()) or 'none bundled'})")
    run_p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. --set genpu.iterations=100")
    run_p.add_argument("--out", default=None, help="output directory (default: config output_dir)")

    oracle_p = sub.add_parser("oracle", help="theory oracle utilities")
    oracle_sub = oracle_p.add_subparsers(dest="oracle_command", required=True)
    verify_p = oracle_sub.add_parser("verify", help="verify closed forms and objective identities on random specs")
    verify_p.add_argument("--trials", type=int, default=1000)
    verify_p.add_argument("--seed", type=int, default=0)
    verify_p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    gen_p = sub.add_parser("generate", help="sample a trained generator into a CSV")
    gen_p.add_argument("checkpoint")
    gen_p.add_argument("--class", dest="which", choices=("p", "n"), required=True, help="which generator to sample")
    gen_p.add_argument("-n", type=int, default=500, help="number of samples")
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("-o", "--output", default=None, help="output CSV (default: stdout)")

    eval_p = sub.add_parser("eval", help="train the downstream classifier from a checkpoint and score it")
    eval_p.add_argument("checkpoint")
    eval_p.add_argument("test_csv", help="labeled CSV with header x0,...,label")
    eval_p.add_argument("--samples-per-class", type=int, default=2000)
    eval_p.add_argument("--epochs", type=int, default=20)
    eval_p.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config, args.overrides)
    summary = run_experiment(config, out_dir=args.out)
    for method, acc in summary["accuracy"].items():
        print(f"{method:>10s} accuracy: {acc:.4f}")
    print(f"artifacts written for '{summary['name']}' ({summary['runtime_seconds']}s)")
    return EXIT_OK


def _cmd_oracle_verify(args) -> int:
    report = run_verification(trials=args.trials, seed=args.seed, inject_fault=args.inject_fault)
    for line in report.lines():
        print(line)
    if not report.ok:
        print("oracle verification FAILED", file=sys.stderr)
        return EXIT_VERIFY
    print("oracle verification passed")
    return EXIT_OK


def _cmd_generate(args) -> int:
    state, _cfg = load_checkpoint(args.checkpoint)
    which = "positive" if args.which == "p" else "negative"
    points = generate(state, which, args.n, seed=args.seed).data
    lines = [",".join(f"x{i}" for i in range(points.shape[1]))]
    lines += [",".join(f"{v:.17g}" for v in row) for row in points]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="ascii") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_eval(args) -> int:
    state, _cfg = load_checkpoint(args.checkpoint)
    test = load_csv(args.test_csv)
    clf = train_pn_on_generated(state, args.samples_per_class, epochs=args.epochs, seed=args.seed)
    acc = evaluate(clf, test)
    print(f"accuracy: {acc:.4f} on {test.n} points")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "oracle":
            return _cmd_oracle_verify(args)
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "eval":
            return _cmd_eval(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
