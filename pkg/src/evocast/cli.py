"""Command line entry point: run experiments, generate data, apply models.

Exit codes: 0 success, 2 configuration errors, 3 data errors, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .data import DataError
from .experiment import (ConfigError, generate_synthetic, load_config,
                         predict_file, run_experiment)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evocast",
        description="Evolutionary selective-ensemble time-series prediction")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True, help="key = value config file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's master seed")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="parallel search workers (default 1)")
    p_run.set_defaults(func=cmd_run)

    p_synth = sub.add_parser("synth", help="write a synthetic dataset CSV")
    p_synth.add_argument("--length", type=int, required=True)
    p_synth.add_argument("--channels", type=int, required=True,
                         help="number of auxiliary channels")
    p_synth.add_argument("--noise", type=float, required=True)
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--period", type=int, default=50)
    p_synth.add_argument("--coupling", type=float, default=0.2)
    p_synth.set_defaults(func=cmd_synth)

    p_pred = sub.add_parser("predict", help="apply a serialized ensemble model")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--out", required=True)
    p_pred.set_defaults(func=cmd_predict)
    return parser


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    report = run_experiment(config, args.out, jobs=args.jobs)
    errors = sum(1 for row in report.rows if row.get("status") != "ok")
    print(f"wrote {len(report.rows)} report rows to {args.out}/report.csv"
          f" ({errors} failed)")
    return 0 if errors == 0 else 1


def cmd_synth(args) -> int:
    path = generate_synthetic(args.out, length=args.length, n_aux=args.channels,
                              noise=args.noise, seed=args.seed,
                              period=args.period, coupling=args.coupling)
    print(f"wrote {path}")
    return 0


def cmd_predict(args) -> int:
    path = predict_file(args.model, args.data, args.out)
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
