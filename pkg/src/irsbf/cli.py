"""Command-line entry point: ``irsbf {run,sweep,convergence,selftest}``."""
import argparse
import logging
import sys

from . import harness
from .config import SystemConfig, load_config
from .errors import ConfigError

EXIT_CONFIG, EXIT_IO, EXIT_FAILED = 2, 3, 4


def _parse_values(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok == "continuous":
            out.append(tok)
        else:
            x = float(tok)
            out.append(int(x) if x.is_integer() else x)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irsbf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="JSON scenario file (defaults if omitted)")
        p.add_argument("--seed", type=int, help="base seed; trial i uses seed + i")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials per point")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        if out:
            p.add_argument("--out", required=True, help="output CSV path")

    common(sub.add_parser("run", help="evaluate one scenario"))
    sw = sub.add_parser("sweep", help="sweep one scenario parameter")
    common(sw)
    sw.add_argument("--param", required=True, choices=harness.SWEEP_PARAMS)
    sw.add_argument("--values", required=True, type=_parse_values,
                    help="comma-separated values, e.g. 1,2,3 or continuous,1,2")
    cv = sub.add_parser("convergence", help="average sum-rate per iteration")
    common(cv)
    st = sub.add_parser("selftest", help="run the built-in oracle and invariant checks")
    st.add_argument("--seed", type=int, default=0)
    return parser


def _config(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "selftest":
        from .selftest import run_selftest
        return 0 if run_selftest(seed=args.seed) else 1
    try:
        cfg = _config(args)
        if args.command == "run":
            result = harness.SweepResult(harness.run_point(cfg, workers=args.workers))
            harness._check_rows(result.rows)
            harness.emit_csv(result, args.out)
        elif args.command == "sweep":
            harness.emit_csv(harness.run_sweep(cfg, args.param, args.values, args.workers),
                             args.out)
        else:
            harness.emit_convergence_csv(harness.run_convergence(cfg, workers=args.workers),
                                         args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except harness.AllTrialsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    return 0


if __name__ == "__main__":
    sys.exit(main())
