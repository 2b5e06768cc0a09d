"""Command line entry point: ``ubo run`` and ``ubo eval``."""

import argparse
import logging
import sys

import numpy as np

from . import harness
from .benchfns import get_function, robustness_eval
from .unscented import InputNoise


def _parse_point(text):
    return np.array([float(v) for v in text.replace(",", " ").split()], dtype=float)


def _run(args):
    overrides = {
        "function": args.function,
        "output_dir": args.output_dir,
        "runs": args.runs,
        "base_seed": args.seed,
        "threads": args.threads,
        "modes": ",".join(args.mode) if args.mode else None,
    }
    cfg = harness.load_config(args.config, overrides)
    result = harness.run_experiment(cfg)
    print(f"wrote results to {cfg.output_dir}")
    print(f"{'mode':<14}{'mean y_mc':>14}{'worst y_mc':>14}{'std y_mc':>14}")
    for s in result.summary:
        print(f"{s['mode']:<14}{s['mean_outcome']:>14.4f}{s['worst_outcome']:>14.4f}{s['std_outcome']:>14.4f}")
    for a in result.accounting:
        ok = (a["objective_evaluations"] == a["expected_objective_evaluations"]
              and a["probe_evaluations"] == a["expected_probe_evaluations"])
        print(f"{a['mode']}: {a['objective_evaluations']} objective evaluations, "
              f"{a['probe_evaluations']} robustness probes ({'ok' if ok else 'MISMATCH'})")
        if not ok:
            return 1
    return 0


def _eval(args):
    f = get_function(args.function)
    x = _parse_point(args.point)
    if x.size != f.dim:
        raise ValueError(f"{args.function} expects a {f.dim}-dimensional point, got {x.size}")
    if not np.all((x >= 0) & (x <= 1)):
        raise ValueError(f"point {args.point} lies outside [0, 1]^{f.dim}")
    s = robustness_eval(f, x, InputNoise(args.sigma_x), args.probes, np.random.default_rng(args.seed))
    print(f"mean_outcome={s.mean_outcome:.17g}")
    print(f"std_outcome={s.std_outcome:.17g}")
    print(f"worst_outcome={s.worst_outcome:.17g}")
    print(f"num_probes={s.num_probes}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="ubo", description="Unscented Bayesian optimization benchmarks")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-run progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a BO vs UBO experiment and write CSV results")
    run.add_argument("--config", help="JSON or key=value config file")
    run.add_argument("--function", help="rkhs, gm or a Gaussian-mixture fixture file")
    run.add_argument("--output-dir")
    run.add_argument("--runs", type=int)
    run.add_argument("--seed", type=int, help="base seed; run i uses seed + i")
    run.add_argument("--mode", action="append", choices=["classical_bo", "unscented_bo"],
                     help="repeat to select several modes (default: both)")
    run.add_argument("--threads", type=int, help="worker processes (default: CPU count)")
    run.set_defaults(handler=_run)

    ev = sub.add_parser("eval", help="Monte Carlo robustness of one point under input noise")
    ev.add_argument("--function", required=True)
    ev.add_argument("--point", required=True, help="comma-separated coordinates in [0, 1]")
    ev.add_argument("--sigma-x", type=float, required=True)
    ev.add_argument("--probes", type=int, default=100)
    ev.add_argument("--seed", type=int, default=0)
    ev.set_defaults(handler=_eval)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except (ValueError, OSError) as e:
        print(f"ubo: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
