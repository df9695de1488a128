"""Command-line entry point: ``heavybrw run|kappa|sample <config.json>``.

Exit codes: 0 all checks pass, 1 a tolerance check failed, 2 invalid config.
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..gw import PopulationCapError
from .config import ConfigError, ExperimentConfig
from .experiments import compute_kappa, run_experiment, sample_limit, write_outcome

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heavybrw", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run the experiment named in the config"),
                       ("kappa", "evaluate kappa for the config's model"),
                       ("sample", "draw limit-process samples for the config's model")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="path to a JSON config")
        p.add_argument("--seed", type=int)
        p.add_argument("--reps", type=int)
        p.add_argument("--out-dir", dest="out_dir")
        p.add_argument("--threads", type=int)
        if name == "sample":
            p.add_argument("--dump-points", dest="dump_points", type=int,
                           help="write points_<rep>.csv for the first k draws")
            p.add_argument("--threshold", type=float, help="smallest |x| kept (default: min x_grid)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ExperimentConfig.load(args.config)
        over = {k: getattr(args, k, None) for k in ("seed", "reps", "out_dir", "threads", "dump_points")}
        if args.command == "kappa":
            over["experiment"] = "compute_kappa"
        cfg = cfg.override(**over)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "run":
            outcome = run_experiment(cfg)
        elif args.command == "kappa":
            outcome = compute_kappa(cfg)
        else:
            if cfg.model is None:
                print("config error: 'sample' requires field 'model'", file=sys.stderr)
                return EXIT_CONFIG
            outcome = sample_limit(cfg, args.threshold)
    except (ValueError, PopulationCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = write_outcome(outcome, cfg, cfg.out_dir)
    status = "PASS" if outcome.report.passed else "FAIL"
    print(f"{cfg.experiment if args.command != 'sample' else 'sample'}: {status} "
          f"(max |z| = {outcome.report.max_abs_z:.3g}) -> {out}")
    return EXIT_OK if outcome.report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
