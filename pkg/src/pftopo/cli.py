"""Command line entry point: ``pftopo run <config>``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import PhaseFieldError
from .optimize import run
from .problems import PROBLEM_IDS, builtin_problem


def _parser():
    p = argparse.ArgumentParser(prog="pftopo", description="Phase-field topology optimization.")
    p.add_argument("--list-problems", action="store_true", help="list builtin problems and exit")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run an optimization from a config file")
    r.add_argument("config", nargs="?", help="TOML config file")
    r.add_argument("--output-dir", help="override output.dir")
    r.add_argument("--seed", type=int, help="override problem.seed")
    r.add_argument("--disable-decay-step", action="store_true",
                   help="skip the sigma correction (plain projected steps)")
    r.add_argument("--snapshot-every", type=int, help="override output.snapshot_every")
    r.add_argument("--list-problems", action="store_true", help="list builtin problems and exit")
    r.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    return p


def _list_problems():
    for name in PROBLEM_IDS:
        print(f"{name:18s} {builtin_problem(name).description}")


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.list_problems:
        _list_problems()
        return 0
    if args.command != "run" or args.config is None:
        _parser().print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        changes = {}
        if args.output_dir is not None:
            changes["output_dir"] = args.output_dir
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise PhaseFieldError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
            changes["seed"] = args.seed
        if args.disable_decay_step:
            changes["decay"] = False
        if args.snapshot_every is not None:
            changes["snapshot_every"] = args.snapshot_every
        if changes:
            cfg = cfg.replace(**changes)
        summary = run(cfg)
    except PhaseFieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{summary['status']}: {summary['iterations']} iterations, "
          f"J = {summary['J_final']:.10g}, output in {cfg.output_dir}")
    if summary["message"]:
        print(summary["message"], file=sys.stderr)
    return 0 if summary["status"] != "aborted" else 1


if __name__ == "__main__":
    sys.exit(main())
