"""Command line interface.

Subcommands: synth (generate and save an instance), run (one full
transductive or inductive session), table1 (the benchmark grid), equiv
(transductive/inductive agreement sweep), props (invariant suites).

Exit status: 0 on success, 1 on validation failure (including usage
errors), 2 when a property or equivalence suite reports failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .experiments import (
    ExperimentConfig,
    build_cell_instance,
    equivalence_sweep,
    format_table,
    run_single,
    run_table1,
)
from .props import run_property_suite


class _Parser(argparse.ArgumentParser):
    # usage errors are validation failures; argparse would exit 2, which
    # this tool reserves for property-suite failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(ValueError):
    pass


_CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _add_common(sub):
    sub.add_argument("--n", type=int, action="append",
                     help="matrix dimension (repeatable for table1)")
    sub.add_argument("--beta", type=float, action="append",
                     help="side-information noise level (repeatable for table1)")
    sub.add_argument("--p", type=float, help="label flip probability")
    sub.add_argument("--k", type=int, help="row classes")
    sub.add_argument("--l", type=int, help="column classes")
    sub.add_argument("--reps", type=int, help="replicates per cell")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--eta", type=float, help="learning rate override")
    sub.add_argument("--gamma", type=float, help="margin parameter override")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--conservative", action="store_true", default=None,
                     help="mistake-driven updates and deterministic predictions")
    sub.add_argument("--config", help="JSON file with ExperimentConfig fields")


def build_parser() -> _Parser:
    parser = _Parser(prog="megmc",
                     description="online binary matrix completion with side information")
    subs = parser.add_subparsers(dest="command", required=True)

    p_synth = subs.add_parser("synth", help="generate and save a synthetic instance")
    _add_common(p_synth)

    p_run = subs.add_parser("run", help="run one online completion session")
    p_run.add_argument("--mode", choices=("transductive", "inductive"),
                       default="transductive")
    _add_common(p_run)

    p_table = subs.add_parser("table1", help="run the benchmark grid")
    _add_common(p_table)
    p_table.add_argument("--jobs", type=int, help="worker processes")
    p_table.add_argument("--big-n", action="store_true", default=None,
                         help="allow grid dimensions above 100")

    p_eq = subs.add_parser("equiv", help="transductive/inductive agreement sweep")
    p_eq.add_argument("--instances", type=int, default=50)
    p_eq.add_argument("--seed", type=int, default=0)
    p_eq.add_argument("--tol", type=float, default=1e-6)

    p_props = subs.add_parser("props", help="run the invariant suites")
    p_props.add_argument("--seed", type=int, default=0)
    p_props.add_argument("--self-test", action="store_true",
                         help="also verify the corrupted negative control fails")

    return parser


def _load_config(args, mode: str) -> ExperimentConfig:
    """Merge config file values and CLI flags; CLI flags win."""
    base = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw = json.load(fh)
        unknown = set(raw) - _CONFIG_FIELDS
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        base.update(raw)
    base["mode"] = mode
    overrides = {
        "n_values": args.n, "betas": args.beta, "p": args.p, "k": args.k,
        "l": args.l, "reps": args.reps, "seed": args.seed, "eta": args.eta,
        "gamma": args.gamma, "out": args.out,
        "conservative": args.conservative,
        "jobs": getattr(args, "jobs", None),
        "big_n": getattr(args, "big_n", None),
    }
    base.update({key: val for key, val in overrides.items() if val is not None})
    return ExperimentConfig(**base)


def _cmd_synth(args) -> int:
    config = _load_config(args, "transductive")
    if not config.out:
        raise ValueError("synth requires --out")
    n = config.n_values[0]
    beta = config.betas[0]
    inst, _, _, d_hat, _, _ = build_cell_instance(
        config.seed, n, beta, rep=0, p=config.p, k=config.k, l=config.l)
    inst.meta.update({"seed": config.seed, "p": config.p, "beta": beta,
                      "d_hat": d_hat})
    inst.save(config.out)
    print(f"wrote {n}x{n} instance (k={config.k}, l={config.l}, beta={beta:g}, "
          f"p={config.p:g}, d_hat={d_hat:.2f}) to {config.out}")
    return 0


def _cmd_run(args) -> int:
    config = _load_config(args, args.mode)
    result = run_single(config)
    print(json.dumps(result["summary"], indent=2, sort_keys=True))
    return 0


def _cmd_table1(args) -> int:
    config = _load_config(args, "table1")

    def progress(row):
        print(f"n={row['n']} beta={row['beta']:g} rep={row['rep']}: "
              f"error={row['error']:.4f} ({row['seconds']:.1f}s)",
              file=sys.stderr)

    result = run_table1(config, progress=progress)
    print(format_table(config, result["cells"]), end="")
    if config.out:
        print(f"full results in {Path(config.out)}", file=sys.stderr)
    return 0


def _cmd_equiv(args) -> int:
    report = equivalence_sweep(instances=args.instances, seed=args.seed,
                               tol=args.tol)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["passed"] else 2


def _cmd_props(args) -> int:
    report = run_property_suite(seed=args.seed)
    print(json.dumps(report, indent=2, sort_keys=True))
    if not report["passed"]:
        return 2
    if args.self_test:
        control = run_property_suite(seed=args.seed, corrupt=True)
        if control["passed"]:
            print("self-test failed: corrupted suite did not report failures",
                  file=sys.stderr)
            return 2
        print(f"self-test ok: corrupted suite reports "
              f"{control['total_failures']} failures", file=sys.stderr)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "run": _cmd_run,
    "table1": _cmd_table1,
    "equiv": _cmd_equiv,
    "props": _cmd_props,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
