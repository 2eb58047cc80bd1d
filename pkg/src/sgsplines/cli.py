"""Command-line entry point for the study runner.

Subcommands: ``study run <config> [--set k=v]... [--out path]``,
``study list-kinds``, ``study gen-config <kind>``.  Exit status is 0 when
every row passes, 1 when any check fails, and 2 for usage or config errors.
Parallelism across independent rows is capped by the STUDY_THREADS
environment variable.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .studies import (
    KINDS,
    ConfigError,
    default_config,
    parse_config,
    run_study,
)

_TEMPLATE_NOTES = {
    "univariate-convergence": "L2 projection error vs the univariate bound",
    "sparse-convergence": "sparse-grid L2 error vs the log-corrected bound",
    "mapped-convergence": "pullback L2 error rate on a geometry map",
    "equivalence": "combination vs hierarchical span equality",
    "identities": "exact combinatorial identities of the level sets",
    "inverse-inequality": "Rayleigh-quotient pencils vs inverse-inequality bounds",
    "dimensions": "sparse and full dimension counts",
}


def _gen_config(kind):
    cfg = default_config(kind)
    lines = [f"# {kind}: {_TEMPLATE_NOTES[kind]}", f"kind={kind}"]

    def fmt(vals):
        vals = tuple(vals)
        if len(vals) > 2 and vals == tuple(range(vals[0], vals[-1] + 1)):
            return f"{vals[0]}..{vals[-1]}"
        return ",".join(str(v) for v in vals)

    if kind == "identities":
        lines += [f"p={fmt(cfg.p)}", f"d_max={cfg.d_max}", f"n_max={cfg.n_max}"]
    else:
        lines += [f"d={cfg.d}", f"p={fmt(cfg.p)}", f"n={fmt(cfg.n)}"]
    if cfg.target:
        lines.append(f"target={cfg.target}")
    if cfg.geometry:
        lines.append(f"geometry={cfg.geometry}  # builtin name or file path")
    if kind == "inverse-inequality":
        lines += [f"q={fmt(cfg.q)}", f"variant={cfg.variant}"
                  + "  # univariate | sparse | mapped"]
    if kind == "mapped-convergence":
        lines.append(f"min_order={cfg.min_order}")
    if kind == "dimensions":
        lines.append(f"rank_max={cfg.rank_max}")
    lines += [f"seed={cfg.seed}", "timing=off  # 'on' records wall time per row",
              "# out=report.csv"]
    return "\n".join(lines) + "\n"


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="study", description="Run sparse-grid spline verification studies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a study from a config file")
    p_run.add_argument("config", help="path to a key=value config file")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")
    p_run.add_argument("--out", default=None, help="CSV output path")

    sub.add_parser("list-kinds", help="list available study kinds")

    p_gen = sub.add_parser("gen-config", help="print a template config")
    p_gen.add_argument("kind", choices=KINDS)

    args = parser.parse_args(argv)

    if args.command == "list-kinds":
        for kind in KINDS:
            print(f"{kind:24s} {_TEMPLATE_NOTES[kind]}")
        return 0

    if args.command == "gen-config":
        sys.stdout.write(_gen_config(args.kind))
        return 0

    try:
        cfg = parse_config(args.config, args.overrides)
        if args.out:
            cfg = replace(cfg, out=args.out)
        report = run_study(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for line in report.summary_lines():
        print(line)
    if cfg.out:
        print(f"wrote {cfg.out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
