"""Command line entry point.

Subcommands:

* ``run``: execute a spec file (by path, or a bundled name from
  ``list-experiments``) and write the result CSV.
* ``list-experiments``: show the bundled spec files.
* ``verify``: run the fast self-check suite.

Exit codes: 0 on success, 1 on failed self-checks, 2 for semantically invalid
specs, 3 for unparseable spec files.
"""

import argparse
import os
import sys
from dataclasses import replace
from importlib import resources

from ..errors import ConfigError, ParseError, StcsimError
from .experiments import run_experiment
from .specfile import load_spec, parse_spec_text
from .table import emit_csv


def _bundled_specs():
    root = resources.files("stcsim.experiments")
    return sorted((p.name, p) for p in root.iterdir() if p.name.endswith(".spec"))


def _resolve_spec(name):
    if os.path.exists(name):
        return load_spec(name), os.path.basename(name)
    for fname, res in _bundled_specs():
        if fname == name or fname == name + ".spec":
            return parse_spec_text(res.read_text()), fname
    raise ConfigError(
        f"no spec file at {name!r} and no bundled experiment with that name "
        "(see `stcsim list-experiments`)"
    )


def _cmd_run(args):
    spec, fname = _resolve_spec(args.spec)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        spec = replace(spec, **overrides)
    out = args.out or spec.out or fname.replace(".spec", "") + ".csv"
    table = run_experiment(spec, workers=args.threads)
    emit_csv(table, out)
    print(f"{fname}: {len(table.rows)} rows, {len(table.metrics())} metrics -> {out}")
    return 0


def _cmd_list():
    names = _bundled_specs()
    if not names:
        print("no bundled experiments")
        return 0
    for fname, res in names:
        kind = trials = "?"
        for line in res.read_text().splitlines():
            bare = line.split("#", 1)[0]
            if "=" in bare:
                key, _, value = bare.partition("=")
                if key.strip() == "kind":
                    kind = value.strip()
                elif key.strip() == "trials":
                    trials = value.strip()
        print(f"{fname:<36} {kind:<14} trials={trials}")
    return 0


def _cmd_verify():
    from . import verify

    failures = verify.run_checks()
    if failures:
        print(f"{failures} check(s) failed")
        return 1
    print("all checks passed")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="stcsim",
        description="Rate and error-rate experiments for stacked space-time codes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment spec and write its CSV")
    run_p.add_argument("spec", help="path to a .spec file, or a bundled spec name")
    run_p.add_argument("--out", help="output CSV path (default: from the spec)")
    run_p.add_argument("--seed", type=int, help="override the spec seed")
    run_p.add_argument("--trials", type=int, help="override the spec trial count")
    run_p.add_argument("--threads", type=int, default=None,
                       help="worker threads for the Monte Carlo loops")

    sub.add_parser("list-experiments", help="list bundled experiment specs")
    sub.add_parser("verify", help="run the fast self-check suite")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list-experiments":
            return _cmd_list()
        return _cmd_verify()
    except ParseError as exc:
        print(f"spec parse error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except StcsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
