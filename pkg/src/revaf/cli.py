"""Command line: run scenario files, list the catalog, validate models.

Exit codes: 0 all checks pass, 1 a property check failed, 2 a file or
flag could not be parsed, 3 the model itself is invalid.
"""

import argparse
import json
import sys

from . import catalog
from .chain import ChainModel, ModelError, ParseError, validate_model
from .scenario import load_scenario, run_properties, write_reports


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="revaf",
        description="Path-functional checks for reversible Markov models.",
    )
    sub = parser.add_subparsers(dest="command")

    run_p = sub.add_parser("run", help="run one scenario file and write reports")
    run_p.add_argument("scenario", help="scenario file (YAML)")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run_p.add_argument("--paths", type=int, default=None, help="override the path count")
    run_p.add_argument("--horizon", type=float, default=None, help="override the path horizon")
    run_p.add_argument("--out", default=".", help="directory for report.csv / report.json")
    run_p.add_argument("--workers", type=int, default=None, help="worker threads for path batches")

    cat_p = sub.add_parser("catalog", help="list shipped models and functions")
    cat_p.add_argument("--json", action="store_true", dest="as_json")

    val_p = sub.add_parser("validate", help="check a model file")
    val_p.add_argument("model_file")
    return parser


def _cmd_run(args):
    try:
        scn = load_scenario(args.scenario)
        if args.seed is not None:
            scn.seed = int(args.seed)
        if args.paths is not None:
            if args.paths <= 0:
                raise ParseError("paths must be positive")
            scn.paths = int(args.paths)
        if args.horizon is not None:
            scn.horizon = float(args.horizon)
            if scn.t > scn.horizon:
                raise ParseError("t exceeds the path horizon")
        if args.workers is not None:
            scn.workers = max(1, int(args.workers))
        rows = run_properties(scn)
    except ParseError as e:
        print("parse error: %s" % (e,), file=sys.stderr)
        return 2
    except ModelError as e:
        print("invalid model: %s" % (e,), file=sys.stderr)
        return 3
    csv_path, json_path = write_reports(scn, rows, args.out)
    for row in rows:
        print(
            "%-16s %-5s max=%.3g mean=%.3g"
            % (
                row["property"],
                "ok" if row["pass"] else "FAIL",
                row["max_residual"],
                row["mean_residual"],
            )
        )
    print("wrote %s and %s" % (csv_path, json_path))
    return 0 if all(row["pass"] for row in rows) else 1


def _cmd_catalog(args):
    listing = catalog.list_catalog()
    if args.as_json:
        print(json.dumps(listing, sort_keys=True, indent=2))
    else:
        for section in sorted(listing):
            print("%s:" % section)
            for name in listing[section]:
                print("  %s" % name)
    return 0


def _cmd_validate(args):
    try:
        model = ChainModel.from_file(args.model_file)
    except ParseError as e:
        print("parse error: %s" % (e,), file=sys.stderr)
        return 2
    except ModelError as e:
        print("invalid model: %s" % (e,), file=sys.stderr)
        return 3
    problems = validate_model(model)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 3
    print("%s: ok (%d states)" % (model.name or args.model_file, len(model.states)))
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "catalog":
        return _cmd_catalog(args)
    if args.command == "validate":
        return _cmd_validate(args)
    parser.print_help()
    return 2


if __name__ == "__main__":
    sys.exit(main())
