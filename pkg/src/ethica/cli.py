"""``ethica`` command line.

Exit status: 0 success, 1 domain or validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, pipeline
from .errors import EthicaError
from .provenance import RunLog, explain
from .tree import combine, load_tree, parse_context, parse_requirement

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2


def _csv_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cdt", required=True, help="context dimension tree file")
    p.add_argument("--data", required=True, help="directory holding the CSV files")
    p.add_argument("--manifest", required=True, help="table manifest")
    p.add_argument("--views", required=True, help="view registry")
    p.add_argument("--context", default="", help='e.g. "action=promotion; role=clerk"')
    p.add_argument("--affected", type=_csv_list, default=[],
                   help="affected attribute(s), comma separated")
    p.add_argument("--params", help="JSON parameters file (flags take precedence)")
    p.add_argument("--disparity-threshold", dest="disparity_threshold")
    p.add_argument("--assoc-threshold", dest="assoc_threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ethica", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check CDT/ERT files")
    p.add_argument("--cdt")
    p.add_argument("--ert")

    p = sub.add_parser("resolve", help="resolve a context (and ethical requirement)")
    p.add_argument("--cdt", required=True)
    p.add_argument("--context", default="")
    p.add_argument("--ert")
    p.add_argument("--facet")
    p.add_argument("--affected", type=_csv_list, default=[])

    p = sub.add_parser("analyze", help="group-disparity report for a contextual view")
    _add_inputs(p)

    p = sub.add_parser("transform", help="produce an Ethical View")
    _add_inputs(p)
    p.add_argument("--ert", required=True)
    p.add_argument("--facet", required=True, help="e.g. fairness/equity")
    p.add_argument("--rules", help="rule table (default: built-in rules)")
    p.add_argument("--out", help="Ethical View CSV (default: standard output)")
    p.add_argument("--log", help="provenance JSON-Lines log to append to")
    p.add_argument("--pmin")
    p.add_argument("--disadvantaged")
    p.add_argument("--score")
    p.add_argument("--target")
    p.add_argument("--reference")
    p.add_argument("--ratio", choices=pipeline.RATIO_MODES)
    p.add_argument("--weights", help="column=value:weight[,...]")
    p.add_argument("--materialize", action="store_true", default=None,
                   help="replicate rows by weight instead of emitting __weight")
    p.add_argument("--class-column", dest="class_column")
    p.add_argument("--ranker", choices=("score", "naive_bayes"))
    p.add_argument("-k", "--k", type=int)
    p.add_argument("-n", "--n", type=int)
    p.add_argument("--shares", help="facet=percent[,...] in priority order")

    p = sub.add_parser("explain", help="render a provenance record as text")
    p.add_argument("--log", required=True)
    p.add_argument("--id", required=True)
    return parser


def _config(args: argparse.Namespace) -> pipeline.RunConfig:
    params = pipeline.load_params(args.params) if getattr(args, "params", None) else {}
    for key in pipeline.PARAM_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return pipeline.RunConfig(
        cdt=args.cdt, ert=getattr(args, "ert", None), data=args.data,
        manifest=args.manifest, views=args.views, rules=getattr(args, "rules", None),
        context=args.context, facet=getattr(args, "facet", None), affected=args.affected,
        params=params, out=getattr(args, "out", None), log=getattr(args, "log", None))


def cmd_validate(args) -> int:
    if not args.cdt and not args.ert:
        print("error: give --cdt and/or --ert", file=sys.stderr)
        return EXIT_DOMAIN
    for label, path in (("CDT", args.cdt), ("ERT", args.ert)):
        if path:
            tree = load_tree(path)
            nodes = sum(1 for _ in tree.walk())
            print(f"{label} {path}: ok ({nodes} nodes)")
    return EXIT_OK


def cmd_resolve(args) -> int:
    cdt = load_tree(args.cdt)
    context = parse_context(args.context, cdt)
    out = {"context": str(context),
           "elements": [{"dimension": ".".join(e.dimension_path), "value": e.value,
                         "attributes": e.bindings()} for e in context.elements]}
    if args.facet:
        if not args.ert:
            print("error: --facet needs --ert", file=sys.stderr)
            return EXIT_DOMAIN
        ec = combine(context, parse_requirement(args.facet, args.affected, load_tree(args.ert)))
        out["ethical_context"] = ec.to_dict()
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_analyze(args) -> int:
    report = pipeline.run_analysis(_config(args))
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_transform(args) -> int:
    ev, record = pipeline.run_transform(_config(args))
    if not args.out:
        sys.stdout.write(ev.table.to_csv())
    if ev.provenance_id:
        print(ev.provenance_id, file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def cmd_explain(args) -> int:
    sys.stdout.write(explain(RunLog(args.log).get(args.id)))
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "resolve": cmd_resolve, "analyze": cmd_analyze,
            "transform": cmd_transform, "explain": cmd_explain}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except EthicaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
