"""Command-line pipeline driver.

Subcommands mirror the pipeline stages: `check` (parse + typecheck),
`generate` (dump the constructed program), `solve` (construct, solve, apply,
write the modified model), `export-lp` (construct and write an LP file), and
`vne` (scenario generator + incremental embedding + verification).

Exit codes: 0 success, 1 spec/model error, 2 infeasible, 3 timeout.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import vne as vne_mod
from .encode import GenerationError, dump_problem, generate
from .lang.parser import DslSyntaxError, parse
from .lang.typecheck import TypecheckError, typecheck
from .lpformat import export_lp
from .model import ModelError, apply_delta, load_model, serialize_model
from .pattern import PatternError, apply_rule
from .solve import solve

EXIT_OK = 0
EXIT_SPEC_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_TIMEOUT = 3

REPORT_FORMAT = "graphilp-solve-report/1"


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_SPEC_ERROR


def _load_inputs(model_path: str, spec_path: str):
    with open(model_path, encoding="utf-8") as fh:
        mm, graph = load_model(fh.read())
    with open(spec_path, encoding="utf-8") as fh:
        spec_ast = parse(fh.read())
    spec = typecheck(spec_ast, mm)
    return mm, graph, spec


def cmd_check(args) -> int:
    try:
        _, _, spec = _load_inputs(args.model, args.spec)
    except (ModelError, DslSyntaxError, OSError) as exc:
        return _fail(str(exc))
    except TypecheckError as exc:
        for d in exc.diagnostics:
            print(f"error: {args.spec}:{d}", file=sys.stderr)
        return EXIT_SPEC_ERROR
    for w in spec.warnings:
        print(f"warning: {args.spec}:{w}", file=sys.stderr)
    print("ok")
    return EXIT_OK


def cmd_generate(args) -> int:
    try:
        _, graph, spec = _load_inputs(args.model, args.spec)
        problem, table = generate(spec, graph)
    except (ModelError, DslSyntaxError, TypecheckError, GenerationError,
            OSError) as exc:
        return _fail(str(exc))
    text = dump_problem(problem, table)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return EXIT_OK


def _write_lp(problem, table, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(export_lp(problem, table))


def cmd_solve(args) -> int:
    try:
        mm, graph, spec = _load_inputs(args.model, args.spec)
        problem, table = generate(spec, graph)
    except (ModelError, DslSyntaxError, TypecheckError, GenerationError,
            OSError) as exc:
        return _fail(str(exc))
    if args.export_lp:
        _write_lp(problem, table, args.export_lp)
        print(f"wrote {args.export_lp}")
        return EXIT_OK
    sol = solve(problem, time_limit=args.time_limit)
    if sol.status == "infeasible":
        print("infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    if sol.status == "timeout":
        incumbent = "none" if sol.objective_value is None \
            else f"{sol.objective_value:.6g}"
        print(f"timeout (incumbent: {incumbent})", file=sys.stderr)
        return EXIT_TIMEOUT
    applied = graph
    chosen = sorted(v for v, value in sol.assignment.items()
                    if v in table and value == 1)
    touched = set()
    try:
        for vid in chosen:
            mapping, match = table.match_of(vid)
            rule = spec.rule_of_mapping(mapping)
            delta = apply_rule(applied, rule, match,
                               assume_valid=touched.isdisjoint(match.bound_ids()))
            applied = apply_delta(applied, delta)
            touched |= delta.touched_ids()
    except (PatternError, ModelError) as exc:
        return _fail(str(exc))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(serialize_model(mm, applied))
    report = {
        "format": REPORT_FORMAT,
        "status": sol.status,
        "objective": sol.objective_value,
        "vars": len(problem.variables),
        "rows": len(problem.constraints),
        "applied_matches": len(chosen),
        "nodes": sol.stats.get("nodes"),
    }
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    print(f"optimal objective {sol.objective_value:.6g}, "
          f"{len(chosen)} match(es) applied")
    return EXIT_OK


def cmd_export_lp(args) -> int:
    try:
        _, graph, spec = _load_inputs(args.model, args.spec)
        problem, table = generate(spec, graph)
        _write_lp(problem, table, args.out)
    except (ModelError, DslSyntaxError, TypecheckError, GenerationError,
            OSError) as exc:
        return _fail(str(exc))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_vne(args) -> int:
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                cfg = vne_mod.parse_scenario_config(fh.read())
        else:
            cfg = vne_mod.ScenarioConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.validate()
        from .vne_model import embedding_spec
        spec = embedding_spec()
        substrate, vnrs = vne_mod.generate_scenario(cfg)
        report = vne_mod.embed_incremental(substrate, vnrs, spec,
                                           time_limit=args.time_limit)
        violations = vne_mod.verify_embedding(report, substrate, report.final)
    except (vne_mod.ScenarioError, ModelError, TypecheckError,
            GenerationError, OSError) as exc:
        return _fail(str(exc))
    print(vne_mod.render_report(report, violations), end="")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(vne_mod.report_json(report, violations))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(serialize_model(report.final.mm, report.final))
    return EXIT_OK if not violations else EXIT_SPEC_ERROR


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="graphilp",
        description="Compile graph rewrite specs to 0/1 programs, solve, apply.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_io(p, out_required=False):
        p.add_argument("--model", required=True, help="model document (schema + instance)")
        p.add_argument("--spec", required=True, help="specification file (.gipsl)")
        if out_required:
            p.add_argument("--out", required=True, help="output path")
        else:
            p.add_argument("--out", help="output path")

    p = sub.add_parser("check", help="parse and typecheck a spec against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--spec", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("generate", help="construct the program and dump its rows")
    add_io(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="construct, solve, and apply the chosen matches")
    add_io(p)
    p.add_argument("--export-lp", metavar="PATH",
                   help="write the LP file instead of solving")
    p.add_argument("--time-limit", type=float, default=None, metavar="S")
    p.add_argument("--report", help="write a JSON run report")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("export-lp", help="construct the program and write an LP file")
    add_io(p, out_required=True)
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("vne", help="run the network-embedding scenario")
    p.add_argument("--config", help="scenario config file (key = value)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None, metavar="S")
    p.add_argument("--report", help="write a JSON report")
    p.add_argument("--out", help="write the final model document")
    p.set_defaults(func=cmd_vne)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
