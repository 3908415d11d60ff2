"""``mvr`` command-line driver.

Exit codes: 0 when everything checks, 1 for a check or verification failure,
2 for usage and I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .calculus.sexpr import SyntaxErr, parse_calculus_file, print_expr, print_type
from .eval import DEFAULT_BUDGET, Configuration, Crashed, Finished, run, trace_lines
from .typecheck.configuration import check_configuration
from .typecheck.diagnostics import Diagnostic

OK, FAILED, USAGE = 0, 1, 2

SURFACE_EXT = ".mvr"
CALCULUS_EXT = ".mvc"


class UsageError(Exception):
    pass


def _dialect(path: str, forced: Optional[str]) -> str:
    if forced:
        return forced
    ext = os.path.splitext(path)[1]
    if ext == SURFACE_EXT:
        return "surface"
    if ext == CALCULUS_EXT:
        return "calculus"
    raise UsageError(f"{path}: cannot infer the dialect from the extension; pass --dialect")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None


def _write_json(path: Optional[str], obj) -> None:
    if not path:
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None


def _syntax_diag(exc) -> Diagnostic:
    return Diagnostic("syntax", exc.span, exc.message)


# -- loading ---------------------------------------------------------------------------------


def load_surface(path: str):
    """(program, diagnostics); the program is None on a syntax error."""
    from .surface.check import check_surface
    from .surface.parser import SurfaceSyntaxError, parse_surface

    try:
        prog = parse_surface(_read(path))
    except SurfaceSyntaxError as exc:
        return None, [_syntax_diag(exc)]
    return prog, check_surface(prog)


def load_calculus(path: str):
    try:
        cf = parse_calculus_file(_read(path))
    except SyntaxErr as exc:
        return None, [_syntax_diag(exc)]
    return cf, []


def check_calculus(cf):
    """(diagnostics, derivable results) for a calculus file."""
    v = check_configuration(cf.decls, cf.heap_type, cf.perms, cf.env, cf.access, cf.heap, cf.expr, cf.expect)
    return list(v.diagnostics), sorted(v.results, key=lambda r: (r[0].value, print_type(r[1])))


# -- commands ---------------------------------------------------------------------------------


def cmd_check(args) -> int:
    status = OK
    report = []
    for path in args.paths:
        dialect = _dialect(path, args.dialect)
        entry = {"path": path, "dialect": dialect}
        if dialect == "surface":
            prog, diags = load_surface(path)
            results = []
        else:
            cf, diags = load_calculus(path)
            results = []
            if cf is not None:
                diags, results = check_calculus(cf)
        for d in diags:
            print(d.to_text(path))
        if diags:
            status = FAILED
        else:
            typings = "".join(f"; {mu} {print_type(t)}" for mu, t in results)
            print(f"{path}: ok{typings}")
        entry["diagnostics"] = [d.to_json() for d in diags]
        entry["results"] = [f"{mu} {print_type(t)}" for mu, t in results]
        report.append(entry)
    _write_json(args.json, {"command": "check", "files": report})
    return status


def _parse_input(text: str):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text.replace("_", ""))
    except ValueError:
        raise UsageError(f"input {text!r} is not an integer or boolean") from None


def cmd_run(args) -> int:
    dialect = _dialect(args.path, args.dialect)
    budget = args.budget if args.budget is not None else DEFAULT_BUDGET
    if dialect == "calculus":
        cf, diags = load_calculus(args.path)
        if cf is not None:
            diags, _ = check_calculus(cf)
        if diags:
            for d in diags:
                print(d.to_text(args.path))
            return FAILED
        c = Configuration(cf.heap, cf.expr, cf.decls)
        if args.trace:
            outcome, lines = trace_lines(c, budget)
            for line in lines:
                print(line)
        else:
            outcome = run(c, budget)
        if isinstance(outcome, Finished):
            print(print_expr(outcome.value))
            if args.show_heap:
                print(f"heap: {print_expr(outcome.heap)}")
            return OK
        if isinstance(outcome, Crashed):
            print(f"stuck ({outcome.reason.value}) after {outcome.steps} steps: {print_expr(outcome.config.expr)}")
            return FAILED
        print(f"budget exhausted after {outcome.budget} steps")
        return FAILED

    from .surface.interp import interpret

    prog, diags = load_surface(args.path)
    if diags:
        for d in diags:
            print(d.to_text(args.path))
        return FAILED
    entry = args.entry or ("main" if prog.lookup("main") else None)
    fn = prog.lookup(entry) if entry else None
    if fn is None:
        raise UsageError(f"{args.path}: no entry function (pass --entry)")
    inputs = [_parse_input(x) for x in args.inputs]
    try:
        out = interpret(prog, entry, inputs, budget=budget, check_requires=args.check_requires)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if out.kind != "returned":
        where = f" at {out.span.line}:{out.span.col}" if out.span else ""
        label = "budget exhausted" if out.kind == "budget" else out.kind
        print(f"{label}{where}: {out.message}")
        return FAILED
    print("()" if out.value is None else _show(out.value))
    for name, value in out.outs.items():
        print(f"{name} = {_show(value)}")
    if args.trace:
        for name, value in sorted(out.env.items()):
            print(f"  {name} = {_show(value)}")
    return OK


def _show(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _surface_or_fail(path: str):
    prog, diags = load_surface(path)
    for d in diags:
        print(d.to_text(path))
    return prog if not diags else None


def cmd_vc(args) -> int:
    from .surface.smt import emit_smtlib, script_filename
    from .surface.vcgen import vcgen

    prog = _surface_or_fail(args.path)
    if prog is None:
        return FAILED
    if args.function and prog.lookup(args.function) is None:
        raise UsageError(f"no function named `{args.function}`")
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"{args.out}: {exc.strerror or exc}") from None
    queries = vcgen(prog, args.function, fuel_default=args.fuel)
    for q in queries:
        name = script_filename(q)
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            fh.write(emit_smtlib(q, args.fuel))
        print(f"{name}  {q.detail}")
    print(f"{len(queries)} queries written to {args.out}")
    return OK


def cmd_verify(args) -> int:
    from .surface.smt import configured_solver
    from .surface.verify import VerifyConfig, detail_lines, summary_line, verify_program

    prog = _surface_or_fail(args.path)
    if prog is None:
        _write_json(args.json, {"command": "verify", "path": args.path, "ok": False, "obligations": []})
        return FAILED
    if args.function and prog.lookup(args.function) is None:
        raise UsageError(f"no function named `{args.function}`")
    solver = None if args.no_solver else configured_solver()
    obligations = verify_program(prog, VerifyConfig(width=args.width, fuel=args.fuel), solver=solver or [],
                                 function=args.function)
    failed = 0
    for ob in obligations:
        print(summary_line(ob))
        if ob.status != "valid" or ob.coherent is False:
            failed += 1
            for line in detail_lines(ob):
                print(line)
    print(f"{len(obligations) - failed}/{len(obligations)} obligations valid")
    functions = {}
    for ob in obligations:
        functions.setdefault(ob.query.function, []).append(ob.to_json())
    _write_json(args.json, {
        "command": "verify",
        "path": args.path,
        "width": args.width,
        "fuel": args.fuel,
        "solver": " ".join(solver) if solver else None,
        "ok": failed == 0,
        "functions": [{"name": k, "obligations": v} for k, v in functions.items()],
    })
    return OK if failed == 0 else FAILED


def cmd_erase(args) -> int:
    from .surface.erase import erase_ghost
    from .surface.printer import render

    prog = _surface_or_fail(args.path)
    if prog is None:
        return FAILED
    text = render(erase_ghost(prog))
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"{args.out}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)
    return OK


def cmd_meta(args) -> int:
    from .metatheory.enumerate import EnumerationSpec
    from .metatheory.properties import agreement_sweep, sweep

    budget = args.budget if args.budget is not None else DEFAULT_BUDGET
    spec = EnumerationSpec(max_size=args.size)
    rep = sweep(spec, budget)
    for line in rep.summary_lines():
        print(line)
    out = {"command": "meta", "sweep": rep.to_json()}
    ok = rep.ok
    for r in rep.reports:
        if r.counterexample is not None and r.counterexample.trace:
            print(f"  {r.name} trace:")
            for line in r.counterexample.trace:
                print(f"    {line}")
    if args.agreement is not None:
        ag = agreement_sweep(EnumerationSpec(max_size=args.agreement, permission_free=True))
        print(f"agreement size<={args.agreement}: {ag.agreed}/{ag.examined} agree, "
              f"{len(ag.known_incompleteness)} known incompleteness, {len(ag.violations)} violations")
        out["agreement"] = ag.to_json()
        ok = ok and ag.ok()
    _write_json(args.json, out)
    return OK if ok else FAILED


# -- argument parsing ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mvr", description="Mode/linearity calculus and mini-verifier toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    def dialect(p):
        p.add_argument("--dialect", choices=("calculus", "surface"),
                       help=f"input language (default: from the extension, {SURFACE_EXT} or {CALCULUS_EXT})")

    p = sub.add_parser("check", help="parse and type/mode check files")
    p.add_argument("paths", nargs="+")
    dialect(p)
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="evaluate a calculus file or interpret a surface entry point")
    p.add_argument("path")
    p.add_argument("inputs", nargs="*", help="surface entry arguments, in parameter order")
    dialect(p)
    p.add_argument("--entry", help="surface entry function (default: main)")
    p.add_argument("--budget", type=int)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--show-heap", action="store_true")
    p.add_argument("--check-requires", action="store_true", help="refuse inputs that violate the entry requires")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("vc", help="write one SMT-LIB script per verification condition")
    p.add_argument("path")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--fuel", type=int, default=1)
    p.add_argument("--function")
    p.set_defaults(fn=cmd_vc)

    p = sub.add_parser("verify", help="decide every obligation with the bounded oracle (and a solver)")
    p.add_argument("path")
    p.add_argument("--width", type=int, default=6)
    p.add_argument("--fuel", type=int, default=1)
    p.add_argument("--function")
    p.add_argument("--json", metavar="PATH")
    p.add_argument("--no-solver", action="store_true", help="ignore the configured external solver")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("erase", help="print the program with all ghost code removed")
    p.add_argument("path")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(fn=cmd_erase)

    p = sub.add_parser("meta", help="preservation/progress/termination sweep over enumerated terms")
    p.add_argument("--size", type=int, default=6)
    p.add_argument("--budget", type=int)
    p.add_argument("--agreement", type=int, metavar="SIZE", help="also cross-check the two checkers up to SIZE")
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(fn=cmd_meta)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    if extra:
        # entry inputs may follow the options of `run`
        if args.command != "run" or any(x.startswith("--") for x in extra):
            ap.error(f"unrecognized arguments: {' '.join(extra)}")
        args.inputs = [*args.inputs, *extra]
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"mvr: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
