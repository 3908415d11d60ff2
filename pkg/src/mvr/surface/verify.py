"""Per-obligation verification: bounded oracle first, external solver when configured."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from typing import Optional

from . import ast as A
from .oracle import BoundedOracle, Undecided, Verdict, replay
from .smt import SolverResult, configured_solver, emit_smtlib, run_solver, script_filename
from .vcgen import VCGen, VCQuery


@dataclass
class Obligation:
    query: VCQuery
    oracle: Verdict
    solver: Optional[SolverResult] = None
    failed_clause: Optional[tuple] = None  # (span, source text) of a failing callee requires
    replays: Optional[bool] = None  # counterexample falsifies the goal under true hypotheses

    @property
    def status(self) -> str:
        o = self.oracle.status
        s = self.solver.status if self.solver else None
        if o == "invalid" or s == "sat":
            return "invalid"
        if o == "valid" or s == "unsat":
            return "valid"
        return "unknown"

    @property
    def decided_by(self) -> str:
        if self.oracle.status == "invalid" or (self.oracle.status == "valid" and self.status == "valid"):
            return "oracle"
        return "solver" if self.status != "unknown" else "none"

    @property
    def coherent(self) -> Optional[bool]:
        """Whether oracle and solver agree, when both reached a verdict."""
        if self.solver is None or self.solver.status not in ("sat", "unsat") or self.oracle.status == "unknown":
            return None
        return (self.oracle.status == "valid") == (self.solver.status == "unsat")

    @property
    def headline(self) -> str:
        if self.status == "invalid" and self.query.kind == "req":
            return "precondition not satisfied"
        return self.status

    def to_json(self) -> dict:
        q = self.query
        out = {
            "name": q.name,
            "kind": q.kind,
            "index": q.index,
            "detail": q.detail,
            "span": _span(q.span),
            "status": self.status,
            "decided_by": self.decided_by,
            "oracle": self.oracle.to_json(),
            "solver": self.solver.status if self.solver else None,
            "coherent": self.coherent,
        }
        if self.failed_clause is not None:
            span, text = self.failed_clause
            out["failed_clause"] = {"span": _span(span), "text": text}
        return out


def _span(span) -> dict:
    return {"line": span.line, "col": span.col} if span is not None else {"line": 0, "col": 0}


def _failed_clause(oracle: BoundedOracle, q: VCQuery, assignment: dict) -> Optional[tuple]:
    for term, span, text in q.clauses:
        try:
            if not oracle.ev.evaluate(term, assignment):
                return span, text
        except (Undecided, KeyError):
            continue
    if q.kind == "req":
        return q.span, "argument within the parameter's type"
    return None


@dataclass(frozen=True)
class VerifyConfig:
    width: int = 6  # oracle window: free constants range over [0, 2^width)
    fuel: int = 1  # default unfolding depth of recursive spec functions
    depth_cap: int = 400  # oracle recursion limit before a spec call is Unknown

    def __post_init__(self):
        if self.width < 1 or self.fuel < 0 or self.depth_cap < 1:
            raise ValueError("width and depth_cap must be positive, fuel non-negative")


def verify_program(prog: A.SurfaceProgram, config: Optional[VerifyConfig] = None, solver: Optional[list] = None,
                   function: Optional[str] = None, script_dir: Optional[str] = None) -> list:
    """Check every obligation of ``prog`` (or of one function) and return Obligations in order.

    ``solver`` is an argv prefix for an SMT-LIB solver; None reads the
    environment and an empty list disables the solver.
    """
    config = config or VerifyConfig()
    fuel = config.fuel
    gen = VCGen(prog, fuel_default=fuel)
    oracle = BoundedOracle(gen.theory, width=config.width, depth_cap=config.depth_cap)
    solver = solver if solver is not None else configured_solver()
    fns = [prog.lookup(function)] if function else prog.functions
    out = []
    with tempfile.TemporaryDirectory() as tmp:
        where = script_dir or tmp
        for fn in fns:
            for q in gen.function_queries(fn):
                ob = Obligation(q, oracle.verify(q))
                if ob.oracle.status == "invalid":
                    hyps, goal = replay(q, ob.oracle.counterexample, oracle.ev)
                    ob.replays = hyps and not goal
                    if q.kind == "req":
                        ob.failed_clause = _failed_clause(oracle, q, ob.oracle.counterexample)
                if solver:
                    path = os.path.join(where, script_filename(q))
                    with open(path, "w") as fh:
                        fh.write(emit_smtlib(q, fuel))
                    ob.solver = run_solver(path, solver)
                out.append(ob)
    return out


def summary_line(ob: Obligation) -> str:
    q = ob.query
    where = f"{q.span.line}:{q.span.col}" if q.span else "-"
    text = f"{q.name:<36} {where:>7}  {ob.headline}"
    if ob.status != "unknown" or ob.solver:
        text += f" ({ob.decided_by}" + (f", solver {ob.solver.status}" if ob.solver else "") + ")"
    if ob.status == "unknown" and ob.oracle.reason:
        text += f": {ob.oracle.reason}"
    return text


def detail_lines(ob: Obligation) -> list:
    lines = []
    if ob.query.detail:
        lines.append(f"    obligation: {ob.query.detail}")
    if ob.failed_clause is not None:
        span, text = ob.failed_clause
        where = f" at {span.line}:{span.col}" if span else ""
        lines.append(f"    failed precondition{where}: {text}")
    if ob.oracle.counterexample:
        pairs = ", ".join(f"{k}={_show(v)}" for k, v in ob.oracle.counterexample.items())
        lines.append(f"    counterexample: {pairs}")
    if ob.coherent is False:
        lines.append(f"    oracle says {ob.oracle.status} at width but solver says {ob.solver.status}")
    return lines


def _show(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)

