"""SMT-LIB v2 rendering of VC queries, and an external solver driver.

A script declares the spec functions and contract functions the query
mentions, states their definitions as axioms, and then checks the negated
query inside a ``(push)``/``(pop)`` frame. Recursive spec functions are not
given a quantified definition; instead their definition is instantiated on
the ground terms of the query, up to the active fuel.
"""

from __future__ import annotations

import os
import shlex
import subprocess
from dataclasses import dataclass
from typing import Optional

from . import ast as A
from . import terms as T
from .vcgen import Theory, VCQuery

SOLVER_ENV = "MVR_SMT_SOLVER"
TIMEOUT_ENV = "MVR_SMT_TIMEOUT"


def _sort(ty: str) -> str:
    return "Bool" if ty == "bool" else "Int"


def _guard(params) -> T.Term:
    return T.and_(*(T.in_range(p.ty, p) for p in params))


def _binders(params) -> str:
    return " ".join(f"({p.name} {_sort(p.ty)})" for p in params)


def _forall(params, body: T.Term) -> str:
    if not params:
        return f"(assert {T.render(body)})"
    return f"(assert (forall ({_binders(params)}) {T.render(body)}))"


class _Closure:
    """Symbols reachable from a query, and the ground instances of recursive definitions."""

    def __init__(self, th: Theory, q: VCQuery, fuel_default: int):
        self.th = th
        self.q = q
        self.fuel_default = fuel_default
        self.symbols = set()
        self.instances = {}  # rendered instance -> fn (ordered)
        self.ground_seen = set()

    def visit_symbols(self, t: T.Term):
        pending = list(T.symbols_of(t))
        while pending:
            s = pending.pop()
            if s in self.symbols:
                continue
            self.symbols.add(s)
            spec = self.th.spec_by_symbol(s)
            if spec is not None:
                pending.extend(T.symbols_of(spec.body))
            cb = self.th.contract_body(s)
            if cb is not None:
                pending.extend(T.symbols_of(cb[1]))

    def ground(self, t: T.Term, level: int):
        """Instantiate recursive definitions for the applications inside ``t``."""
        stack = [t]
        while stack:
            x = stack.pop()
            if not isinstance(x, T.App):
                continue
            stack.extend(x.args)
            spec = self.th.spec_by_symbol(x.op)
            cb = self.th.contract_body(x.op)
            if spec is not None and not spec.recursive:
                self.ground(T.subst(spec.body, _bind(spec.params, x.args)), level)
            elif cb is not None:
                self.ground(T.subst(cb[1], _bind(cb[0], x.args)), level)
            elif spec is not None:
                fuel = self.q.fuel_for(spec.name, self.fuel_default)
                key = (T.render(x), level)
                if level > fuel or key in self.ground_seen:
                    continue
                self.ground_seen.add(key)
                body = T.subst(spec.body, _bind(spec.params, x.args))
                guard = T.subst(_guard(spec.params), _bind(spec.params, x.args))
                inst = T.eq(x, body)
                if guard != T.TRUE:
                    inst = T.implies(guard, inst)
                self.instances.setdefault(T.render(inst), spec.name)
                self.ground(body, level + 1)


def _bind(params, args) -> dict:
    return {p.name: a for p, a in zip(params, args)}


def _uinv_widths(text_terms) -> list:
    widths = set()
    for t in text_terms:
        stack = [t]
        while stack:
            x = stack.pop()
            if isinstance(x, T.App):
                if x.op == "uInv":
                    widths.add(x.args[0].value)
                stack.extend(x.args)
    return sorted(widths)


def nested_implication(hyps, goal: T.Term) -> T.Term:
    out = goal
    for h in reversed(hyps):
        out = T.implies(h, out)
    return out


def emit_smtlib(q: VCQuery, fuel_default: int = 1) -> str:
    """Render one query as a self-contained SMT-LIB v2 script (byte-deterministic)."""
    th = q.theory or Theory()
    body = nested_implication(q.hyps, q.goal)
    cl = _Closure(th, q, fuel_default)
    cl.visit_symbols(body)
    cl.ground(body, 1)

    lines = [f"; {q.name}: {q.detail}" if q.detail else f"; {q.name}", "(set-logic ALL)"]
    all_terms = [body]
    for name in th.order:
        spec = th.specs.get(name)
        if spec is not None and spec.symbol in cl.symbols:
            all_terms.append(spec.body)
            all_terms.append(_guard(spec.params))
        c = th.contracts.get(name)
        if c is not None:
            for sym in (T.req_symbol(name), T.ens_symbol(name)):
                if sym in cl.symbols:
                    all_terms.append(th.contract_body(sym)[1])
    widths = _uinv_widths(all_terms)
    if widths:
        lines.append("(declare-fun uInv (Int Int) Bool)")
        for w in widths:
            lines.append(f"(assert (forall ((x Int)) (= (uInv {w} x) (and (<= 0 x) (< x {1 << w})))))")

    for name in th.order:
        spec = th.specs.get(name)
        if spec is None or spec.symbol not in cl.symbols:
            continue
        sig = " ".join(_sort(p.ty) for p in spec.params)
        lines.append(f"(declare-fun {spec.symbol} ({sig}) {_sort(spec.ret)})")
        call = T.App(spec.symbol, spec.params)
        rng = T.in_range(spec.ret, call)
        if rng != T.TRUE:
            lines.append(_forall(spec.params, rng))
        if not spec.recursive:
            guard = _guard(spec.params)
            defn = T.eq(call, spec.body)
            lines.append(_forall(spec.params, defn if guard == T.TRUE else T.implies(guard, defn)))
    for name in th.order:
        c = th.contracts.get(name)
        if c is None:
            continue
        for sym, params, cbody in ((T.req_symbol(name), c.req_params, c.req), (T.ens_symbol(name), c.ens_params, c.ens)):
            if cbody is None or sym not in cl.symbols:
                continue
            sig = " ".join(_sort(p.ty) for p in params)
            lines.append(f"(declare-fun {sym} ({sig}) Bool)")
            lines.append(_forall(params, T.eq(T.App(sym, params), cbody)))
    lines.append("(push)")
    for c in q.consts:
        lines.append(f"(declare-const {c.name} {_sort(c.ty)})")
    # instances mention the query's constants, so they live inside the frame
    for inst in cl.instances:
        lines.append(f"(assert {inst})")
    lines.append(f"(assert (not {T.render(body)}))")
    lines.append("(check-sat)")
    lines.append("(pop)")
    return "\n".join(lines) + "\n"


def script_filename(q: VCQuery) -> str:
    return f"{q.function}.{q.kind}.{q.index}.smt2"


# -- external solver --------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverResult:
    status: str  # "unsat", "sat", "unknown" or "error"
    detail: str = ""


def configured_solver() -> Optional[list]:
    cmd = os.environ.get(SOLVER_ENV, "").strip()
    return shlex.split(cmd) if cmd else None


def run_solver(script_path: str, command: Optional[list] = None, timeout: Optional[float] = None) -> SolverResult:
    """Run an external solver on one script file and read its first output line."""
    command = command or configured_solver()
    if command is None:
        return SolverResult("error", f"no solver configured (set {SOLVER_ENV})")
    if timeout is None and os.environ.get(TIMEOUT_ENV):
        timeout = float(os.environ[TIMEOUT_ENV])
    try:
        proc = subprocess.run([*command, script_path], capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return SolverResult("unknown", "solver timed out")
    except OSError as exc:
        return SolverResult("error", str(exc))
    first = proc.stdout.strip().splitlines()[0].strip() if proc.stdout.strip() else ""
    if first in ("sat", "unsat", "unknown"):
        return SolverResult(first)
    return SolverResult("error", (proc.stdout + proc.stderr).strip()[:500])


def is_machine_only(q: VCQuery) -> bool:
    return all(c.ty in A.MACHINE_WIDTHS or c.ty == "bool" for c in q.consts)
