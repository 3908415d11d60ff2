"""Concrete interpreter for surface programs.

Exec code runs with exact machine-integer semantics: an arithmetic result or
cast outside its type halts the run with an ``overflow`` outcome. Ghost
constructs (ghost lets, asserts, reveals, lemma calls, assignments to ghost
variables) are skipped unless ``check_asserts`` asks for asserts to be
evaluated. ``&mut`` arguments are passed by copy-in/copy-out, which agrees with
by-reference passing because the alias check rules out two handles on one
variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..calculus.syntax import Span
from . import ast as A
from .check import ProgramInfo, analyze, exec_type
from .parser import block_as_expr


@dataclass
class Outcome:
    kind: str  # "returned", "overflow", "div-zero", "budget", "precondition", "assert"
    value: object = None
    outs: dict = field(default_factory=dict)  # &mut parameters of the entry, final values
    env: dict = field(default_factory=dict)  # entry function's locals at exit
    span: Optional[Span] = None
    message: str = ""

    def observable(self) -> tuple:
        """What an exec caller can observe: outcome kind, result and &mut outputs."""
        return (self.kind, self.value, tuple(sorted(self.outs.items())))

    def to_json(self) -> dict:
        out = {"kind": self.kind, "value": self.value, "outs": dict(self.outs)}
        if self.span is not None:
            out["span"] = {"line": self.span.line, "col": self.span.col}
        if self.message:
            out["message"] = self.message
        return out


class _Halt(Exception):
    def __init__(self, kind: str, span, message: str):
        self.kind, self.span, self.message = kind, span, message


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class Interpreter:
    def __init__(self, prog: A.SurfaceProgram, info: Optional[ProgramInfo] = None, budget: int = 1_000_000,
                 check_asserts: bool = False):
        self.prog = prog
        self.info = info if info is not None else analyze(prog)[1]
        self.budget = budget
        self.steps = 0
        self.check_asserts = check_asserts
        self.spec_memo = {}

    # -- ghost evaluation (requires checks and optional asserts) ------------------------

    def ghost(self, e, env: dict, old: dict):
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.BoolLit):
            return e.value
        if isinstance(e, A.TypeMax):
            return (1 << A.MACHINE_WIDTHS[e.ty]) - 1
        if isinstance(e, A.Name):
            return env[e.name]
        if isinstance(e, A.Old):
            return old[e.name]
        if isinstance(e, A.Unary):
            v = self.ghost(e.arg, env, old)
            return (not v) if e.op == "!" else -v
        if isinstance(e, A.Cast):
            return self.ghost(e.arg, env, old)
        if isinstance(e, A.IfExpr):
            return self.ghost(e.then if self.ghost(e.cond, env, old) else e.orelse, env, old)
        if isinstance(e, A.Binary):
            a = self.ghost(e.left, env, old)
            if e.op == "&&":
                return a and self.ghost(e.right, env, old)
            if e.op == "||":
                return a or self.ghost(e.right, env, old)
            if e.op == "==>":
                return (not a) or self.ghost(e.right, env, old)
            return _apply(e.op, a, self.ghost(e.right, env, old), e.span)
        if isinstance(e, A.Call):
            callee = self.prog.lookup(e.fn)
            args = tuple(self.ghost(a.expr, env, old) for a in e.args)
            key = (e.fn, args)
            if key not in self.spec_memo:
                body = block_as_expr(callee.body)
                local = {p.name: v for p, v in zip(callee.params, args)}
                self.spec_memo[key] = self.ghost(body, local, local)
            return self.spec_memo[key]
        raise TypeError(e)

    # -- exec evaluation ---------------------------------------------------------------------

    def tick(self, span):
        self.steps += 1
        if self.steps > self.budget:
            raise _Halt("budget", span, f"step budget {self.budget} exhausted")

    def value(self, e, frame: dict, fn: A.Function):
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.BoolLit):
            return e.value
        if isinstance(e, A.TypeMax):
            return (1 << A.MACHINE_WIDTHS[e.ty]) - 1
        if isinstance(e, A.Name):
            return frame[e.name]
        if isinstance(e, A.Unary):
            v = self.value(e.arg, frame, fn)
            return (not v) if e.op == "!" else -v
        if isinstance(e, A.Cast):
            v = self.value(e.arg, frame, fn)
            _check_range(e.ty, v, e.span, f"cast to {e.ty}")
            return v
        if isinstance(e, A.IfExpr):
            c = self.value(e.cond, frame, fn)
            return self.value(e.then if c else e.orelse, frame, fn)
        if isinstance(e, A.Binary):
            a = self.value(e.left, frame, fn)
            if e.op == "&&":
                return a and self.value(e.right, frame, fn)
            if e.op == "||":
                return a or self.value(e.right, frame, fn)
            if e.op == "==>":
                return (not a) or self.value(e.right, frame, fn)
            v = _apply(e.op, a, self.value(e.right, frame, fn), e.span)
            if e.op in A.ARITH:
                ty = exec_type(self.prog, self.info.functions[fn.name], e)
                if ty in A.MACHINE_WIDTHS:
                    _check_range(ty, v, e.span, f"`{e.op}`")
            return v
        if isinstance(e, A.Call):
            return self.call(e, frame, fn)
        raise TypeError(e)

    def call(self, e: A.Call, frame: dict, fn: A.Function):
        callee = self.prog.lookup(e.fn)
        args = [self.value(a.expr, frame, fn) for a in e.args]
        result, callee_frame = self.invoke(callee, args)
        for a, p in zip(e.args, callee.params):
            if p.passing == "mut":
                frame[a.expr.name] = callee_frame[p.name]
        return result

    def invoke(self, fn: A.Function, args: list):
        frame = {p.name: v for p, v in zip(fn.params, args)}
        self.tick(fn.span)
        try:
            self.block(fn.body, frame, fn)
            result = None
        except _Return as r:
            result = r.value
        return result, frame

    # -- statements ------------------------------------------------------------------------

    def is_ghost_stmt(self, s, fn: A.Function) -> bool:
        if isinstance(s, (A.Assert, A.Reveal)):
            return True
        if isinstance(s, A.Let):
            return s.ghost is not None
        if isinstance(s, A.Assign):
            return s.name in self.info.functions[fn.name].ghost
        if isinstance(s, A.ExprStmt) and isinstance(s.expr, A.Call):
            callee = self.prog.lookup(s.expr.fn)
            return callee is not None and callee.mode != "exec"
        return False

    def block(self, stmts: list, frame: dict, fn: A.Function):
        for s in stmts:
            self.tick(s.span)
            if self.is_ghost_stmt(s, fn):
                if not self.check_asserts:
                    continue
                if isinstance(s, A.Assert) and not self.ghost(s.cond, frame, frame):
                    raise _Halt("assert", s.span, "assertion failed at run time")
                if isinstance(s, A.Let):
                    frame[s.name] = self.ghost(s.init, frame, frame)
                elif isinstance(s, A.Assign):
                    frame[s.name] = self.ghost(s.value, frame, frame)
                continue
            self.stmt(s, frame, fn)

    def stmt(self, s, frame: dict, fn: A.Function):
        if isinstance(s, A.Let):
            frame[s.name] = self.value(s.init, frame, fn)
        elif isinstance(s, A.Assign):
            frame[s.name] = self.value(s.value, frame, fn)
        elif isinstance(s, (A.Return, A.Tail)):
            value = s.value if isinstance(s, A.Return) else s.expr
            raise _Return(None if value is None else self.value(value, frame, fn))
        elif isinstance(s, A.ExprStmt):
            self.value(s.expr, frame, fn)
        elif isinstance(s, A.If):
            branch = s.then if self.value(s.cond, frame, fn) else s.orelse
            self.block(branch, frame, fn)
        elif isinstance(s, A.While):
            while self.value(s.cond, frame, fn):
                self.tick(s.span)
                self.block(s.body, frame, fn)
        else:
            raise TypeError(s)

    # -- entry -----------------------------------------------------------------------------

    def run(self, entry: str, inputs, check_requires: bool = False) -> Outcome:
        fn = self.prog.lookup(entry)
        if fn is None:
            raise KeyError(f"no function named `{entry}`")
        if fn.mode != "exec":
            raise ValueError(f"`{entry}` is a {fn.mode} function; only exec functions run")
        if isinstance(inputs, dict):
            args = [inputs[p.name] for p in fn.params]
        else:
            args = list(inputs)
        if len(args) != len(fn.params):
            raise ValueError(f"`{entry}` takes {len(fn.params)} inputs, {len(args)} given")
        for p, v in zip(fn.params, args):
            lo, hi = A.type_range(p.ty)
            if p.ty == "bool" and not isinstance(v, bool) or p.ty != "bool" and not (
                (lo is None or v >= lo) and (hi is None or v <= hi)
            ):
                raise ValueError(f"input {v!r} is outside the type `{p.ty}` of `{p.name}`")
        if check_requires:
            env = {p.name: v for p, v in zip(fn.params, args)}
            for r in fn.requires:
                if not self.ghost(r, env, env):
                    return Outcome("precondition", span=r.span, message="entry precondition does not hold")
        self.steps = 0
        frame = {}
        try:
            result, frame = self.invoke(fn, args)
        except _Halt as h:
            return Outcome(h.kind, span=h.span, message=h.message)
        outs = {p.name: frame[p.name] for p in fn.params if p.passing == "mut"}
        return Outcome("returned", result, outs, dict(frame))


def _apply(op: str, a, b, span):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op in ("/", "%"):
        if b == 0:
            raise _Halt("div-zero", span, "division by zero")
        r = a % abs(b)
        return (a - r) // b if op == "/" else r
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(op)


def _check_range(ty: str, v, span, what: str):
    lo, hi = A.type_range(ty)
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise _Halt("overflow", span, f"{what} leaves the range of {ty}")


def interpret(prog: A.SurfaceProgram, entry: str, inputs, budget: int = 1_000_000,
              check_requires: bool = False, check_asserts: bool = False) -> Outcome:
    return Interpreter(prog, budget=budget, check_asserts=check_asserts).run(entry, inputs, check_requires)
