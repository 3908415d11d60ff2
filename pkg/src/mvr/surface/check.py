"""Static checks for surface programs: names, types, modes and aliasing.

``modecheck_surface`` enforces the mode call matrix (spec code calls only spec
functions, proof code calls spec and proof functions, exec code calls all
three but only in the appropriate position), keeps ghost data out of
executable positions, restricts ``old`` to contracts and loop invariants,
keeps spec functions pure, and requires ``decreases`` on recursive ghost
functions. ``alias_check`` is the separate borrow check on ``&mut``
arguments. Both return lists of Diagnostic; ``analyze`` additionally returns
the resolved variable types that VC generation and interpretation use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..typecheck.diagnostics import Diagnostic
from . import ast as A
from .parser import block_as_expr

SURFACE_RULES = {
    "Fig2.spec-calls-proof": "spec code may call only spec functions",
    "Fig2.spec-calls-exec": "spec code may call only spec functions",
    "Fig2.proof-calls-exec": "proof code may not call exec functions",
    "Fig2.ghost-to-exec": "ghost values and ghost calls may not reach executable positions",
    "Fig2.old-placement": "old(x) only in contracts and invariants, on &mut parameters",
    "Fig2.spec-purity": "spec functions are a single pure expression without contracts",
    "Fig2.mut-ref-in-spec": "mutable references belong to proof and exec code",
    "Fig2.decreases": "recursive spec/proof functions need a decreases clause",
    "Sec8.alias": "a variable is borrowed mutably at most once per call",
    "Surface.name": "name resolution",
    "Surface.type": "surface typing",
    "Surface.assign": "assignment target must be mutable",
    "syntax": "surface syntax",
}

LIT = "lit"  # type of an unannotated integer literal
UNIT = "unit"


def is_int_type(t: Optional[str]) -> bool:
    return t in A.INT_TYPES or t == LIT


def fits(value: int, ty: str) -> bool:
    lo, hi = A.type_range(ty)
    return (lo is None or value >= lo) and (hi is None or value <= hi)


@dataclass
class FunctionInfo:
    """Resolved facts about one function's locals."""

    types: dict = field(default_factory=dict)  # variable -> type
    ghost: set = field(default_factory=set)  # ghost-let variables
    mutable: set = field(default_factory=set)  # let-mut variables and &mut params
    recursive_calls: list = field(default_factory=list)  # calls within the same cycle


@dataclass
class ProgramInfo:
    functions: dict = field(default_factory=dict)  # fn name -> FunctionInfo
    cycles: dict = field(default_factory=dict)  # fn name -> set of fns in its call cycle


def call_graph(p: A.SurfaceProgram) -> dict:
    graph = {}
    for f in p.functions:
        callees = set()
        for e in _all_exprs(f):
            for c in A.calls_in(e):
                callees.add(c.fn)
        graph[f.name] = callees
    return graph


def recursive_groups(p: A.SurfaceProgram) -> dict:
    """Map each function to the set of functions it can reach and that reach it back."""
    graph = call_graph(p)
    reach = {}
    for f in graph:
        seen, stack = set(), list(graph[f])
        while stack:
            g = stack.pop()
            if g in seen or g not in graph:
                continue
            seen.add(g)
            stack.extend(graph[g])
        reach[f] = seen
    return {f: {g for g in reach[f] if f in reach.get(g, ())} for f in graph}


def _all_exprs(f: A.Function):
    yield from f.requires
    yield from f.ensures
    if f.decreases is not None:
        yield f.decreases
    for s in A.walk_stmts(f.body):
        yield from A.stmt_exprs(s)


class _FunctionChecker:
    def __init__(self, prog: A.SurfaceProgram, fn: A.Function, cycles: dict, diags: list):
        self.prog = prog
        self.fn = fn
        self.cycle = cycles.get(fn.name, set())
        self.diags = diags
        self.info = FunctionInfo()
        self.scopes = [dict()]
        self.declared = set()
        self.hints = self._type_hints()

    def error(self, rule: str, span, message: str):
        self.diags.append(Diagnostic(rule, span, message))

    # -- scopes ------------------------------------------------------------------

    def lookup(self, name: str) -> Optional[str]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def bind(self, name: str, ty: str, span, ghost: bool = False, mutable: bool = False):
        if name in self.declared:
            self.error("Surface.name", span, f"`{name}` is already declared in `{self.fn.name}`; locals are declared once per function")
        self.declared.add(name)
        self.scopes[-1][name] = ty
        self.info.types[name] = ty
        if ghost:
            self.info.ghost.add(name)
        if mutable:
            self.info.mutable.add(name)

    # -- untyped lets ---------------------------------------------------------------

    def _type_hints(self) -> dict:
        """Types for unannotated literal lets, taken from how the variable is used."""
        hints = {}
        params = {p.name: p.ty for p in self.fn.params}
        annotated = dict(params)
        for s in A.walk_stmts(self.fn.body):
            if isinstance(s, A.Let) and s.ty:
                annotated[s.name] = s.ty
        for e in _all_exprs(self.fn):
            for x in A.walk_expr(e):
                if isinstance(x, A.Call):
                    callee = self.prog.lookup(x.fn)
                    if callee is None:
                        continue
                    for a, prm in zip(x.args, callee.params):
                        if isinstance(a.expr, A.Name):
                            hints.setdefault(a.expr.name, prm.ty)
                elif isinstance(x, A.Binary) and x.op in A.ARITH + A.COMPARE:
                    for mine, other in ((x.left, x.right), (x.right, x.left)):
                        if isinstance(mine, A.Name):
                            if isinstance(other, A.Name) and other.name in annotated:
                                hints.setdefault(mine.name, annotated[other.name])
                            elif isinstance(other, (A.Cast, A.TypeMax)):
                                hints.setdefault(mine.name, other.ty)
        for s in A.walk_stmts(self.fn.body):
            if isinstance(s, A.Assign) and isinstance(s.value, A.Name) and s.value.name in annotated:
                hints.setdefault(s.name, annotated[s.value.name])
        return hints

    # -- functions ---------------------------------------------------------------------

    def check(self) -> FunctionInfo:
        fn = self.fn
        seen = set()
        for p in fn.params:
            if p.name in seen:
                self.error("Surface.name", p.span, f"duplicate parameter `{p.name}`")
            seen.add(p.name)
            if p.passing == "mut" and fn.mode == "spec":
                self.error("Fig2.mut-ref-in-spec", p.span, f"spec function `{fn.name}` cannot take `&mut {p.ty}`")
            if fn.mode == "exec" and p.ty in ("int", "nat"):
                self.error("Surface.type", p.span, f"`{p.ty}` is a ghost-only type and cannot be an exec parameter")
            self.bind(p.name, p.ty, p.span, mutable=p.passing == "mut")
        if fn.mode == "exec" and fn.ret in ("int", "nat"):
            self.error("Surface.type", fn.span, f"`{fn.ret}` is a ghost-only type and cannot be an exec result")

        if fn.mode == "spec":
            self.check_spec_function()
            return self.info

        for r in fn.requires:
            self.expect_type(self.expr(r, "spec", "requires"), "bool", r)
        if fn.ret_name and fn.ret is None:
            self.error("Surface.type", fn.span, "ensures binds a result but the function returns nothing")
        self.scopes.append({fn.ret_name: fn.ret} if fn.ret_name else {})
        for e in fn.ensures:
            self.expect_type(self.expr(e, "spec", "ensures"), "bool", e)
        self.scopes.pop()
        if fn.decreases is not None:
            self.expect_int(self.expr(fn.decreases, "spec", "decreases"), fn.decreases)
            if fn.mode == "exec":
                self.error("Fig2.decreases", fn.decreases.span, "decreases clauses belong to spec and proof functions")
        self.check_decreases_present()
        self.block(fn.body, "proof" if fn.mode == "proof" else "exec")
        return self.info

    def check_spec_function(self):
        fn = self.fn
        if fn.requires or fn.ensures:
            self.error("Fig2.spec-purity", fn.span, f"spec function `{fn.name}` cannot have requires/ensures")
        if fn.ret is None:
            self.error("Surface.type", fn.span, f"spec function `{fn.name}` must return a value")
        if fn.decreases is not None:
            self.expect_int(self.expr(fn.decreases, "spec", "decreases"), fn.decreases)
        self.check_decreases_present()
        body = block_as_expr(fn.body)
        if body is None:
            span = fn.body[0].span if fn.body else fn.span
            self.error("Fig2.spec-purity", span, f"spec function `{fn.name}` must be a single pure expression")
            return
        t = self.expr(body, "spec", "body")
        if fn.ret is not None:
            self.expect_type(t, fn.ret, body)

    def check_decreases_present(self):
        fn = self.fn
        if fn.mode in ("spec", "proof") and fn.name in self.cycle and fn.decreases is None:
            self.error("Fig2.decreases", fn.span, f"recursive {fn.mode} function `{fn.name}` has no decreases clause")

    # -- statements ----------------------------------------------------------------------

    def block(self, stmts: list, ctx: str):
        self.scopes.append({})
        for s in stmts:
            self.stmt(s, ctx)
        self.scopes.pop()

    def stmt(self, s, ctx: str):
        fn = self.fn
        if isinstance(s, A.Let):
            ghost = s.ghost is not None or ctx != "exec"
            ectx = s.ghost or ctx
            t = self.expr(s.init, ectx, "let")
            ty = s.ty
            if ty is None:
                if t == LIT:
                    ty = self.hints.get(s.name) or ("int" if ghost else "u64")
                elif t == UNIT:
                    self.error("Surface.type", s.span, f"`{s.name}` would be bound to a unit value")
                    ty = "int"
                else:
                    ty = t
            else:
                self.expect_type(t, ty, s.init)
            if not ghost and ty in ("int", "nat"):
                self.error("Surface.type", s.span, f"`{ty}` is a ghost-only type; mark the let #[spec] or use a machine type")
            self.bind(s.name, ty, s.span, ghost=s.ghost is not None, mutable=s.mutable)
        elif isinstance(s, A.Assign):
            ty = self.lookup(s.name)
            if ty is None:
                self.error("Surface.name", s.span, f"assignment to unknown variable `{s.name}`")
                return
            if s.name not in self.info.mutable:
                self.error("Surface.assign", s.span, f"cannot assign to immutable `{s.name}`")
            target_ghost = s.name in self.info.ghost
            ectx = "spec" if target_ghost else ctx
            self.expect_type(self.expr(s.value, ectx, "assign"), ty, s.value)
        elif isinstance(s, A.While):
            if fn.mode == "proof":
                self.error("Fig2.decreases", s.span, "proof loops would need a termination measure; use recursion")
            self.expect_type(self.expr(s.cond, ctx, "cond"), "bool", s.cond)
            for inv in s.invariants:
                self.expect_type(self.expr(inv, "spec", "invariant"), "bool", inv)
            self.block(s.body, ctx)
        elif isinstance(s, A.Assert):
            self.expect_type(self.expr(s.cond, "spec", "assert"), "bool", s.cond)
        elif isinstance(s, A.Return):
            self.check_result(s.value, s.span, ctx)
        elif isinstance(s, A.Tail):
            self.check_result(s.expr, s.span, ctx)
        elif isinstance(s, A.Reveal):
            target = self.prog.lookup(s.fn)
            if target is None or target.mode != "spec":
                self.error("Surface.name", s.span, f"reveal_with_fuel needs a spec function, `{s.fn}` is not one")
        elif isinstance(s, A.If):
            self.expect_type(self.expr(s.cond, ctx, "cond"), "bool", s.cond)
            self.block(s.then, ctx)
            self.block(s.orelse, ctx)
        elif isinstance(s, A.ExprStmt):
            e = s.expr
            if isinstance(e, A.Call):
                callee = self.prog.lookup(e.fn)
                if callee is not None and callee.mode == "proof" and ctx == "exec":
                    # lemma call from exec code: a ghost statement
                    self.expr(e, "proof", "lemma")
                    return
            self.expr(e, ctx, "stmt")

    def check_result(self, value, span, ctx: str):
        want = self.fn.ret
        if value is None:
            if want is not None:
                self.error("Surface.type", span, f"`{self.fn.name}` must return a `{want}`")
            return
        t = self.expr(value, ctx, "return")
        if want is None:
            self.error("Surface.type", span, f"`{self.fn.name}` returns nothing but a value is given")
        else:
            self.expect_type(t, want, value)

    # -- expressions -----------------------------------------------------------------------

    def expect_type(self, got: Optional[str], want: str, e):
        if got is None or want is None:
            return
        if want == "bool" or got == "bool" or got == UNIT:
            if got != want:
                self.error("Surface.type", getattr(e, "span", None), f"expected `{want}`, found `{got}`")
            return
        if got == LIT and isinstance(e, A.IntLit) and not fits(e.value, want):
            self.error("Surface.type", e.span, f"literal {e.value} does not fit in `{want}`")

    def expect_int(self, got, e):
        if got is not None and not is_int_type(got):
            self.error("Surface.type", getattr(e, "span", None), f"expected an integer, found `{got}`")

    def expr(self, e, ctx: str, where: str) -> Optional[str]:
        """Type of ``e`` in context ``ctx`` (spec, proof or exec); records violations."""
        if isinstance(e, A.IntLit):
            return LIT
        if isinstance(e, A.BoolLit):
            return "bool"
        if isinstance(e, A.TypeMax):
            return e.ty
        if isinstance(e, A.Name):
            ty = self.lookup(e.name)
            if ty is None:
                if where == "ensures" and e.name == self.fn.ret_name:
                    return self.fn.ret
                self.error("Surface.name", e.span, f"unknown variable `{e.name}`")
                return None
            if ctx == "exec" and e.name in self.info.ghost:
                self.error("Fig2.ghost-to-exec", e.span, f"exec code reads ghost variable `{e.name}`")
            return ty
        if isinstance(e, A.Old):
            prm = self.fn.param(e.name)
            if where not in ("requires", "ensures", "invariant"):
                self.error("Fig2.old-placement", e.span, "old(...) may appear only in contracts and loop invariants")
            elif prm is None or prm.passing != "mut":
                self.error("Fig2.old-placement", e.span, f"old({e.name}) needs `{e.name}` to be a &mut parameter")
            return prm.ty if prm else None
        if isinstance(e, A.Unary):
            t = self.expr(e.arg, ctx, where)
            if e.op == "!":
                self.expect_type(t, "bool", e.arg)
                return "bool"
            self.expect_int(t, e.arg)
            if ctx == "exec":
                self.error("Surface.type", e.span, "unsigned exec values cannot be negated")
            return "int"
        if isinstance(e, A.Cast):
            t = self.expr(e.arg, ctx, where)
            self.expect_int(t, e.arg)
            if ctx == "exec" and e.ty in ("int", "nat"):
                self.error("Surface.type", e.span, f"`as {e.ty}` is ghost-only")
            return e.ty
        if isinstance(e, A.Binary):
            return self.binary(e, ctx, where)
        if isinstance(e, A.IfExpr):
            self.expect_type(self.expr(e.cond, ctx, where), "bool", e.cond)
            a = self.expr(e.then, ctx, where)
            b = self.expr(e.orelse, ctx, where)
            if (a == "bool") != (b == "bool") and a is not None and b is not None:
                self.error("Surface.type", e.span, f"if branches disagree: `{a}` vs `{b}`")
            if a == LIT:
                return b
            return a if ctx == "exec" or a == "bool" else ("int" if a != b and b is not None else a)
        if isinstance(e, A.Call):
            return self.call(e, ctx, where)
        raise TypeError(e)

    def binary(self, e: A.Binary, ctx: str, where: str):
        a = self.expr(e.left, ctx, where)
        b = self.expr(e.right, ctx, where)
        if e.op in A.LOGIC:
            self.expect_type(a, "bool", e.left)
            self.expect_type(b, "bool", e.right)
            return "bool"
        if e.op in ("==", "!=") and (a == "bool" or b == "bool"):
            if a != b and None not in (a, b):
                self.error("Surface.type", e.span, f"cannot compare `{a}` with `{b}`")
            return "bool"
        self.expect_int(a, e.left)
        self.expect_int(b, e.right)
        result = None
        if ctx == "exec":
            result = self.exec_operand_type(a, b, e)
        if e.op in A.COMPARE:
            return "bool"
        if ctx != "exec":
            return "int" if (a, b) != (LIT, LIT) else LIT
        return result

    def exec_operand_type(self, a, b, e):
        if a is None or b is None:
            return None
        if a == LIT and b == LIT:
            return LIT
        if a == LIT or b == LIT:
            t = b if a == LIT else a
            lit = e.left if a == LIT else e.right
            if isinstance(lit, A.IntLit) and not fits(lit.value, t):
                self.error("Surface.type", lit.span, f"literal {lit.value} does not fit in `{t}`")
            return t
        if a != b:
            self.error("Surface.type", e.span, f"exec operands of `{e.op}` have different types `{a}` and `{b}`")
        return a

    def call(self, e: A.Call, ctx: str, where: str):
        callee = self.prog.lookup(e.fn)
        if callee is None:
            self.error("Surface.name", e.span, f"unknown function `{e.fn}`")
            for a in e.args:
                self.expr(a.expr, ctx, where)
            return None
        if ctx == "spec":
            if callee.mode == "proof":
                self.error("Fig2.spec-calls-proof", e.span, f"spec code cannot call proof function `{e.fn}`")
            elif callee.mode == "exec":
                self.error("Fig2.spec-calls-exec", e.span, f"spec code cannot call exec function `{e.fn}`")
        elif ctx == "proof":
            if callee.mode == "exec":
                self.error("Fig2.proof-calls-exec", e.span, f"proof code cannot call exec function `{e.fn}`")
        elif callee.mode != "exec":
            self.error("Fig2.ghost-to-exec", e.span, f"{callee.mode} function `{e.fn}` called in an executable position")
        if len(e.args) != len(callee.params):
            self.error("Surface.type", e.span, f"`{e.fn}` takes {len(callee.params)} arguments, {len(e.args)} given")
        arg_ctx = ctx if callee.mode == "exec" else ("spec" if callee.mode == "spec" or ctx == "spec" else "proof")
        for a, prm in zip(e.args, callee.params):
            t = self.expr(a.expr, arg_ctx, where)
            if a.passing != prm.passing:
                want = {"value": "a value", "ref": "`&x`", "mut": "`&mut x`"}[prm.passing]
                self.error("Surface.type", a.span, f"parameter `{prm.name}` of `{e.fn}` expects {want}")
            if a.passing != "value" and not isinstance(a.expr, A.Name):
                self.error("Surface.type", a.span, "only variables can be borrowed")
            if a.passing == "mut":
                if ctx == "spec":
                    self.error("Fig2.mut-ref-in-spec", a.span, "spec code cannot borrow mutably")
                elif isinstance(a.expr, A.Name) and a.expr.name not in self.info.mutable:
                    self.error("Surface.assign", a.span, f"cannot borrow immutable `{a.expr.name}` as mutable")
            self.expect_type(t, prm.ty, a.expr)
            if arg_ctx == "exec" and t not in (None, LIT) and t != prm.ty:
                self.error("Surface.type", a.span, f"expected `{prm.ty}`, found `{t}`")
        if e.fn in self.cycle or e.fn == self.fn.name:
            self.info.recursive_calls.append(e)
        return callee.ret or UNIT


def exec_type(prog: A.SurfaceProgram, finfo: FunctionInfo, e) -> Optional[str]:
    """Machine type of a checked exec expression (None for literals and booleans)."""
    if isinstance(e, A.Name):
        return finfo.types.get(e.name)
    if isinstance(e, (A.Cast, A.TypeMax)):
        return e.ty
    if isinstance(e, A.Call):
        callee = prog.lookup(e.fn)
        return callee.ret if callee else None
    if isinstance(e, A.Binary) and e.op in A.ARITH:
        return exec_type(prog, finfo, e.left) or exec_type(prog, finfo, e.right)
    if isinstance(e, A.IfExpr):
        return exec_type(prog, finfo, e.then) or exec_type(prog, finfo, e.orelse)
    return None


def analyze(p: A.SurfaceProgram):
    """(diagnostics, ProgramInfo) for mode, name and type checking."""
    diags = []
    info = ProgramInfo(cycles=recursive_groups(p))
    seen = set()
    for f in p.functions:
        if f.name in seen:
            diags.append(Diagnostic("Surface.name", f.span, f"function `{f.name}` is defined twice"))
        seen.add(f.name)
    for f in p.functions:
        info.functions[f.name] = _FunctionChecker(p, f, info.cycles, diags).check()
    return diags, info


def modecheck_surface(p: A.SurfaceProgram) -> list:
    return analyze(p)[0]


def alias_check_call(call: A.Call) -> list:
    """Aliasing diagnostics for one call site."""
    diags = []
    mut_seen = {}
    for a in call.args:
        if a.passing == "mut" and isinstance(a.expr, A.Name):
            name = a.expr.name
            if name in mut_seen:
                first = mut_seen[name]
                diags.append(Diagnostic(
                    "Sec8.alias", a.span,
                    f"cannot borrow `{name}` as mutable more than once at a time "
                    f"(first mutable borrow at {first.line}:{first.col}, second mutable borrow here)",
                ))
            else:
                mut_seen[name] = a.span
    for a in call.args:
        if a.passing == "ref" and isinstance(a.expr, A.Name) and a.expr.name in mut_seen:
            first = mut_seen[a.expr.name]
            diags.append(Diagnostic(
                "Sec8.alias", a.span,
                f"cannot borrow `{a.expr.name}` as immutable because it is also borrowed as mutable "
                f"(mutable borrow at {first.line}:{first.col})",
            ))
    return diags


def alias_check(p: A.SurfaceProgram) -> list:
    diags = []
    for f in p.functions:
        for e in _all_exprs(f):
            for c in A.calls_in(e):
                diags.extend(alias_check_call(c))
    return diags


def check_surface(p: A.SurfaceProgram) -> list:
    """Mode check, then alias check on programs that pass it."""
    diags = modecheck_surface(p)
    if diags:
        return diags
    return alias_check(p)
