"""SSA lowering and verification-condition generation.

Each function body is executed symbolically. Every binding becomes a family of
immutable constants: an immutable local ``w`` is ``w@``, a ``let mut v`` is
``v@0, v@1, ...`` (one per assignment), and a ``&mut`` parameter ``a`` is the
pair ``pre%a@`` (entry) plus ``a@1, a@2, ...``. Loops are cut at their
invariants: the invariants are checked on entry, the variables assigned in
the body get fresh versions, and the body is checked once under the
invariants and the guard.

Every obligation becomes one VCQuery whose hypotheses are the facts collected
along the path (in order) and whose goal is the obligation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..calculus.syntax import Span
from . import ast as A
from . import terms as T
from .check import ProgramInfo, analyze, exec_type
from .parser import block_as_expr

KINDS = ("req", "assert", "inv-init", "inv-preserve", "post", "overflow", "div-zero", "decreases")


# -- background theory -------------------------------------------------------------------


@dataclass(frozen=True)
class SpecDef:
    name: str
    params: tuple  # Consts named "<param>@"
    ret: str
    body: T.Term
    recursive: bool

    @property
    def symbol(self) -> str:
        return T.spec_symbol(self.name)


@dataclass(frozen=True)
class Contract:
    fn: str
    req_params: tuple
    req: Optional[T.Term]
    ens_params: tuple
    ens: Optional[T.Term]


@dataclass
class Theory:
    """Spec-function definitions and contract functions of one program."""

    specs: dict = field(default_factory=dict)
    contracts: dict = field(default_factory=dict)
    order: list = field(default_factory=list)  # function names in program order

    def spec_by_symbol(self, symbol: str) -> Optional[SpecDef]:
        if symbol.endswith(T.SPEC_SUFFIX):
            return self.specs.get(symbol[: -len(T.SPEC_SUFFIX)])
        return None

    def contract_body(self, symbol: str):
        """(params, body) of a req%/ens% symbol, or None."""
        if symbol.startswith("req%"):
            c = self.contracts.get(symbol[4:])
            return (c.req_params, c.req) if c and c.req is not None else None
        if symbol.startswith("ens%"):
            c = self.contracts.get(symbol[4:])
            return (c.ens_params, c.ens) if c and c.ens is not None else None
        return None


@dataclass(frozen=True)
class VCQuery:
    name: str
    function: str
    kind: str
    index: int
    consts: tuple  # Consts, in declaration order
    hyps: tuple  # Terms
    goal: T.Term
    span: Optional[Span]
    fuel: tuple = ()  # (spec fn, fuel) pairs that differ from the default
    detail: str = ""
    callee: Optional[str] = None
    clauses: tuple = ()  # for "req": (instantiated clause, span, source text) per requires clause
    theory: Optional[Theory] = field(default=None, compare=False, repr=False)

    def fuel_for(self, fn: str, default: int) -> int:
        return dict(self.fuel).get(fn, default)


@dataclass
class SSAFunction:
    """The constant families and loop cuts that lowering produced for one function."""

    name: str
    families: dict = field(default_factory=dict)  # variable -> [constant names]
    havoc: list = field(default_factory=list)  # per loop: [constant names]


# -- expression translation ------------------------------------------------------------------


def _param_const(p: A.Param) -> T.Const:
    return T.Const(("pre%" if p.passing == "mut" else "") + p.name + "@", p.ty)


def _post_const(p: A.Param) -> T.Const:
    return T.Const(p.name + "@", p.ty)


class _State:
    __slots__ = ("env", "hyps", "fuel", "live")

    def __init__(self, env, hyps, fuel):
        self.env = env
        self.hyps = hyps
        self.fuel = fuel
        self.live = True

    def copy(self) -> "_State":
        return _State(dict(self.env), list(self.hyps), dict(self.fuel))


class _FunctionLowering:
    def __init__(self, gen: "VCGen", fn: A.Function):
        self.gen = gen
        self.prog = gen.prog
        self.fn = fn
        self.finfo = gen.info.functions[fn.name]
        self.theory = gen.theory
        self.queries = []
        self.kind_counts = {}
        self.versions = {}
        self.ssa = SSAFunction(fn.name)
        self.temp = 0
        self.entry = {}

    # -- constants ---------------------------------------------------------------------

    def record(self, var: str, c: T.Const):
        self.ssa.families.setdefault(var, []).append(c.name)

    def fresh(self, var: str) -> T.Const:
        ty = self.finfo.types[var]
        k = self.versions.get(var)
        if k is None:
            k = 0 if self.fn.param(var) is None else 1
        else:
            k += 1
        self.versions[var] = k
        c = T.Const(f"{var}@{k}", ty)
        self.record(var, c)
        return c

    def bind_let(self, s: A.Let) -> T.Const:
        ty = self.finfo.types[s.name]
        if s.mutable:
            return self.fresh(s.name)
        c = T.Const(f"{s.name}@", ty)
        self.record(s.name, c)
        return c

    # -- queries -------------------------------------------------------------------------

    def query(self, st: _State, kind: str, goal: T.Term, span, detail: str, guards=(), callee=None, clauses=()):
        idx = self.kind_counts.get(kind, 0)
        self.kind_counts[kind] = idx + 1
        hyps = tuple(st.hyps) + tuple(guards)
        found = {}
        for h in hyps:
            T.consts_of(h, found)
        T.consts_of(goal, found)
        fuel = tuple(sorted((f, k) for f, k in st.fuel.items() if k != self.gen.fuel_default))
        self.queries.append(VCQuery(
            f"{self.fn.name}.{kind}.{idx}", self.fn.name, kind, idx, tuple(found.values()),
            hyps, goal, span, fuel, detail, callee, tuple(clauses), self.theory,
        ))

    # -- expressions ---------------------------------------------------------------------

    def expr(self, e, st: _State, ctx: str, guards=(), old=None) -> T.Term:
        """Translate ``e``; exec context emits overflow/division obligations."""
        if isinstance(e, A.IntLit):
            return T.Lit(e.value)
        if isinstance(e, A.BoolLit):
            return T.Lit(e.value)
        if isinstance(e, A.TypeMax):
            return T.Lit((1 << A.MACHINE_WIDTHS[e.ty]) - 1)
        if isinstance(e, A.Name):
            return st.env[e.name]
        if isinstance(e, A.Old):
            return self.entry[e.name]
        if isinstance(e, A.Unary):
            a = self.expr(e.arg, st, ctx, guards)
            return T.not_(a) if e.op == "!" else T.app("-", T.Lit(0), a)
        if isinstance(e, A.Cast):
            a = self.expr(e.arg, st, ctx, guards)
            if ctx == "exec" and e.ty in A.MACHINE_WIDTHS:
                src = self.exec_type(e.arg)
                if src not in A.MACHINE_WIDTHS or A.MACHINE_WIDTHS[src] > A.MACHINE_WIDTHS[e.ty]:
                    self.query(st, "overflow", T.in_range(e.ty, a), e.span,
                               f"cast to {e.ty} may lose bits", guards)
            return a
        if isinstance(e, A.Binary):
            return self.binary(e, st, ctx, guards)
        if isinstance(e, A.IfExpr):
            c = self.expr(e.cond, st, ctx, guards)
            a = self.expr(e.then, st, ctx, (*guards, c))
            b = self.expr(e.orelse, st, ctx, (*guards, T.not_(c)))
            return T.ite(c, a, b)
        if isinstance(e, A.Call):
            callee = self.prog.lookup(e.fn)
            if callee.mode == "spec":
                args = [self.expr(a.expr, st, "spec", guards) for a in e.args]
                return T.App(T.spec_symbol(e.fn), tuple(args))
            return self.call(e, st, ctx, guards)
        raise TypeError(e)

    def exec_type(self, e) -> Optional[str]:
        return exec_type(self.prog, self.finfo, e)

    def binary(self, e: A.Binary, st, ctx, guards) -> T.Term:
        a = self.expr(e.left, st, ctx, guards)
        if e.op == "&&":
            return T.app("and", a, self.expr(e.right, st, ctx, (*guards, a)))
        if e.op == "||":
            return T.app("or", a, self.expr(e.right, st, ctx, (*guards, T.not_(a))))
        if e.op == "==>":
            return T.implies(a, self.expr(e.right, st, ctx, (*guards, a)))
        b = self.expr(e.right, st, ctx, guards)
        if e.op == "!=":
            return T.not_(T.eq(a, b))
        op = {"==": "=", "/": "div", "%": "mod"}.get(e.op, e.op)
        t = T.app(op, a, b)
        if ctx == "exec" and e.op in A.ARITH:
            ty = self.exec_type(e)
            if e.op in ("/", "%"):
                self.query(st, "div-zero", T.not_(T.eq(b, T.Lit(0))), e.span,
                           f"divisor of `{_show(e)}` may be zero", guards)
            if ty in A.MACHINE_WIDTHS and e.op in ("+", "-", "*"):
                self.query(st, "overflow", T.in_range(ty, t), e.span,
                           f"`{_show(e)}` may overflow {ty}", guards)
                self.assume(st, T.in_range(ty, t), guards)
        return t

    def assume(self, st: _State, fact: T.Term, guards=()):
        if fact == T.TRUE:
            return
        st.hyps.append(T.implies(T.and_(*guards), fact) if guards else fact)

    # -- calls ------------------------------------------------------------------------------

    def call(self, e: A.Call, st: _State, ctx: str, guards=(), result: Optional[T.Const] = None) -> T.Term:
        callee = self.prog.lookup(e.fn)
        arg_ctx = ctx if callee.mode == "exec" else "spec"
        pre = []
        for a in e.args:
            pre.append(self.expr(a.expr, st, arg_ctx, guards))
        contract = self.theory.contracts.get(e.fn)
        range_goals = []
        for t, prm in zip(pre, callee.params):
            if not _statically_in_range(t, prm.ty, self, e):
                range_goals.append(T.in_range(prm.ty, t))
        if (contract and contract.req is not None) or range_goals:
            goal_parts = list(range_goals)
            if contract and contract.req is not None:
                goal_parts.append(T.App(T.req_symbol(e.fn), tuple(pre)))
            env = {p.name: t for p, t in zip(callee.params, pre)}
            clauses = [(self.gen._translate(callee, r, env, entry=env), r.span, _show(r)) for r in callee.requires]
            self.query(st, "req", T.and_(*goal_parts), e.span, f"precondition of `{e.fn}`", guards,
                       callee=e.fn, clauses=clauses)
        if self.is_recursive_call(e):
            self.decreases_query(st, e, pre, guards)
        post_args = []
        new_facts = []
        for a, prm, t in zip(e.args, callee.params, pre):
            post_args.append(t)
            if prm.passing == "mut":
                var = a.expr.name
                c = self.fresh(var)
                st.env[var] = c
                post_args.append(c)
                new_facts.append(T.in_range(self.finfo.types[var], c))
        if callee.ret is not None and result is None:
            self.temp += 1
            result = T.Const(f"res%{e.fn}@{self.temp}", callee.ret)
        if result is not None:
            post_args.append(result)
            new_facts.append(T.in_range(callee.ret, result))
        if contract and contract.ens is not None:
            new_facts.append(T.App(T.ens_symbol(e.fn), tuple(post_args)))
        for f in new_facts:
            self.assume(st, f, guards)
        return result if result is not None else T.TRUE

    def is_recursive_call(self, e: A.Call) -> bool:
        return self.fn.mode in ("spec", "proof") and any(c is e for c in self.finfo.recursive_calls)

    def decreases_query(self, st: _State, e: A.Call, args, guards=()):
        callee = self.prog.lookup(e.fn)
        if self.fn.decreases is None or callee.decreases is None:
            return
        caller_measure = self.gen.measure(self.fn, self.entry_values())
        callee_measure = self.gen.measure(callee, list(args))
        goal = T.and_(T.app("<", callee_measure, caller_measure), T.app("<=", T.Lit(0), caller_measure))
        self.query(st, "decreases", goal, e.span, f"recursive call to `{e.fn}` must decrease the measure", guards)

    def entry_values(self) -> list:
        return [self.entry[p.name] for p in self.fn.params]

    # -- statements ------------------------------------------------------------------------

    def run(self):
        fn = self.fn
        env, hyps = {}, []
        for p in fn.params:
            c = _param_const(p)
            self.entry[p.name] = c
            env[p.name] = c
            self.record(p.name, c)
            hyps.append(T.in_range(p.ty, c))
        hyps = [h for h in hyps if h != T.TRUE]
        st = _State(env, hyps, {})
        contract = self.theory.contracts.get(fn.name)
        if contract and contract.req is not None:
            hyps.append(T.App(T.req_symbol(fn.name), tuple(self.entry_values())))
        if fn.mode == "spec":
            body = block_as_expr(fn.body)
            self.spec_body(body, st, ())
            return
        self.block(fn.body, st)
        if st.live:
            self.finish(st, None, fn.span)

    def spec_body(self, e, st: _State, guards):
        """Decreases obligations for recursive calls inside a spec-function body."""
        if isinstance(e, A.IfExpr):
            c = self.expr(e.cond, st, "spec")
            self.spec_body(e.cond, st, guards)
            self.spec_body(e.then, st, (*guards, c))
            self.spec_body(e.orelse, st, (*guards, T.not_(c)))
            return
        if isinstance(e, A.Binary) and e.op in ("&&", "||", "==>"):
            a = self.expr(e.left, st, "spec")
            self.spec_body(e.left, st, guards)
            self.spec_body(e.right, st, (*guards, T.not_(a) if e.op == "||" else a))
            return
        if isinstance(e, A.Call):
            if self.is_recursive_call(e):
                args = [self.expr(a.expr, st, "spec") for a in e.args]
                self.decreases_query(st, e, args, guards)
        for c in A.expr_children(e):
            self.spec_body(c, st, guards)

    def block(self, stmts: list, st: _State):
        saved_fuel = dict(st.fuel)
        for s in stmts:
            if not st.live:
                break
            self.stmt(s, st)
        st.fuel = saved_fuel

    def ctx(self) -> str:
        return "exec" if self.fn.mode == "exec" else "spec"

    def stmt(self, s, st: _State):
        ctx = self.ctx()
        if isinstance(s, A.Let):
            ectx = "spec" if s.ghost else ctx
            c = self.bind_let(s)
            if isinstance(s.init, A.Call) and self.prog.lookup(s.init.fn).mode != "spec":
                self.call(s.init, st, ectx, result=c)
            else:
                value = self.expr(s.init, st, ectx)
                st.hyps.append(T.eq(c, value))
            st.env[s.name] = c
        elif isinstance(s, A.Assign):
            ectx = "spec" if s.name in self.finfo.ghost else ctx
            value = self.expr(s.value, st, ectx)
            c = self.fresh(s.name)
            st.hyps.append(T.eq(c, value))
            st.env[s.name] = c
        elif isinstance(s, A.Assert):
            goal = self.expr(s.cond, st, "spec")
            self.query(st, "assert", goal, s.span, f"assertion `{_show(s.cond)}`")
            st.hyps.append(goal)
        elif isinstance(s, A.Reveal):
            st.fuel[s.fn] = s.fuel
        elif isinstance(s, A.ExprStmt):
            e = s.expr
            if isinstance(e, A.Call) and self.prog.lookup(e.fn).mode != "spec":
                self.call(e, st, ctx)
            else:
                self.expr(e, st, ctx)
        elif isinstance(s, (A.Return, A.Tail)):
            value = s.value if isinstance(s, A.Return) else s.expr
            t = None if value is None else self.expr(value, st, ctx)
            self.finish(st, t, s.span)
            st.live = False
        elif isinstance(s, A.If):
            self.if_stmt(s, st)
        elif isinstance(s, A.While):
            self.while_loop(s, st)
        else:
            raise TypeError(s)

    def finish(self, st: _State, result: Optional[T.Term], span):
        """Postcondition obligation at a return point."""
        contract = self.theory.contracts.get(self.fn.name)
        if contract is None or contract.ens is None:
            return
        args = []
        for p in self.fn.params:
            args.append(self.entry[p.name])
            if p.passing == "mut":
                args.append(st.env[p.name])
        if self.fn.ret is not None and result is not None:
            args.append(result)
        self.query(st, "post", T.App(T.ens_symbol(self.fn.name), tuple(args)), span,
                   f"postcondition of `{self.fn.name}`")

    def if_stmt(self, s: A.If, st: _State):
        c = self.expr(s.cond, st, self.ctx())
        then_st, else_st = st.copy(), st.copy()
        then_st.hyps.append(c)
        else_st.hyps.append(T.not_(c))
        self.block(s.then, then_st)
        self.block(s.orelse, else_st)
        base = len(st.hyps) + 1
        if then_st.live and else_st.live:
            then_extra = then_st.hyps[base:]
            else_extra = else_st.hyps[base:]
            if then_extra:
                st.hyps.append(T.implies(c, T.and_(*then_extra)))
            if else_extra:
                st.hyps.append(T.implies(T.not_(c), T.and_(*else_extra)))
            for var in st.env:
                a, b = then_st.env[var], else_st.env[var]
                if a != st.env[var] or b != st.env[var]:
                    merged = self.fresh(var)
                    st.hyps.append(T.eq(merged, T.ite(c, a, b)))
                    st.env[var] = merged
        elif then_st.live or else_st.live:
            survivor = then_st if then_st.live else else_st
            st.env, st.hyps = survivor.env, survivor.hyps
        else:
            st.live = False

    def while_loop(self, s: A.While, st: _State):
        for inv in s.invariants:
            self.query(st, "inv-init", self.expr(inv, st, "spec"), inv.span,
                       f"invariant `{_show(inv)}` on loop entry")
        havoc = []
        for var in _assigned_in_order(s.body):
            if var in st.env:
                c = self.fresh(var)
                st.env[var] = c
                havoc.append(c.name)
                self.assume(st, T.in_range(self.finfo.types[var], c))
        self.ssa.havoc.append(havoc)
        for inv in s.invariants:
            st.hyps.append(self.expr(inv, st, "spec"))
        cond = self.expr(s.cond, st, self.ctx())
        body = st.copy()
        body.hyps.append(cond)
        self.block(s.body, body)
        if body.live:
            for inv in s.invariants:
                self.query(body, "inv-preserve", self.expr(inv, body, "spec"), inv.span,
                           f"invariant `{_show(inv)}` after an iteration")
        st.hyps.append(T.not_(cond))


def _assigned_in_order(stmts) -> list:
    out = []
    for s in A.walk_stmts(stmts):
        names = []
        if isinstance(s, A.Assign):
            names.append(s.name)
        for e in A.stmt_exprs(s):
            for c in A.calls_in(e):
                names.extend(a.expr.name for a in c.args if a.passing == "mut" and isinstance(a.expr, A.Name))
        for n in names:
            if n not in out:
                out.append(n)
    return out


def _statically_in_range(t: T.Term, ty: str, low: _FunctionLowering, call: A.Call) -> bool:
    """True when an argument term needs no range obligation for a parameter of type ``ty``."""
    if ty in ("int", "bool"):
        return True
    if isinstance(t, T.Lit):
        lo, hi = A.type_range(ty)
        return (lo is None or t.value >= lo) and (hi is None or t.value <= hi)
    if isinstance(t, T.Const):
        if t.ty == ty or t.ty in A.MACHINE_WIDTHS and ty == "nat":
            return True
        if t.ty in A.MACHINE_WIDTHS and ty in A.MACHINE_WIDTHS:
            return A.MACHINE_WIDTHS[t.ty] <= A.MACHINE_WIDTHS[ty]
    if isinstance(t, T.App) and t.op.endswith(T.SPEC_SUFFIX):
        spec = low.theory.spec_by_symbol(t.op)
        return spec is not None and spec.ret == ty
    return False


def _show(e) -> str:
    from .printer import render_expr

    return render_expr(e)


# -- program level ------------------------------------------------------------------------------


class VCGen:
    def __init__(self, prog: A.SurfaceProgram, info: Optional[ProgramInfo] = None, fuel_default: int = 1):
        self.prog = prog
        self.info = info if info is not None else analyze(prog)[1]
        self.fuel_default = fuel_default
        self.theory = self.build_theory()

    def measure(self, fn: A.Function, args: list) -> T.Term:
        low = _FunctionLowering(self, fn)
        env = {p.name: a for p, a in zip(fn.params, args)}
        return low.expr(fn.decreases, _State(env, [], {}), "spec")

    def _translate(self, fn: A.Function, e, env: dict, entry: Optional[dict] = None) -> T.Term:
        low = _FunctionLowering(self, fn)
        if entry is not None:
            low.entry = dict(entry)
        else:
            low.entry = {p.name: env[p.name] for p in fn.params if p.name in env}
            for p in fn.params:
                if p.passing == "mut":
                    low.entry[p.name] = _param_const(p)
        return low.expr(e, _State(env, [], {}), "spec")

    def build_theory(self) -> Theory:
        th = Theory(order=[f.name for f in self.prog.functions])
        self.theory = th
        for f in self.prog.functions:
            if f.mode != "spec":
                continue
            params = tuple(T.Const(p.name + "@", p.ty) for p in f.params)
            env = {p.name: c for p, c in zip(f.params, params)}
            body = block_as_expr(f.body)
            th.specs[f.name] = SpecDef(
                f.name, params, f.ret, self._translate(f, body, env),
                recursive=f.name in self.info.cycles.get(f.name, ()),
            )
        for f in self.prog.functions:
            if f.mode == "spec" or not (f.requires or f.ensures):
                continue
            req_params = tuple(_param_const(p) for p in f.params)
            env = {p.name: c for p, c in zip(f.params, req_params)}
            req = T.and_(*(self._translate(f, r, env) for r in f.requires)) if f.requires else None
            ens_params = []
            post_env = {}
            ranges = []
            for p in f.params:
                ens_params.append(_param_const(p))
                post_env[p.name] = _param_const(p)
                if p.passing == "mut":
                    c = _post_const(p)
                    ens_params.append(c)
                    post_env[p.name] = c
                    ranges.append(T.in_range(p.ty, c))
            if f.ret is not None:
                r = T.Const((f.ret_name or "result") + "@", f.ret)
                ens_params.append(r)
                post_env[f.ret_name or "result"] = r
            ens = None
            if f.ensures:
                ens = T.and_(*ranges, *(self._translate(f, e, post_env) for e in f.ensures))
            th.contracts[f.name] = Contract(f.name, req_params, req, tuple(ens_params), ens)
        return th

    def lower(self, fn: A.Function) -> _FunctionLowering:
        low = _FunctionLowering(self, fn)
        low.run()
        return low

    def function_queries(self, fn: A.Function) -> list:
        return self.lower(fn).queries

    def all_queries(self) -> list:
        out = []
        for f in self.prog.functions:
            out.extend(self.function_queries(f))
        return out


def lower_ssa(prog: A.SurfaceProgram, fn_name: str) -> SSAFunction:
    gen = VCGen(prog)
    return gen.lower(prog.lookup(fn_name)).ssa


def vcgen(prog: A.SurfaceProgram, fn_name: Optional[str] = None, fuel_default: int = 1) -> list:
    """Queries for one function, or for the whole program when ``fn_name`` is None."""
    gen = VCGen(prog, fuel_default=fuel_default)
    if fn_name is None:
        return gen.all_queries()
    return gen.function_queries(prog.lookup(fn_name))


def check_decreases_query_shape(prog: A.SurfaceProgram, fn_name: str) -> list:
    return [q for q in vcgen(prog, fn_name) if q.kind == "decreases"]
