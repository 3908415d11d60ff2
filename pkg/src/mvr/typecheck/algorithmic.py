"""Algorithmic checker: threads linear resources through a term.

Instead of guessing environment splits, the checker walks subexpressions in
evaluation order with a single state (variable environment plus permission
environment). Using a linear binding directly consumes it: the binding is
demoted to a spec binding, which is exactly what later siblings would have
received from a split. A linear binding read where spec is demanded is the
spec copy that a split provides, so it is not consumed. Borrowing happens only
where a seq/let carries an explicit ``(borrow ...)`` clause.

Rule alternatives (direct use vs. spec copy of a variable, main vs. dead-end
permission and function rules, the mode+usage of literals, the access level
of if-let branches) are explored lazily with generators; the first complete
success wins, so results are deterministic. Failures are recorded with the
rule that rejected them, and the one furthest into the term is reported.

Bodies of dead-end function literals are checked lax. Lax typing threads no
resources and reads only variable types, so it is the same syntax-directed
set computation as the declarative lax judgment and is delegated to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from ..calculus.sexpr import print_type
from ..calculus.syntax import (
    INT,
    MODE_USAGES,
    MODES,
    NEVER,
    UNIT,
    Add,
    App,
    Callability,
    Copy,
    CrashNever,
    DeclTable,
    Default,
    Drop,
    Expr,
    HWrite,
    IfLet,
    Lambda,
    Let,
    LetStruct,
    Lifetime,
    Mode,
    ModeUsage,
    NoneLit,
    PData,
    PermLit,
    PRead,
    PWrite,
    Seq,
    SomeE,
    Struct,
    TFn,
    TOption,
    TPerm,
    TStruct,
    Type,
    Usage,
    Var,
    is_unrestricted,
    join_mode_usage,
    lifetime_of,
    mode_leq,
    outlives_static,
)
from ..calculus.ops import children
from .declarative import Declarative
from .diagnostics import Diagnostic
from .env import env_key
from .types import is_copyable, nonspec_function_modes, wf_closed


@dataclass(frozen=True)
class State:
    """Variable environment, permission environment, and what was consumed."""

    g: tuple  # sorted (name, (mu, type))
    p: tuple  # sorted (index, usage)
    used: frozenset = frozenset()  # names and ("perm", i) consumed so far

    @staticmethod
    def of(g: dict, p: dict) -> "State":
        return State(env_key(g), env_key(p))

    @property
    def gd(self) -> dict:
        return dict(self.g)

    @property
    def pd(self) -> dict:
        return dict(self.p)

    def with_g(self, g: dict, used=None) -> "State":
        return State(env_key(g), self.p, self.used if used is None else used)

    def with_p(self, p: dict, used=None) -> "State":
        return State(self.g, env_key(p), self.used if used is None else used)

    def lookup(self, x: str):
        for k, v in self.g:
            if k == x:
                return v
        return None

    def consume_var(self, x: str) -> "State":
        g = self.gd
        g[x] = (ModeUsage.SPEC, g[x][1])
        return State(env_key(g), self.p, self.used | {x})

    def consume_perm(self, i: int) -> "State":
        p = self.pd
        del p[i]
        return State(self.g, env_key(p), self.used | {("perm", i)})

    def key(self):
        return (self.g, self.p)


@dataclass
class AlgorithmicVerdict:
    ok: bool
    mu: Optional[ModeUsage] = None
    ty: Optional[Type] = None
    consumed: frozenset = frozenset()
    diagnostic: Optional[Diagnostic] = None

    @property
    def result(self):
        return (self.mu, self.ty) if self.ok else None


def _fmt(mu, t) -> str:
    return f"{mu} {print_type(t)}"


class Algorithmic:
    def __init__(self, decls: DeclTable, heap_type: Type):
        self.decls = decls
        self.heap_type = heap_type
        self._pos: dict = {}
        self._best = None  # (position, order, Diagnostic)
        self._order = 0
        # lax typing is syntax directed and resource free, so it is computed as a set
        self._lax = Declarative(decls, heap_type)

    # -- diagnostics ---------------------------------------------------------

    def fail(self, rule: str, e: Expr, message: str):
        pos = self._pos.get(id(e), -1)
        self._order += 1
        if self._best is None or pos >= self._best[0]:
            self._best = (pos, self._order, Diagnostic(rule, getattr(e, "span", None), message))

    def _index(self, root: Expr):
        self._pos = {}
        stack = [root]
        while stack:
            e = stack.pop()
            self._pos[id(e)] = len(self._pos)
            stack.extend(reversed(children(e)))

    # -- entry point ---------------------------------------------------------

    def check(self, e: Expr, p: dict, g: dict, m: Mode, expected=None) -> AlgorithmicVerdict:
        self._index(e)
        self._best = None
        st0 = State.of(g, p)
        for mu, t, st in self.t(e, st0, m, False):
            if expected is not None and (mu, t) != tuple(expected):
                self.fail("expect", e, f"expected {_fmt(*expected)}, found {_fmt(mu, t)}")
                continue
            left = self._unconsumed(st)
            if left:
                self.fail("Fig9.unconsumed", e, f"linear {left} never consumed")
                continue
            return AlgorithmicVerdict(True, mu, t, st.used)
        diag = self._best[2] if self._best else Diagnostic("Fig11.config", getattr(e, "span", None),
                                                           "no typing found")
        return AlgorithmicVerdict(False, diagnostic=diag)

    @staticmethod
    def _unconsumed(st: State) -> str:
        names = [x for x, (mu, _) in st.g if mu.is_linear]
        perms = [f"permission {i}" for i, u in st.p if u is Usage.LINEAR]
        return ", ".join(names + perms)

    # -- helpers -------------------------------------------------------------

    def wf(self, t: Type) -> bool:
        return wf_closed(self.decls, t)

    def _enter(self, st: State, x: str, entry):
        old = st.lookup(x)
        g = st.gd
        g[x] = entry
        return st.with_g(g), old

    def _exit(self, st: State, x: str, old, binder: Expr) -> Optional[State]:
        mu, _ = st.lookup(x)
        if mu.is_linear:
            self.fail("Fig9.unconsumed", binder, f"linear binding {x} is never consumed in its scope")
            return None
        g = st.gd
        if old is None:
            del g[x]
        else:
            g[x] = old
        return st.with_g(g)

    # -- rules ---------------------------------------------------------------

    def t(self, e: Expr, st: State, m: Mode, lax: bool = False) -> Iterator:
        if lax:
            return self._t_lax(e, st, m)
        meth = getattr(self, "_" + type(e).__name__)
        return meth(e, st, m)

    def _t_lax(self, e: Expr, st: State, m: Mode) -> Iterator:
        results = self._lax.lax(e, {x: t for x, (_, t) in st.g}, m)
        if not results:
            self.fail("Fig9.lax", e, f"no lax typing at access level {m}")
        for mu, t in sorted(results, key=lambda r: (MODE_USAGES.index(r[0]), print_type(r[1]))):
            yield mu, t, st

    def _Var(self, e: Var, st, m):
        entry = st.lookup(e.name)
        if entry is None:
            self.fail("Fig10.var", e, f"unbound variable {e.name}")
            return
        mu, t = entry
        if mu is ModeUsage.SPEC and e.name in st.used:
            self.fail("Fig9.split", e, f"linear binding {e.name} was already consumed; only a spec copy remains")
        if mu is not ModeUsage.SPEC and mode_leq(m, mu.mode):
            yield mu, t, (st.consume_var(e.name) if mu.is_linear else st)
        elif mu is not ModeUsage.SPEC:
            self.fail("Fig10.var", e, f"{e.name} has mode {mu.mode}, below access level {m}")
        yield ModeUsage.SPEC, t, st

    def _IntLit(self, e, st, m):
        for mu in MODE_USAGES:
            yield mu, INT, st

    def _UnitLit(self, e, st, m):
        for mu in MODE_USAGES:
            yield mu, UNIT, st

    def _Bottom(self, e, st, m):
        yield ModeUsage.SPEC, NEVER, st

    def _Default(self, e: Default, st, m):
        if not self.wf(e.ty):
            self.fail("Fig10.default", e, f"type {print_type(e.ty)} is not well formed")
            return
        yield ModeUsage.SPEC, e.ty, st

    def _NoneLit(self, e: NoneLit, st, m):
        if not self.wf(e.ty):
            self.fail("Fig10.option", e, f"type {print_type(e.ty)} is not well formed")
            return
        for mu in MODE_USAGES:
            yield mu, TOption(e.ty), st

    def _exec_only(self, e, m, rule) -> bool:
        if m is not Mode.EXEC:
            self.fail(rule, e, f"{rule.split('.')[1]} requires access level exec, found {m}")
            return False
        return True

    def _HData(self, e, st, m):
        if self._exec_only(e, m, "Fig10.hdata"):
            yield ModeUsage.SPEC, self.heap_type, st

    def _HRead(self, e, st, m):
        if self._exec_only(e, m, "Fig10.hread"):
            yield ModeUsage.EXEC_LINEAR, self.heap_type, st

    def _HWrite(self, e: HWrite, st, m):
        if not self._exec_only(e, m, "Fig10.hwrite"):
            return
        for mu, t, st2 in self.t(e.arg, st, m):
            if (mu, t) == (ModeUsage.EXEC_LINEAR, self.heap_type):
                for mu_r in MODE_USAGES:
                    yield mu_r, UNIT, st2
            else:
                self.fail("Fig10.hwrite", e, f"hwrite needs exec-linear {print_type(self.heap_type)}, "
                          f"found {_fmt(mu, t)}")

    def _CrashNever(self, e: CrashNever, st, m):
        for mu, t, st2 in self.t(e.arg, st, m):
            if t == NEVER and mu is not ModeUsage.SPEC:
                yield mu, UNIT, st2
            else:
                self.fail("Fig10.crash_never", e, f"crash_never needs a non-spec Never, found {_fmt(mu, t)}")

    def _PermLit(self, e: PermLit, st, m):
        p = st.pd
        if e.index in p:
            u = p[e.index]
            del p[e.index]
            inner = st.with_p(p)
            for mu, t, st2 in self.t(e.value, inner, m):
                if st2.key() != inner.key():
                    continue
                if mu is ModeUsage.EXEC_LINEAR and is_copyable(self.decls, Mode.EXEC, t):
                    out = st.consume_perm(e.index) if u is Usage.LINEAR else st
                    yield ModeUsage.of(Mode.PROOF, u), TPerm(e.index, t), out
                    break
                self.fail("Fig10.permission", e, f"permission payload must be exec-linear and copyable, "
                          f"found {_fmt(mu, t)}")
        elif ("perm", e.index) in st.used:
            self.fail("Fig9.split", e, f"linear permission {e.index} was already consumed")
        else:
            self.fail("Fig10.permission", e, f"permission {e.index} is not in the permission environment")
        # dead-end rule: a spec view of the literal that touches no permission
        seen = set()
        for _, t, st2 in self.t(e.value, st, m):
            if st2.key() == st.key() and t not in seen:
                seen.add(t)
                yield ModeUsage.SPEC, TPerm(e.index, t), st

    def _PData(self, e: PData, st, m):
        for mu, t, st2 in self.t(e.perm, st, m):
            if mu is ModeUsage.SPEC and isinstance(t, TPerm):
                yield ModeUsage.SPEC, t.inner, st2
            else:
                self.fail("Fig10.pdata", e, f"pdata needs a spec permission, found {_fmt(mu, t)}")

    def _PRead(self, e: PRead, st, m):
        if not self._exec_only(e, m, "Fig10.pread"):
            return
        for mu, t, st2 in self.t(e.perm, st, m):
            if mu is ModeUsage.PROOF_SHARED and isinstance(t, TPerm) and t.index == e.index:
                yield ModeUsage.EXEC_SHARED, t.inner, st2
            else:
                self.fail("Fig10.pread", e, f"pread {e.index} needs a proof-shared permission {e.index}, "
                          f"found {_fmt(mu, t)}")

    def _PWrite(self, e: PWrite, st, m):
        if not self._exec_only(e, m, "Fig10.pwrite"):
            return
        for mu_v, t_v, st1 in self.t(e.value, st, m):
            if not (mu_v is ModeUsage.EXEC_LINEAR and is_copyable(self.decls, Mode.EXEC, t_v)):
                self.fail("Fig10.pwrite", e, f"written value must be exec-linear and copyable, "
                          f"found {_fmt(mu_v, t_v)}")
                continue
            for mu_p, t_p, st2 in self.t(e.perm, st1, m):
                if mu_p is ModeUsage.PROOF_LINEAR and isinstance(t_p, TPerm) and t_p.index == e.index:
                    yield ModeUsage.PROOF_LINEAR, TPerm(e.index, t_v), st2
                else:
                    self.fail("Fig10.pwrite", e, f"pwrite {e.index} needs a proof-linear permission "
                              f"{e.index}, found {_fmt(mu_p, t_p)}")

    def _Drop(self, e: Drop, st, m):
        for mu, t, st2 in self.t(e.arg, st, m):
            if mu.is_linear and is_copyable(self.decls, mu.mode, t):
                yield mu.with_usage(Usage.SHARED), UNIT, st2
            else:
                self.fail("Fig10.drop", e, f"drop needs a linear copyable value, found {_fmt(mu, t)}")

    def _Copy(self, e: Copy, st, m):
        for mu, t, st2 in self.t(e.arg, st, m):
            if mu.is_shared and is_copyable(self.decls, mu.mode, t):
                yield mu.with_usage(Usage.LINEAR), t, st2
            else:
                self.fail("Fig10.copy", e, f"copy needs a shared copyable value, found {_fmt(mu, t)}")

    def _Add(self, e: Add, st, m):
        for mu1, t1, st1 in self.t(e.left, st, m):
            if t1 != INT:
                self.fail("Fig10.add", e, f"left operand has type {print_type(t1)}")
                continue
            for mu2, t2, st2 in self.t(e.right, st1, m):
                if (mu2, t2) == (mu1, INT):
                    yield mu1, INT, st2
                    break
            else:
                self.fail("Fig10.add", e, f"right operand does not type at {mu1} int")

    def _SomeE(self, e: SomeE, st, m):
        for mu, t, st2 in self.t(e.arg, st, m):
            if t == e.ty:
                yield mu, TOption(e.ty), st2
            else:
                self.fail("Fig10.option", e, f"Some payload has type {print_type(t)}, "
                          f"annotation says {print_type(e.ty)}")

    # seq / let with optional borrowing

    def _borrow(self, e, st: State, rule: str):
        """Return (state for the first part, restore function) or None."""
        b = e.borrow
        if b is None or b.empty:
            return st, lambda s: s
        g, p = st.gd, st.pd
        for x in b.names:
            entry = g.get(x)
            if entry is None or not entry[0].is_linear:
                self.fail(rule, e, f"cannot borrow {x}: not an unconsumed linear binding")
                return None
            g[x] = (entry[0].with_usage(Usage.SHARED), entry[1])
        for i in b.perms:
            if p.get(i) is not Usage.LINEAR:
                self.fail(rule, e, f"cannot borrow permission {i}: not an unconsumed linear permission")
                return None
            p[i] = Usage.SHARED
        saved_g = {x: st.lookup(x) for x in b.names}

        def restore(s: State) -> State:
            g2, p2 = s.gd, s.pd
            g2.update(saved_g)
            for i in b.perms:
                p2[i] = Usage.LINEAR
            return State(env_key(g2), env_key(p2), s.used)

        return State(env_key(g), env_key(p), st.used), restore

    def _Seq(self, e: Seq, st, m):
        br = self._borrow(e, st, "Fig10.seq")
        if br is None:
            return
        st1, restore = br
        seen = set()
        for mu1, t1, s in self.t(e.first, st1, m):
            if t1 != UNIT:
                self.fail("Fig10.seq", e, f"first part of seq must have type Unit, found {print_type(t1)}")
                continue
            s = restore(s)
            if s.key() in seen:
                continue
            seen.add(s.key())
            yield from self.t(e.second, s, m)

    def _Let(self, e: Let, st, m):
        if not mode_leq(m, e.mode):
            self.fail("Fig10.let", e, f"let {e.mode} is below access level {m}")
            return
        br = self._borrow(e, st, "Fig10.let")
        if br is None:
            return
        st1, restore = br
        borrowing = e.borrow is not None and not e.borrow.empty
        for mu1, t1, s in self.t(e.bound, st1, m):
            if mu1.mode is not e.mode:
                self.fail("Fig10.let", e, f"let {e.mode} {e.name} binds a value of mode {mu1.mode}")
                continue
            if borrowing and not is_unrestricted(mu1, t1):
                self.fail("Fig10.let", e, f"let under a borrow must bind an unrestricted value, "
                          f"found {_fmt(mu1, t1)}")
                continue
            s = restore(s)
            s, old = self._enter(s, e.name, (mu1, t1))
            for mu2, t2, s2 in self.t(e.body, s, m):
                if not outlives_static(mu2.mode, t2):
                    self.fail("Fig10.let", e, f"let result {_fmt(mu2, t2)} must have static lifetime")
                    continue
                s3 = self._exit(s2, e.name, old, e)
                if s3 is not None:
                    yield mu2, t2, s3

    def _IfLet(self, e: IfLet, st, m):
        for mu1, t1, s1 in self.t(e.scrutinee, st, m):
            if not isinstance(t1, TOption):
                self.fail("Fig10.iflet", e, f"scrutinee has type {print_type(t1)}, not an Option")
                continue
            for mb in MODES:
                if not mode_leq(m, mb):
                    continue
                if not (mode_leq(mu1.mode, mb) or (mu1.mode is Mode.SPEC and mb is Mode.PROOF)):
                    self.fail("Fig10.iflet", e, f"a {mu1.mode} scrutinee cannot be matched at access {mb}")
                    continue
                sx, old = self._enter(s1, e.name, (mu1, t1.inner))
                for mu2, t2, s2 in self.t(e.then, sx, mb):
                    s2 = self._exit(s2, e.name, old, e)
                    if s2 is None:
                        continue
                    found = False
                    for mu3, t3, s3 in self.t(e.orelse, s1, mb):
                        if (mu3, t3) == (mu2, t2) and s3.key() == s2.key():
                            found = True
                            yield mu2, t2, State(s2.g, s2.p, s2.used | s3.used)
                            break
                    if not found:
                        self.fail("Fig10.iflet", e, f"branches disagree: then-branch gives {_fmt(mu2, t2)} "
                                  "or consumes different linear bindings")

    def _Struct(self, e: Struct, st, m):
        decl = self.decls.lookup(e.name)
        if decl is None or len(decl.fields) != len(e.args):
            self.fail("Fig11.struct", e, f"unknown datatype {e.name} or wrong field count")
            return
        for mu in MODE_USAGES:
            for s in self._fields(e, decl.fields, 0, mu, st, m):
                yield mu, TStruct(e.name), s
                break

    def _fields(self, e, fields, k, mu, st, m):
        if k == len(fields):
            yield st
            return
        fm, ft = fields[k]
        want = (join_mode_usage(fm, mu), ft)
        for mu_k, t_k, s in self.t(e.args[k], st, m):
            if (mu_k, t_k) == want:
                yield from self._fields(e, fields, k + 1, mu, s, m)

    def _LetStruct(self, e: LetStruct, st, m):
        decl = self.decls.lookup(e.name)
        if decl is None or len(decl.fields) != len(e.binders):
            self.fail("Fig11.letstruct", e, f"unknown datatype {e.name} or wrong binder count")
            return
        for mu0, t0, s0 in self.t(e.bound, st, m):
            if t0 != TStruct(e.name):
                self.fail("Fig11.letstruct", e, f"destructured value has type {print_type(t0)}")
                continue
            s, olds = s0, []
            for x, (fm, ft) in zip(e.binders, decl.fields):
                s, old = self._enter(s, x, (join_mode_usage(fm, mu0), ft))
                olds.append(old)
            for mu_b, t_b, s2 in self.t(e.body, s, m):
                if not outlives_static(mu_b.mode, t_b):
                    self.fail("Fig11.letstruct", e, f"result {_fmt(mu_b, t_b)} must have static lifetime")
                    continue
                for x, old in zip(reversed(e.binders), reversed(olds)):
                    s2 = self._exit(s2, x, old, e) if s2 is not None else None
                if s2 is not None:
                    yield mu_b, t_b, s2

    # functions

    def _body_state(self, e: Lambda, st: State):
        """Body environment per the function body context, or None."""
        g, p = st.gd, st.pd
        o, l = e.callability, e.lifetime
        if o is Callability.ONCE and l is Lifetime.RESTRICTED:
            return g, p
        if o is Callability.MANY:
            spec_g = {x: (ModeUsage.SPEC, t) for x, (_, t) in g.items()}
            if l is Lifetime.STATIC:
                return spec_g, {}
            gb = {x: ((ModeUsage.SPEC, t) if mu.is_linear else (mu, t)) for x, (mu, t) in g.items()}
            return gb, {i: u for i, u in p.items() if u is Usage.SHARED}
        gb = {}
        for x, (mu, t) in g.items():
            keep = mu.is_linear and lifetime_of(t) is Lifetime.STATIC
            gb[x] = (mu, t) if keep else (ModeUsage.SPEC, t)
        return gb, {i: u for i, u in p.items() if u is Usage.LINEAR}

    def _Lambda(self, e: Lambda, st, m):
        if not self.wf(e.param_ty):
            self.fail("Fig11.lambda", e, f"parameter type {print_type(e.param_ty)} is not well formed")
            return
        m_f = e.mode

        def fn_type(mu_b, t_b):
            return TFn(m_f, e.callability, e.lifetime, e.param_mu, e.param_ty, mu_b, t_b)

        if m_f is Mode.SPEC:
            if not (e.callability is Callability.MANY and e.lifetime is Lifetime.STATIC
                    and e.param_mu is ModeUsage.SPEC):
                self.fail("Fig11.lambda", e, "a spec function literal must be Many, static, with a spec parameter")
                return
            g = {x: ((ModeUsage.SPEC, t) if mu.is_linear else (mu, t)) for x, (mu, t) in st.g}
            g[e.param] = (ModeUsage.SPEC, e.param_ty)
            p = {i: u for i, u in st.p if u is Usage.SHARED}
            for mu_b, t_b, _ in self.t(e.body, State.of(g, p), Mode.SPEC):
                if mu_b is ModeUsage.SPEC:
                    yield ModeUsage.SPEC, fn_type(mu_b, t_b), st
                    return
            self.fail("Fig11.lambda", e, "spec function body must have mode spec")
            return

        # main rule
        g_b, p_b = self._body_state(e, st)
        g_b = dict(g_b)
        g_b[e.param] = (e.param_mu, e.param_ty)
        usages = [Usage.LINEAR] if e.callability is Callability.ONCE else [Usage.LINEAR, Usage.SHARED]
        body_st = State(env_key(g_b), env_key(p_b), frozenset())
        for mu_b, t_b, s_b in self.t(e.body, body_st, m_f):
            if not nonspec_function_modes(m_f, e.param_mu, mu_b, t_b):
                self.fail("Fig9.nonspec-modes", e, f"function mode {m_f} with parameter {e.param_mu} and "
                          f"result {_fmt(mu_b, t_b)} violates the nonspec function mode conditions")
                continue
            if s_b.lookup(e.param)[0].is_linear:
                self.fail("Fig9.unconsumed", e, f"linear parameter {e.param} is never consumed")
                continue
            out = st
            body_p = dict(s_b.p)
            for x, (mu, _) in body_st.g:
                if x != e.param and mu.is_linear and not s_b.lookup(x)[0].is_linear:
                    out = out.consume_var(x)
            for i, u in body_st.p:
                if u is Usage.LINEAR and i not in body_p:
                    out = out.consume_perm(i)
            left = [x for x, (mu, _) in s_b.g if mu.is_linear and x != e.param]
            left += [f"permission {i}" for i, u in s_b.p if u is Usage.LINEAR]
            if e.callability is Callability.MANY and left:
                continue
            for u in usages:
                yield ModeUsage.of(m_f, u), fn_type(mu_b, t_b), out

        # dead-end rules: body checked lax against a linear-free capture
        g_d = {x: ((ModeUsage.SPEC, t) if mu.is_linear else (mu, t)) for x, (mu, t) in st.g}
        g_d[e.param] = (e.param_mu, e.param_ty)
        p_d = {i: u for i, u in st.p if u is Usage.SHARED}
        for mu_b, t_b, _ in self.t(e.body, State.of(g_d, p_d), m_f, True):
            if nonspec_function_modes(m_f, e.param_mu, mu_b, t_b):
                yield ModeUsage.SPEC, fn_type(mu_b, t_b), st
                if e.callability is Callability.ONCE:
                    yield ModeUsage.of(m_f, Usage.SHARED), fn_type(mu_b, t_b), st

    def _App(self, e: App, st, m):
        for mu1, tf, s1 in self.t(e.fn, st, m):
            if not isinstance(tf, TFn):
                self.fail("Fig11.app", e, f"applied expression has type {print_type(tf)}")
                continue
            if tf.callability is Callability.ONCE and not mu1.is_linear:
                self.fail("Fig11.app", e, f"a Once function must be linear to be called, found {mu1}")
                continue
            if not mode_leq(mu1.mode, tf.mode):
                self.fail("Fig11.app", e, f"function value of mode {mu1.mode} cannot call a {tf.mode} function")
                continue
            if not mode_leq(m, tf.mode):
                self.fail("Fig11.app", e, f"cannot call a {tf.mode} function at access level {m}")
                continue
            for mu_a, t_a, s2 in self.t(e.arg, s1, m):
                if (mu_a, t_a) == (tf.arg_mu, tf.arg):
                    yield tf.res_mu, tf.res, s2
                    break
            else:
                self.fail("Fig11.app", e, f"argument does not type at {_fmt(tf.arg_mu, tf.arg)}")


def typecheck_algorithmic(decls: DeclTable, heap_type: Type, p: dict, g: dict, m: Mode, e: Expr,
                          expected=None) -> AlgorithmicVerdict:
    return Algorithmic(decls, heap_type).check(e, p, g, m, expected)
