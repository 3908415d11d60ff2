"""Declarative checker: computes every (mode+usage, type) derivable for a term.

The search enumerates environment splits, borrow sets, access levels for
if-let branches, and every applicable rule, including the dead-end rules. It
is exponential by construction and exists as an oracle for the algorithmic
checker and the metatheory sweeps.

Two facts keep the search finite and reasonably small:

* in strict mode a linear variable or permission that does not occur in the
  term cannot be consumed by any leaf, so the judgment fails outright;
  nonlinear bindings that do not occur are irrelevant and are dropped before
  memoization;
* in lax mode the weakening rule lets any subderivation pick its own
  permission environment and binding modes, so lax judgments depend only on
  the variable types.
"""

from __future__ import annotations

from itertools import product
from typing import Optional

from ..calculus.ops import free_vars, perm_indices, size
from ..calculus.syntax import (
    INT,
    MODE_USAGES,
    MODES,
    NEVER,
    UNIT,
    Add,
    App,
    Bottom,
    Callability,
    Copy,
    CrashNever,
    DeclTable,
    Default,
    Drop,
    Expr,
    HData,
    HRead,
    HWrite,
    IfLet,
    IntLit,
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
    UnitLit,
    Usage,
    Var,
    is_unrestricted,
    join_mode_usage,
    mode_leq,
    outlives_static,
)
from .diagnostics import CheckFailure
from .env import env_key
from .types import function_body_context, is_copyable, nonspec_function_modes, wf_closed

EMPTY = frozenset()
DEFAULT_MAX_SIZE = 24


def _all_mu(t: Type) -> frozenset:
    return frozenset((mu, t) for mu in MODE_USAGES)


def usage_closure(results) -> frozenset:
    out = set()
    for mu, t in results:
        for mu2 in MODE_USAGES:
            if mu2.mode is mu.mode:
                out.add((mu2, t))
    return frozenset(out)


def _mu_at_least(m: Mode) -> tuple:
    return tuple(mu for mu in MODE_USAGES if mode_leq(m, mu.mode))


class OversizeTerm(ValueError):
    pass


class Declarative:
    def __init__(self, decls: DeclTable, heap_type: Type, max_size: int = DEFAULT_MAX_SIZE):
        self.decls = decls
        self.heap_type = heap_type
        self.max_size = max_size
        self._strict: dict = {}
        self._lax: dict = {}
        self._wf: dict = {}
        self._copy: dict = {}

    # -- helpers -------------------------------------------------------------

    def wf(self, t: Type) -> bool:
        r = self._wf.get(t)
        if r is None:
            r = self._wf[t] = wf_closed(self.decls, t)
        return r

    def copyable(self, m: Mode, t: Type) -> bool:
        key = (m, t)
        r = self._copy.get(key)
        if r is None:
            r = self._copy[key] = is_copyable(self.decls, m, t)
        return r

    # -- entry points --------------------------------------------------------

    def derive(self, e: Expr, p: dict, g: dict, m: Mode, strict: bool = True) -> frozenset:
        if size(e) > self.max_size:
            raise OversizeTerm(f"term of size {size(e)} exceeds the declarative bound {self.max_size}")
        if not strict:
            return self.lax(e, {x: t for x, (_, t) in g.items()}, m)
        return self.strict(e, p, g, m)

    def strict(self, e: Expr, p: dict, g: dict, m: Mode, memo: bool = True) -> frozenset:
        fv = free_vars(e)
        idx = perm_indices(e)
        for x, (mu, _) in g.items():
            if mu.is_linear and x not in fv:
                return EMPTY
        for i, u in p.items():
            if u is Usage.LINEAR and i not in idx:
                return EMPTY
        gk = env_key({x: v for x, v in g.items() if x in fv})
        pk = env_key({i: u for i, u in p.items() if i in idx})
        key = (e, pk, gk, m)
        r = self._strict.get(key)
        if r is None:
            r = self._rule_strict(e, dict(pk), dict(gk), m)
            if memo:
                self._strict[key] = r
        return r

    def lax(self, e: Expr, tyenv: dict, m: Mode) -> frozenset:
        fv = free_vars(e)
        tk = env_key({x: t for x, t in tyenv.items() if x in fv})
        key = (e, tk, m)
        r = self._lax.get(key)
        if r is None:
            r = self._lax[key] = usage_closure(self._rule_lax(e, dict(tk), m))
        return r

    # -- splitting -----------------------------------------------------------

    def _splits(self, p: dict, g: dict, parts: list, borrow: bool = False):
        """Yield (envs, borrowed_g, borrowed_p) where envs[k] = (p_k, g_k).

        ``parts`` lists the free-variable and permission-index sets of the
        subterms; a linear resource is only ever sent to a part where it
        occurs. With ``borrow`` the resource may instead be borrowed, which
        is reported separately and not placed in any part.
        """
        lin_g = sorted(x for x, (mu, _) in g.items() if mu.is_linear)
        lin_p = sorted(i for i, u in p.items() if u is Usage.LINEAR)
        n = len(parts)
        choices_g = []
        for x in lin_g:
            opts = [k for k in range(n) if x in parts[k][0]]
            if borrow:
                opts.append(-1)
            if not opts:
                return
            choices_g.append(opts)
        choices_p = []
        for i in lin_p:
            opts = [k for k in range(n) if i in parts[k][1]]
            if borrow:
                opts.append(-1)
            if not opts:
                return
            choices_p.append(opts)
        base_g = {x: v for x, v in g.items() if not v[0].is_linear}
        base_p = {i: u for i, u in p.items() if u is not Usage.LINEAR}
        for gsel in product(*choices_g):
            for psel in product(*choices_p):
                envs = []
                for k in range(n):
                    gk = dict(base_g)
                    for x, side in zip(lin_g, gsel):
                        gk[x] = g[x] if side == k else (ModeUsage.SPEC, g[x][1])
                    pk = dict(base_p)
                    for i, side in zip(lin_p, psel):
                        if side == k:
                            pk[i] = Usage.LINEAR
                    envs.append((pk, gk))
                bg = {x: g[x] for x, side in zip(lin_g, gsel) if side == -1}
                bp = [i for i, side in zip(lin_p, psel) if side == -1]
                yield envs, bg, bp

    @staticmethod
    def _part(e: Expr, bound: tuple = ()) -> tuple:
        return (free_vars(e) - set(bound), perm_indices(e))

    @staticmethod
    def _bind(g: dict, name: str, entry) -> Optional[dict]:
        """Extend ``g``; shadowing a linear binding makes it unconsumable."""
        old = g.get(name)
        if old is not None and old[0].is_linear:
            return None
        out = dict(g)
        out[name] = entry
        return out

    # -- strict rules --------------------------------------------------------

    def _rule_strict(self, e: Expr, p: dict, g: dict, m: Mode) -> frozenset:
        # After normalisation ``g`` holds only variables free in ``e`` and
        # ``p`` only indices occurring in ``e``.
        leaf_ok = not any(mu.is_linear for mu, _ in g.values()) and Usage.LINEAR not in p.values()
        if isinstance(e, Var):
            if e.name not in g:
                return EMPTY
            mu_x, t_x = g[e.name]
            if not leaf_ok and not (mu_x.is_linear and Usage.LINEAR not in p.values()):
                return EMPTY
            out = set()
            if mode_leq(m, mu_x.mode):
                out.add((mu_x, t_x))
            if mu_x.is_shared:
                out.add((ModeUsage.SPEC, t_x))
            return frozenset(out)
        if isinstance(e, IntLit):
            return _all_mu(INT) if leaf_ok else EMPTY
        if isinstance(e, UnitLit):
            return _all_mu(UNIT) if leaf_ok else EMPTY
        if isinstance(e, Bottom):
            return frozenset({(ModeUsage.SPEC, NEVER)}) if leaf_ok else EMPTY
        if isinstance(e, Default):
            return frozenset({(ModeUsage.SPEC, e.ty)}) if leaf_ok and self.wf(e.ty) else EMPTY
        if isinstance(e, HData):
            ok = leaf_ok and m is Mode.EXEC
            return frozenset({(ModeUsage.SPEC, self.heap_type)}) if ok else EMPTY
        if isinstance(e, HRead):
            ok = leaf_ok and m is Mode.EXEC
            return frozenset({(ModeUsage.EXEC_LINEAR, self.heap_type)}) if ok else EMPTY
        if isinstance(e, NoneLit):
            return _all_mu(TOption(e.ty)) if leaf_ok and self.wf(e.ty) else EMPTY
        if isinstance(e, CrashNever):
            sub = self.strict(e.arg, p, g, m)
            return frozenset((mu, UNIT) for mu, t in sub if t == NEVER and mu is not ModeUsage.SPEC)
        if isinstance(e, HWrite):
            if m is not Mode.EXEC:
                return EMPTY
            sub = self.strict(e.arg, p, g, m)
            return _all_mu(UNIT) if (ModeUsage.EXEC_LINEAR, self.heap_type) in sub else EMPTY
        if isinstance(e, PData):
            sub = self.strict(e.perm, p, g, m)
            return frozenset((ModeUsage.SPEC, t.inner) for mu, t in sub
                             if mu is ModeUsage.SPEC and isinstance(t, TPerm))
        if isinstance(e, PRead):
            if m is not Mode.EXEC:
                return EMPTY
            sub = self.strict(e.perm, p, g, m)
            return frozenset((ModeUsage.EXEC_SHARED, t.inner) for mu, t in sub
                             if mu is ModeUsage.PROOF_SHARED and isinstance(t, TPerm)
                             and t.index == e.index)
        if isinstance(e, Drop):
            sub = self.strict(e.arg, p, g, m)
            return frozenset((mu.with_usage(Usage.SHARED), UNIT) for mu, t in sub
                             if mu.is_linear and self.copyable(mu.mode, t))
        if isinstance(e, Copy):
            sub = self.strict(e.arg, p, g, m)
            return frozenset((mu.with_usage(Usage.LINEAR), t) for mu, t in sub
                             if mu.is_shared and self.copyable(mu.mode, t))
        if isinstance(e, SomeE):
            sub = self.strict(e.arg, p, g, m)
            return frozenset((mu, TOption(e.ty)) for mu, t in sub if t == e.ty)
        if isinstance(e, PermLit):
            return self._perm_strict(e, p, g, m)
        if isinstance(e, Add):
            return self._add(e, p, g, m)
        if isinstance(e, PWrite):
            return self._pwrite(e, p, g, m)
        if isinstance(e, (Seq, Let)):
            return self._seq_let(e, p, g, m)
        if isinstance(e, IfLet):
            return self._iflet(e, p, g, m)
        if isinstance(e, Struct):
            return self._struct(e, p, g, m)
        if isinstance(e, LetStruct):
            return self._letstruct(e, p, g, m)
        if isinstance(e, Lambda):
            return self._lambda(e, p, g, m)
        if isinstance(e, App):
            return self._app(e, p, g, m)
        raise TypeError(f"unknown expression {e!r}")

    def _perm_strict(self, e: PermLit, p: dict, g: dict, m: Mode) -> frozenset:
        if any(mu.is_linear for mu, _ in g.values()):
            return EMPTY
        out = set()
        rest = {i: u for i, u in p.items() if i != e.index}
        rest_shared = Usage.LINEAR not in rest.values()
        if e.index in p and rest_shared:
            sub = self.strict(e.value, rest, g, m)
            for mu, t in sub:
                if mu is ModeUsage.EXEC_LINEAR and self.copyable(Mode.EXEC, t):
                    out.add((ModeUsage.of(Mode.PROOF, p[e.index]), TPerm(e.index, t)))
        if Usage.LINEAR not in p.values():
            for _, t in self.strict(e.value, p, g, m):
                out.add((ModeUsage.SPEC, TPerm(e.index, t)))
        return frozenset(out)

    def _add(self, e: Add, p, g, m) -> frozenset:
        out = set()
        for envs, _, _ in self._splits(p, g, [self._part(e.left), self._part(e.right)]):
            (p1, g1), (p2, g2) = envs
            s1 = self.strict(e.left, p1, g1, m)
            if not s1:
                continue
            s2 = self.strict(e.right, p2, g2, m)
            for mu, t in s1:
                if t == INT and (mu, INT) in s2:
                    out.add((mu, INT))
        return frozenset(out)

    def _pwrite(self, e: PWrite, p, g, m) -> frozenset:
        if m is not Mode.EXEC:
            return EMPTY
        out = set()
        for envs, _, _ in self._splits(p, g, [self._part(e.value), self._part(e.perm)]):
            (p1, g1), (p2, g2) = envs
            perm_ok = any(mu is ModeUsage.PROOF_LINEAR and isinstance(t, TPerm) and t.index == e.index
                          for mu, t in self.strict(e.perm, p2, g2, m))
            if not perm_ok:
                continue
            for mu, t in self.strict(e.value, p1, g1, m):
                if mu is ModeUsage.EXEC_LINEAR and self.copyable(Mode.EXEC, t):
                    out.add((ModeUsage.PROOF_LINEAR, TPerm(e.index, t)))
        return frozenset(out)

    def _seq_let(self, e, p, g, m) -> frozenset:
        is_let = isinstance(e, Let)
        first = e.bound if is_let else e.first
        second = e.body if is_let else e.second
        if is_let and not mode_leq(m, e.mode):
            return EMPTY
        bound = (e.name,) if is_let else ()
        out = set()
        parts = [self._part(first), self._part(second, bound)]
        for envs, bg, bp in self._splits(p, g, parts, borrow=True):
            (p1, g1), (p2, g2) = envs
            if is_let and e.name in bg:
                continue
            # borrowed resources: shared in the first part, linear in the second
            g1 = {**g1, **{x: (mu.with_usage(Usage.SHARED), t) for x, (mu, t) in bg.items()}}
            p1 = {**p1, **{i: Usage.SHARED for i in bp}}
            g2 = {**g2, **bg}
            p2 = {**p2, **{i: Usage.LINEAR for i in bp}}
            s1 = self.strict(first, p1, g1, m)
            if not s1:
                continue
            no_borrow = not bg and not bp
            for mu1, t1 in s1:
                if is_let:
                    if mu1.mode is not e.mode:
                        continue
                    if not (is_unrestricted(mu1, t1) or no_borrow):
                        continue
                    g2x = self._bind(g2, e.name, (mu1, t1))
                    if g2x is None:
                        continue
                    s2 = self.strict(second, p2, g2x, m)
                    out.update((mu2, t2) for mu2, t2 in s2 if outlives_static(mu2.mode, t2))
                elif t1 == UNIT:
                    out.update(self.strict(second, p2, g2, m))
                    break
        return frozenset(out)

    def _iflet(self, e: IfLet, p, g, m) -> frozenset:
        out = set()
        branch_part = (
            (free_vars(e.then) - {e.name}) | free_vars(e.orelse),
            perm_indices(e.then) | perm_indices(e.orelse),
        )
        for envs, _, _ in self._splits(p, g, [self._part(e.scrutinee), branch_part]):
            (p1, g1), (pb, gb) = envs
            for mu1, t1 in self.strict(e.scrutinee, p1, g1, m):
                if not isinstance(t1, TOption):
                    continue
                gx = self._bind(gb, e.name, (mu1, t1.inner))
                if gx is None:
                    continue
                for mb in MODES:
                    if not mode_leq(m, mb):
                        continue
                    if not (mode_leq(mu1.mode, mb) or (mu1.mode is Mode.SPEC and mb is Mode.PROOF)):
                        continue
                    s2 = self.strict(e.then, pb, gx, mb)
                    if s2:
                        out.update(s2 & self.strict(e.orelse, pb, gb, mb))
        return frozenset(out)

    def _struct(self, e: Struct, p, g, m) -> frozenset:
        decl = self.decls.lookup(e.name)
        if decl is None or len(decl.fields) != len(e.args):
            return EMPTY
        if not e.args:
            leaf_ok = not any(mu.is_linear for mu, _ in g.values()) and Usage.LINEAR not in p.values()
            return _all_mu(TStruct(e.name)) if leaf_ok else EMPTY
        out = set()
        parts = [self._part(a) for a in e.args]
        for envs, _, _ in self._splits(p, g, parts):
            sets = [self.strict(a, pk, gk, m) for a, (pk, gk) in zip(e.args, envs)]
            for mu in MODE_USAGES:
                if all((join_mode_usage(fm, mu), ft) in s for (fm, ft), s in zip(decl.fields, sets)):
                    out.add((mu, TStruct(e.name)))
        return frozenset(out)

    def _letstruct(self, e: LetStruct, p, g, m) -> frozenset:
        decl = self.decls.lookup(e.name)
        if decl is None or len(decl.fields) != len(e.binders):
            return EMPTY
        out = set()
        parts = [self._part(e.bound), self._part(e.body, e.binders)]
        for envs, _, _ in self._splits(p, g, parts):
            (p0, g0), (pb, gb) = envs
            for mu0, t0 in self.strict(e.bound, p0, g0, m):
                if t0 != TStruct(e.name):
                    continue
                gx = gb
                for x, (fm, ft) in zip(e.binders, decl.fields):
                    gx = self._bind(gx, x, (join_mode_usage(fm, mu0), ft)) if gx is not None else None
                if gx is None:
                    continue
                out.update((mu, t) for mu, t in self.strict(e.body, pb, gx, m)
                           if outlives_static(mu.mode, t))
        return frozenset(out)

    def _lambda(self, e: Lambda, p, g, m) -> frozenset:
        if not self.wf(e.param_ty):
            return EMPTY
        out = set()
        m_f = e.mode

        def fn_type(mu_b, t_b):
            return TFn(m_f, e.callability, e.lifetime, e.param_mu, e.param_ty, mu_b, t_b)

        all_nonlinear = (not any(mu.is_linear for mu, _ in g.values())
                         and Usage.LINEAR not in p.values())
        if m_f is not Mode.SPEC:
            try:
                pb, gb, usages = function_body_context(e.callability, e.lifetime, p, g)
            except CheckFailure:
                usages = None
            if usages is not None:
                gx = self._bind(gb, e.param, (e.param_mu, e.param_ty))
                if gx is not None:
                    for mu_b, t_b in self.strict(e.body, pb, gx, m_f):
                        if nonspec_function_modes(m_f, e.param_mu, mu_b, t_b):
                            for u in usages:
                                out.add((ModeUsage.of(m_f, u), fn_type(mu_b, t_b)))
            if all_nonlinear:
                tyenv = {x: t for x, (_, t) in g.items()}
                tyenv[e.param] = e.param_ty
                for mu_b, t_b in self.lax(e.body, tyenv, m_f):
                    if nonspec_function_modes(m_f, e.param_mu, mu_b, t_b):
                        out.add((ModeUsage.SPEC, fn_type(mu_b, t_b)))
                        if e.callability is Callability.ONCE:
                            out.add((ModeUsage.of(m_f, Usage.SHARED), fn_type(mu_b, t_b)))
        elif (e.callability is Callability.MANY and e.lifetime is Lifetime.STATIC
              and e.param_mu is ModeUsage.SPEC and all_nonlinear):
            gx = dict(g)
            gx[e.param] = (ModeUsage.SPEC, e.param_ty)
            for mu_b, t_b in self.strict(e.body, p, gx, Mode.SPEC):
                if mu_b is ModeUsage.SPEC:
                    out.add((ModeUsage.SPEC, fn_type(mu_b, t_b)))
        return frozenset(out)

    def _app(self, e: App, p, g, m) -> frozenset:
        out = set()
        for envs, _, _ in self._splits(p, g, [self._part(e.fn), self._part(e.arg)]):
            (p1, g1), (p2, g2) = envs
            s_arg = None
            for mu1, tf in self.strict(e.fn, p1, g1, m):
                if not isinstance(tf, TFn):
                    continue
                if tf.callability is Callability.ONCE and not mu1.is_linear:
                    continue
                if not (mode_leq(mu1.mode, tf.mode) and mode_leq(m, tf.mode)):
                    continue
                if s_arg is None:
                    s_arg = self.strict(e.arg, p2, g2, m)
                if (tf.arg_mu, tf.arg) in s_arg:
                    out.add((tf.res_mu, tf.res))
        return frozenset(out)

    # -- lax rules -----------------------------------------------------------

    def _rule_lax(self, e: Expr, ty: dict, m: Mode) -> frozenset:
        L = self.lax
        if isinstance(e, Var):
            if e.name not in ty:
                return EMPTY
            t = ty[e.name]
            return frozenset((mu, t) for mu in _mu_at_least(m))
        if isinstance(e, IntLit):
            return _all_mu(INT)
        if isinstance(e, UnitLit):
            return _all_mu(UNIT)
        if isinstance(e, Bottom):
            return frozenset({(ModeUsage.SPEC, NEVER)})
        if isinstance(e, Default):
            return frozenset({(ModeUsage.SPEC, e.ty)}) if self.wf(e.ty) else EMPTY
        if isinstance(e, HData):
            return frozenset({(ModeUsage.SPEC, self.heap_type)}) if m is Mode.EXEC else EMPTY
        if isinstance(e, HRead):
            return frozenset({(ModeUsage.EXEC_LINEAR, self.heap_type)}) if m is Mode.EXEC else EMPTY
        if isinstance(e, NoneLit):
            return _all_mu(TOption(e.ty)) if self.wf(e.ty) else EMPTY
        if isinstance(e, CrashNever):
            return frozenset((mu, UNIT) for mu, t in L(e.arg, ty, m)
                             if t == NEVER and mu is not ModeUsage.SPEC)
        if isinstance(e, HWrite):
            if m is Mode.EXEC and (ModeUsage.EXEC_LINEAR, self.heap_type) in L(e.arg, ty, m):
                return _all_mu(UNIT)
            return EMPTY
        if isinstance(e, PermLit):
            out = set()
            for mu, t in L(e.value, ty, m):
                out.add((ModeUsage.SPEC, TPerm(e.index, t)))
                if mu is ModeUsage.EXEC_LINEAR and self.copyable(Mode.EXEC, t):
                    out.add((ModeUsage.PROOF_LINEAR, TPerm(e.index, t)))
            return frozenset(out)
        if isinstance(e, PData):
            return frozenset((ModeUsage.SPEC, t.inner) for mu, t in L(e.perm, ty, m)
                             if mu is ModeUsage.SPEC and isinstance(t, TPerm))
        if isinstance(e, PRead):
            if m is not Mode.EXEC:
                return EMPTY
            return frozenset((ModeUsage.EXEC_SHARED, t.inner) for mu, t in L(e.perm, ty, m)
                             if mu is ModeUsage.PROOF_SHARED and isinstance(t, TPerm)
                             and t.index == e.index)
        if isinstance(e, PWrite):
            if m is not Mode.EXEC:
                return EMPTY
            if not any(mu is ModeUsage.PROOF_LINEAR and isinstance(t, TPerm) and t.index == e.index
                       for mu, t in L(e.perm, ty, m)):
                return EMPTY
            return frozenset((ModeUsage.PROOF_LINEAR, TPerm(e.index, t)) for mu, t in L(e.value, ty, m)
                             if mu is ModeUsage.EXEC_LINEAR and self.copyable(Mode.EXEC, t))
        if isinstance(e, Drop):
            return frozenset((mu.with_usage(Usage.SHARED), UNIT) for mu, t in L(e.arg, ty, m)
                             if mu.is_linear and self.copyable(mu.mode, t))
        if isinstance(e, Copy):
            return frozenset((mu.with_usage(Usage.LINEAR), t) for mu, t in L(e.arg, ty, m)
                             if mu.is_shared and self.copyable(mu.mode, t))
        if isinstance(e, Add):
            s1, s2 = L(e.left, ty, m), L(e.right, ty, m)
            return frozenset((mu, t) for mu, t in s1 if t == INT and (mu, t) in s2)
        if isinstance(e, Seq):
            if any(t == UNIT for _, t in L(e.first, ty, m)):
                return L(e.second, ty, m)
            return EMPTY
        if isinstance(e, Let):
            if not mode_leq(m, e.mode):
                return EMPTY
            out = set()
            for t1 in {t for mu, t in L(e.bound, ty, m) if mu.mode is e.mode}:
                out.update((mu2, t2) for mu2, t2 in L(e.body, {**ty, e.name: t1}, m)
                           if outlives_static(mu2.mode, t2))
            return frozenset(out)
        if isinstance(e, SomeE):
            return frozenset((mu, TOption(e.ty)) for mu, t in L(e.arg, ty, m) if t == e.ty)
        if isinstance(e, IfLet):
            out = set()
            for mu1, t1 in L(e.scrutinee, ty, m):
                if not isinstance(t1, TOption):
                    continue
                for mb in MODES:
                    if mode_leq(m, mb) and (mode_leq(mu1.mode, mb)
                                            or (mu1.mode is Mode.SPEC and mb is Mode.PROOF)):
                        out.update(L(e.then, {**ty, e.name: t1.inner}, mb) & L(e.orelse, ty, mb))
            return frozenset(out)
        if isinstance(e, Struct):
            decl = self.decls.lookup(e.name)
            if decl is None or len(decl.fields) != len(e.args):
                return EMPTY
            sets = [L(a, ty, m) for a in e.args]
            return frozenset((mu, TStruct(e.name)) for mu in MODE_USAGES
                             if all((join_mode_usage(fm, mu), ft) in s
                                    for (fm, ft), s in zip(decl.fields, sets)))
        if isinstance(e, LetStruct):
            decl = self.decls.lookup(e.name)
            if decl is None or len(decl.fields) != len(e.binders):
                return EMPTY
            if not any(t == TStruct(e.name) for _, t in L(e.bound, ty, m)):
                return EMPTY
            tb = {**ty, **{x: ft for x, (_, ft) in zip(e.binders, decl.fields)}}
            return frozenset((mu, t) for mu, t in L(e.body, tb, m) if outlives_static(mu.mode, t))
        if isinstance(e, Lambda):
            if not self.wf(e.param_ty):
                return EMPTY
            body = L(e.body, {**ty, e.param: e.param_ty}, e.mode)
            out = set()
            for mu_b, t_b in body:
                ft = TFn(e.mode, e.callability, e.lifetime, e.param_mu, e.param_ty, mu_b, t_b)
                if e.mode is Mode.SPEC:
                    if (e.callability is Callability.MANY and e.lifetime is Lifetime.STATIC
                            and e.param_mu is ModeUsage.SPEC and mu_b is ModeUsage.SPEC):
                        out.add((ModeUsage.SPEC, ft))
                elif nonspec_function_modes(e.mode, e.param_mu, mu_b, t_b):
                    out.add((ModeUsage.SPEC, ft))
                    out.add((ModeUsage.of(e.mode, Usage.LINEAR), ft))
            return frozenset(out)
        if isinstance(e, App):
            out = set()
            s_arg = L(e.arg, ty, m)
            for mu1, tf in L(e.fn, ty, m):
                if not isinstance(tf, TFn):
                    continue
                if tf.callability is Callability.ONCE and not mu1.is_linear:
                    continue
                if mode_leq(mu1.mode, tf.mode) and mode_leq(m, tf.mode) and (tf.arg_mu, tf.arg) in s_arg:
                    out.add((tf.res_mu, tf.res))
            return frozenset(out)
        raise TypeError(f"unknown expression {e!r}")


def typecheck_declarative(decls: DeclTable, heap_type: Type, p: dict, g: dict, m: Mode,
                          strict: bool, e: Expr, max_size: int = DEFAULT_MAX_SIZE) -> frozenset:
    return Declarative(decls, heap_type, max_size).derive(e, p, g, m, strict)
