"""Exhaustive enumeration of small well-typed configurations.

Terms are generated bottom-up by size. Bound variables get canonical names
(``x0``, ``x1``, ... by binding depth), so alpha-equivalent terms are produced
once. Generation is type-directed in a weak sense: every generated subterm
must be typable in lax mode under the types its binders can supply. Lax
typing over-approximates strict typing for every choice of environments, so
a subterm that fails it cannot occur in any well-typed term and dropping it
loses nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Optional

from ..calculus.ops import is_value, size
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
    DatatypeDecl,
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
    mode_leq,
)
from ..typecheck.declarative import Declarative
from ..typecheck.types import wf_closed

ALL_FN_HEADS = tuple(
    (m, o, l, mu1, mu2)
    for m in MODES
    for o in Callability
    for l in Lifetime
    for mu1 in MODE_USAGES
    for mu2 in MODE_USAGES
)

# Function heads used in annotations and lambdas of the default corpus: one
# per mode, with parameter and result at the function's own mode. The exec
# head is Many/static and the proof head Once/restricted so that both the
# Once-linearity and the outlives side conditions stay reachable. The full
# 300-head product (ALL_FN_HEADS) is too large for an exhaustive sweep.
CANONICAL_FN_HEADS = (
    (Mode.EXEC, Callability.MANY, Lifetime.STATIC, ModeUsage.EXEC_LINEAR, ModeUsage.EXEC_LINEAR),
    (Mode.PROOF, Callability.ONCE, Lifetime.RESTRICTED, ModeUsage.PROOF_LINEAR, ModeUsage.PROOF_LINEAR),
    (Mode.SPEC, Callability.MANY, Lifetime.STATIC, ModeUsage.SPEC, ModeUsage.SPEC),
)


CORPUS_DECLS = DeclTable((DatatypeDecl("S", ((Mode.EXEC, INT), (Mode.SPEC, INT))),))


@dataclass(frozen=True)
class EnumerationSpec:
    max_size: int = 7
    int_literals: tuple = (0, 1)
    perm_indices: tuple = (0,)
    decls: DeclTable = CORPUS_DECLS
    access_levels: tuple = MODES
    max_count: Optional[int] = None
    heap_type: Type = INT
    heap_values: tuple = (IntLit(0),)
    permission_free: bool = False
    fn_heads: tuple = CANONICAL_FN_HEADS
    higher_order: bool = False  # allow function types inside function types

    def __post_init__(self):
        if self.max_size < 0:
            raise ValueError("max_size must be non-negative")
        if not self.int_literals or not self.access_levels or not self.heap_values:
            raise ValueError("pools must be nonempty")
        if not self.permission_free and not self.perm_indices:
            raise ValueError("permission index pool must be nonempty")

    def perm_envs(self) -> list:
        """Every permission environment over the index pool."""
        if self.permission_free:
            return [{}]
        out = []
        for choice in product((None, Usage.LINEAR, Usage.SHARED), repeat=len(self.perm_indices)):
            out.append({i: u for i, u in zip(self.perm_indices, choice) if u is not None})
        return out


@dataclass(frozen=True)
class Case:
    """A well-typed configuration and everything derivable for it."""

    heap: Expr
    expr: Expr
    perms: tuple  # sorted (index, usage)
    access: Mode
    results: frozenset  # of (ModeUsage, Type)

    @property
    def perm_env(self) -> dict:
        return dict(self.perms)

    def evidence(self):
        return min(self.results, key=lambda r: (r[0].value, repr(r[1])))


def _lambda_heads(fn_heads) -> list:
    out = []
    for m, o, l, mu, _ in fn_heads:
        # necessary conditions of the lambda rules
        spec_ok = m is Mode.SPEC and o is Callability.MANY and l is Lifetime.STATIC and mu is ModeUsage.SPEC
        if (spec_ok or (m is not Mode.SPEC and mode_leq(m, mu.mode))) and (m, o, l, mu) not in out:
            out.append((m, o, l, mu))
    return out


class Enumerator:
    def __init__(self, spec: EnumerationSpec, checker: Optional[Declarative] = None):
        self.spec = spec
        self.decls = spec.decls
        self.checker = checker or Declarative(spec.decls, spec.heap_type, max_size=max(spec.max_size, 24))
        self._types: dict = {}
        self._terms: dict = {}
        self._lax_types: dict = {}
        self._index: dict = {}
        self._lambda_heads = _lambda_heads(spec.fn_heads)

    # -- types ---------------------------------------------------------------

    def types(self, n: int) -> list:
        """Well-formed closed types of size exactly ``n``."""
        if n in self._types:
            return self._types[n]
        out: list = []
        if n == 1:
            out = [INT, UNIT, NEVER] + [TStruct(d.name) for d in self.decls]
        elif n >= 2:
            out.extend(TOption(t) for t in self.types(n - 1))
            if not self.spec.permission_free:
                for i in self.spec.perm_indices:
                    out.extend(TPerm(i, t) for t in self.types(n - 2))
            for a in range(1, n - 1):
                for t1 in self._fn_parts(a):
                    for t2 in self._fn_parts(n - 1 - a):
                        for m, o, l, mu1, mu2 in self.spec.fn_heads:
                            out.append(TFn(m, o, l, mu1, t1, mu2, t2))
        out = [t for t in out if wf_closed(self.decls, t)]
        self._types[n] = out
        return out

    def _fn_parts(self, n: int) -> list:
        ts = self.types(n)
        if self.spec.higher_order:
            return ts
        return [t for t in ts if not _mentions_fn(t)]

    # -- lax viability ---------------------------------------------------------

    def lax_results(self, e: Expr, scope: tuple) -> frozenset:
        key = (e, scope)
        r = self._lax_types.get(key)
        if r is None:
            tyenv = dict(scope)
            r = frozenset()
            for m in MODES:
                r |= frozenset((m, mu, t) for mu, t in self.checker.lax(e, tyenv, m))
            self._lax_types[key] = r
        return r

    def viable(self, e: Expr, scope: tuple) -> bool:
        return bool(self.lax_results(e, scope))

    def _bound_types(self, e: Expr, scope: tuple, mode: Optional[Mode] = None) -> list:
        ts = {t for _, mu, t in self.lax_results(e, scope) if mode is None or mu.mode is mode}
        return sorted(ts, key=repr)

    # -- terms ---------------------------------------------------------------

    def terms(self, n: int, scope: tuple = ()) -> list:
        """Viable terms of size exactly ``n`` whose free variables are in scope."""
        key = (n, scope)
        if key in self._terms:
            return self._terms[key]
        seen: set = set()
        out: list = []
        index: dict = {}
        for e in self._raw(n, scope):
            if e in seen:
                continue
            seen.add(e)
            r = self.lax_results(e, scope)
            if r:
                out.append(e)
                for t in {t for _, _, t in r}:
                    index.setdefault(t, []).append(e)
        self._terms[key] = out
        self._index[key] = index
        return out

    def of_type(self, n: int, scope: tuple, t: Type) -> list:
        """Viable terms of size ``n`` with ``t`` among their lax types."""
        self.terms(n, scope)
        return self._index[(n, scope)].get(t, [])

    def typed_groups(self, n: int, scope: tuple, pred=None) -> list:
        """(type, terms) groups for size ``n``, sorted by type, optionally
        keeping only types satisfying ``pred``."""
        self.terms(n, scope)
        idx = self._index[(n, scope)]
        return [(t, idx[t]) for t in sorted(idx, key=repr) if pred is None or pred(t)]

    def values(self, n: int, scope: tuple) -> list:
        return [e for e in self.terms(n, scope) if is_value(e)]

    def _typed_pairs(self, total: int, scope: tuple, left_t: Type, right_t: Type):
        for a in range(1, total):
            left = self.of_type(a, scope, left_t)
            if not left:
                continue
            right = self.terms(total - a, scope) if right_t is None else self.of_type(total - a, scope, right_t)
            for x in left:
                for y in right:
                    yield x, y

    def _raw(self, n: int, scope: tuple) -> Iterator[Expr]:
        sp = self.spec
        perm_ok = not sp.permission_free
        depth = len(scope)
        if n <= 0:
            return
        if n == 1:
            for name, _ in scope:
                yield Var(name)
            for i in sp.int_literals:
                yield IntLit(i)
            yield UnitLit()
            yield Bottom()
            yield HData()
            yield HRead()
            for d in self.decls:
                if not d.fields:
                    yield Struct(d.name, ())
            return
        for t in self.types(n - 1):
            yield Default(t)
            yield NoneLit(t)
        for e in self.terms(n - 1, scope):
            yield Drop(e)
            yield Copy(e)
        for e in self.of_type(n - 1, scope, NEVER):
            yield CrashNever(e)
        for e in self.of_type(n - 1, scope, sp.heap_type):
            yield HWrite(e)
        for a in range(1, n - 1):
            for t in self.types(n - 1 - a):
                for e in self.of_type(a, scope, t):
                    yield SomeE(e, t)
        if perm_ok:
            is_perm = lambda t: isinstance(t, TPerm)  # noqa: E731
            for e in dict.fromkeys(e for _, es in self.typed_groups(n - 1, scope, is_perm) for e in es):
                yield PData(e)
            for i in sp.perm_indices:
                mine = lambda t, i=i: isinstance(t, TPerm) and t.index == i  # noqa: E731
                if n > 2:
                    for v in self.values(n - 2, scope):
                        yield PermLit(i, v)
                    for e in dict.fromkeys(e for _, es in self.typed_groups(n - 2, scope, mine) for e in es):
                        yield PRead(i, e)
                for a in range(1, n - 2):
                    perms = [y for _, es in self.typed_groups(n - 2 - a, scope, mine) for y in es]
                    for x in self.terms(a, scope):
                        for y in dict.fromkeys(perms):
                            yield PWrite(i, x, y)
        for x, y in self._typed_pairs(n - 1, scope, INT, INT):
            yield Add(x, y)
        for x, y in self._typed_pairs(n - 1, scope, UNIT, None):
            yield Seq(x, y)
        for a in range(1, n - 1):
            b = n - 1 - a
            for f in self.terms(a, scope):
                arg_types = sorted({t.arg for _, _, t in self.lax_results(f, scope) if isinstance(t, TFn)}, key=repr)
                if not arg_types:
                    continue
                args = dict.fromkeys(x for t in arg_types for x in self.of_type(b, scope, t))
                for x in args:
                    yield App(f, x)
        for d in self.decls:
            yield from self._structs(d, n, scope)
        # binders
        name = f"x{depth}"
        for a in range(1, n - 1):
            for e1 in self.terms(a, scope):
                for m in MODES:
                    bodies = self._union_bodies(
                        n - 1 - a, scope, name,
                        self._bound_types(e1, scope, m))
                    for e2 in bodies:
                        yield Let(m, name, e1, e2)
        for a in range(1, n - 2):
            for e1 in self.terms(a, scope):
                inner = [t.inner for t in self._bound_types(e1, scope) if isinstance(t, TOption)]
                if not inner:
                    continue
                for b in range(1, n - 1 - a):
                    thens = self._union_bodies(b, scope, name, inner)
                    if not thens:
                        continue
                    for e3 in self.terms(n - 1 - a - b, scope):
                        for e2 in thens:
                            yield IfLet(name, e1, e2, e3)
        for d in self.decls:
            names = tuple(f"x{depth + k}" for k in range(len(d.fields)))
            inner_scope = scope + tuple(zip(names, (t for _, t in d.fields)))
            for a in range(1, n - 1):
                for e1 in self.of_type(a, scope, TStruct(d.name)):
                    for e2 in self.terms(n - 1 - a, inner_scope):
                        yield LetStruct(d.name, names, e1, e2)
        for a in range(1, n - 1):
            for t in self.types(a):
                bodies = self.terms(n - 1 - a, scope + ((name, t),))
                for m, o, l, mu in self._lambda_heads:
                    for body in bodies:
                        yield Lambda(m, o, l, name, mu, t, body)

    def _union_bodies(self, n: int, scope: tuple, name: str, types: list) -> list:
        seen, out = set(), []
        for t in types:
            for e in self.terms(n, scope + ((name, t),)):
                if e not in seen:
                    seen.add(e)
                    out.append(e)
        return out

    def _structs(self, d: DatatypeDecl, n: int, scope: tuple):
        k = len(d.fields)
        if k == 0:
            return
        for sizes in _compositions(n - 1, k):
            pools = [self.of_type(s, scope, t) for s, (_, t) in zip(sizes, d.fields)]
            if all(pools):
                for args in product(*pools):
                    yield Struct(d.name, tuple(args))

    # -- closed terms and cases -------------------------------------------------

    def closed_terms(self) -> Iterator[Expr]:
        """Closed candidate terms by increasing size.

        Sizes below the bound come from the viable-term tables. Terms at the
        bound are streamed straight from the generator, which never yields
        the same term twice, since nothing is built on top of them; the
        strict check in ``cases`` is their only filter.
        """
        top = self.spec.max_size
        for n in range(1, top):
            yield from self.terms(n, ())
        if top >= 1:
            yield from self._raw(top, ())

    def cases(self) -> Iterator[Case]:
        """Well-typed configurations, deterministic order."""
        count = 0
        perm_envs = self.spec.perm_envs()
        top = self.spec.max_size
        for e in self.closed_terms():
            # terms at the bound are never subterms of anything checked later
            memo = size(e) < top
            for heap in self.spec.heap_values:
                for p in perm_envs:
                    for m in self.spec.access_levels:
                        results = self.checker.strict(e, p, {}, m, memo=memo)
                        if not results:
                            continue
                        yield Case(heap, e, tuple(sorted(p.items())), m, results)
                        count += 1
                        if self.spec.max_count is not None and count >= self.spec.max_count:
                            return


def _mentions_fn(t: Type) -> bool:
    if isinstance(t, TFn):
        return True
    if isinstance(t, (TOption, TPerm)):
        return _mentions_fn(t.inner)
    return False


def _compositions(total: int, k: int):
    if k == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - k + 2):
        for rest in _compositions(total - first, k - 1):
            yield (first,) + rest


def enumerate_configurations(spec: EnumerationSpec, checker: Optional[Declarative] = None) -> Iterator[Case]:
    return Enumerator(spec, checker).cases()
