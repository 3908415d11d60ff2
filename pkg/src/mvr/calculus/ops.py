"""Syntactic helpers: values, substitution, free variables, size."""

from __future__ import annotations

from functools import lru_cache

from .syntax import (
    Add,
    App,
    Bottom,
    Copy,
    CrashNever,
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
    Type,
    UnitLit,
    Var,
)

_ATOMIC_VALUES = (IntLit, UnitLit, Bottom, NoneLit, Lambda)


def is_value(e: Expr) -> bool:
    if isinstance(e, _ATOMIC_VALUES):
        return True
    if isinstance(e, PermLit):
        return is_value(e.value)
    if isinstance(e, SomeE):
        return is_value(e.arg)
    if isinstance(e, Struct):
        return all(is_value(a) for a in e.args)
    return False


def substitute(e: Expr, x: str, v: Expr) -> Expr:
    """Replace free occurrences of ``x`` in ``e`` by the closed value ``v``."""
    if x not in free_vars(e):
        return e
    return _subst(e, x, v)


def _subst(e: Expr, x: str, v: Expr) -> Expr:
    def go(sub: Expr) -> Expr:
        return substitute(sub, x, v)

    if isinstance(e, Var):
        return v if e.name == x else e
    if isinstance(e, Add):
        return Add(go(e.left), go(e.right), span=e.span)
    if isinstance(e, CrashNever):
        return CrashNever(go(e.arg), span=e.span)
    if isinstance(e, HWrite):
        return HWrite(go(e.arg), span=e.span)
    if isinstance(e, PermLit):
        return PermLit(e.index, go(e.value), span=e.span)
    if isinstance(e, PData):
        return PData(go(e.perm), span=e.span)
    if isinstance(e, PRead):
        return PRead(e.index, go(e.perm), span=e.span)
    if isinstance(e, PWrite):
        return PWrite(e.index, go(e.value), go(e.perm), span=e.span)
    if isinstance(e, Drop):
        return Drop(go(e.arg), span=e.span)
    if isinstance(e, Copy):
        return Copy(go(e.arg), span=e.span)
    if isinstance(e, Seq):
        return Seq(go(e.first), go(e.second), e.borrow, span=e.span)
    if isinstance(e, Let):
        body = e.body if e.name == x else go(e.body)
        return Let(e.mode, e.name, go(e.bound), body, e.borrow, span=e.span)
    if isinstance(e, SomeE):
        return SomeE(go(e.arg), e.ty, span=e.span)
    if isinstance(e, IfLet):
        then = e.then if e.name == x else go(e.then)
        return IfLet(e.name, go(e.scrutinee), then, go(e.orelse), span=e.span)
    if isinstance(e, Struct):
        return Struct(e.name, tuple(go(a) for a in e.args), span=e.span)
    if isinstance(e, LetStruct):
        body = e.body if x in e.binders else go(e.body)
        return LetStruct(e.name, e.binders, go(e.bound), body, span=e.span)
    if isinstance(e, Lambda):
        if e.param == x:
            return e
        return Lambda(e.mode, e.callability, e.lifetime, e.param, e.param_mu,
                      e.param_ty, go(e.body), span=e.span)
    if isinstance(e, App):
        return App(go(e.fn), go(e.arg), span=e.span)
    return e


def substitute_many(e: Expr, pairs) -> Expr:
    # values are closed, so sequential substitution is simultaneous
    for x, v in pairs:
        e = substitute(e, x, v)
    return e


@lru_cache(maxsize=1 << 20)
def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    if isinstance(e, IfLet):
        return free_vars(e.scrutinee) | (free_vars(e.then) - {e.name}) | free_vars(e.orelse)
    if isinstance(e, LetStruct):
        return free_vars(e.bound) | (free_vars(e.body) - set(e.binders))
    if isinstance(e, Lambda):
        return free_vars(e.body) - {e.param}
    out = frozenset()
    for c in children(e):
        out |= free_vars(c)
    return out


def children(e: Expr) -> tuple:
    """Immediate subexpressions in evaluation order."""
    if isinstance(e, Add):
        return (e.left, e.right)
    if isinstance(e, (CrashNever, HWrite, Drop, Copy)):
        return (e.arg,)
    if isinstance(e, SomeE):
        return (e.arg,)
    if isinstance(e, PermLit):
        return (e.value,)
    if isinstance(e, (PData, PRead)):
        return (e.perm,)
    if isinstance(e, PWrite):
        return (e.value, e.perm)
    if isinstance(e, Seq):
        return (e.first, e.second)
    if isinstance(e, (Let, LetStruct)):
        return (e.bound, e.body)
    if isinstance(e, IfLet):
        return (e.scrutinee, e.then, e.orelse)
    if isinstance(e, Struct):
        return tuple(e.args)
    if isinstance(e, Lambda):
        return (e.body,)
    if isinstance(e, App):
        return (e.fn, e.arg)
    return ()


def type_size(t: Type) -> int:
    if isinstance(t, TOption):
        return 1 + type_size(t.inner)
    if isinstance(t, TPerm):
        return 2 + type_size(t.inner)
    if isinstance(t, TFn):
        return 1 + type_size(t.arg) + type_size(t.res)
    return 1


def annotation_types(e: Expr) -> tuple:
    if isinstance(e, (Default, NoneLit, SomeE)):
        return (e.ty,)
    if isinstance(e, Lambda):
        return (e.param_ty,)
    return ()


@lru_cache(maxsize=1 << 20)
def size(e: Expr) -> int:
    """Node count of the syntax tree. Type annotations and permission indices
    count as nodes; mode, callability, lifetime and usage attributes do not."""
    n = 1 + sum(size(c) for c in children(e)) + sum(type_size(t) for t in annotation_types(e))
    if isinstance(e, (PermLit, PRead, PWrite)):
        n += 1
    return n


@lru_cache(maxsize=1 << 20)
def perm_indices(e: Expr) -> frozenset:
    """Indices of permission literals occurring anywhere in ``e``."""
    out = frozenset((e.index,)) if isinstance(e, PermLit) else frozenset()
    for c in children(e):
        out |= perm_indices(c)
    return out


def is_closed(e: Expr) -> bool:
    return not free_vars(e)


_LEAVES = (Var, IntLit, UnitLit, Bottom, Default, HData, HRead, NoneLit)


def is_leaf(e: Expr) -> bool:
    return isinstance(e, _LEAVES)
