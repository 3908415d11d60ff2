"""Copyability, default values, well-formedness and function body contexts."""

from __future__ import annotations

from ..calculus.syntax import (
    Bottom,
    Callability,
    DeclTable,
    Default,
    IntLit,
    Lambda,
    Lifetime,
    Mode,
    ModeUsage,
    NoneLit,
    PermLit,
    Struct,
    TFn,
    TInt,
    TNever,
    TOption,
    TPerm,
    TStruct,
    TUnit,
    Type,
    Usage,
    UnitLit,
    is_unrestricted,
    lifetime_of,
    mode_leq,
    outlives_static,
)
from .diagnostics import CheckFailure, Diagnostic
from .env import is_all_nonlinear, linear_part, nonlinear_part, spec_env


def is_copyable(d: DeclTable, m: Mode, t: Type, _visiting: frozenset = frozenset()) -> bool:
    """The Copy judgment, read as a least relation: a datatype that needs its
    own copyability to be copyable is not copyable."""
    if m is Mode.SPEC:
        return True
    if isinstance(t, (TInt, TUnit, TNever)):
        return True
    if isinstance(t, TOption):
        return is_copyable(d, m, t.inner, _visiting)
    if isinstance(t, TFn):
        return t.callability is Callability.MANY
    if isinstance(t, TStruct):
        decl = d.lookup(t.name)
        if decl is None or t.name in _visiting:
            return False
        inner = _visiting | {t.name}
        return all(is_copyable(d, fm, ft, inner) for fm, ft in decl.fields)
    return False


class MalformedType(ValueError):
    pass


def default_value(d: DeclTable, t: Type, _depth: int = 0):
    if _depth > 64:
        raise MalformedType(f"default value of {t!r} does not terminate")
    if isinstance(t, TInt):
        return IntLit(0)
    if isinstance(t, TUnit):
        return UnitLit()
    if isinstance(t, TNever):
        return Bottom()
    if isinstance(t, TPerm):
        return PermLit(t.index, default_value(d, t.inner, _depth + 1))
    if isinstance(t, TOption):
        return NoneLit(t.inner)
    if isinstance(t, TStruct):
        decl = d.lookup(t.name)
        if decl is None:
            raise MalformedType(f"unknown datatype {t.name}")
        return Struct(t.name, tuple(default_value(d, ft, _depth + 1) for _, ft in decl.fields))
    if isinstance(t, TFn):
        return Lambda(t.mode, t.callability, t.lifetime, "x", t.arg_mu, t.arg, Default(t.res))
    raise MalformedType(f"not a type: {t!r}")


def wf_type(d: frozenset, d_r: frozenset, d_p: frozenset, t: Type) -> bool:
    """Well-formedness with recursion environments: ``d`` holds earlier
    declarations, ``d_r`` names usable recursively, ``d_p`` names usable only
    in strictly positive position once shifted into ``d_r``."""
    if isinstance(t, (TInt, TUnit, TNever)):
        return True
    if isinstance(t, TPerm):
        return wf_type(d, d_r, d_p, t.inner)
    if isinstance(t, TOption):
        return wf_type(d, d_r | d_p, frozenset(), t.inner)
    if isinstance(t, TStruct):
        return t.name in d or t.name in d_r
    if isinstance(t, TFn):
        if t.mode is Mode.EXEC:
            shifted = d_r | d_p
            return (wf_type(d, shifted, frozenset(), t.arg)
                    and wf_type(d, shifted, frozenset(), t.res)
                    and is_unrestricted(t.res_mu, t.res))
        if t.mode is Mode.PROOF:
            return (mode_leq(Mode.PROOF, t.arg_mu.mode)
                    and mode_leq(Mode.PROOF, t.res_mu.mode)
                    and wf_type(d, frozenset(), frozenset(), t.arg)
                    and wf_type(d, d_r, d_p, t.res)
                    and is_unrestricted(t.res_mu, t.res))
        return (t.callability is Callability.MANY and t.lifetime is Lifetime.STATIC
                and t.arg_mu is ModeUsage.SPEC and t.res_mu is ModeUsage.SPEC
                and wf_type(d, frozenset(), frozenset(), t.arg)
                and wf_type(d, d_r, d_p, t.res))
    return False


def wf_closed(decls: DeclTable, t: Type) -> bool:
    """``D |- t``: well formed against the whole table, no recursion."""
    return wf_type(decls.names(), frozenset(), frozenset(), t)


def wf_decl_table(decls: DeclTable) -> list:
    """Check declarations in order; returns diagnostics (empty when accepted)."""
    earlier: set = set()
    for decl in decls:
        for idx, (fm, ft) in enumerate(decl.fields):
            if not wf_type(frozenset(earlier), frozenset(), frozenset({decl.name}), ft):
                return [Diagnostic(
                    "Fig11.wf-decl", None,
                    f"datatype {decl.name} field {idx}: type is not well formed "
                    "(unknown name or non-strictly-positive recursive use)")]
            if not outlives_static(fm, ft):
                return [Diagnostic(
                    "Fig11.wf-decl", None,
                    f"datatype {decl.name} field {idx}: {fm} field type must have static lifetime")]
        earlier.add(decl.name)
    return []


LINEAR_ONLY = frozenset({Usage.LINEAR})
BOTH_USAGES = frozenset({Usage.LINEAR, Usage.SHARED})


def function_body_context(o: Callability, l: Lifetime, p: dict, g: dict):
    """Return (P_b, Gamma_b, allowed result usages) for a function literal
    capturing ``p`` and ``g``; raises CheckFailure naming the offending
    binding when a side condition fails."""
    usages = LINEAR_ONLY if o is Callability.ONCE else BOTH_USAGES
    if o is Callability.ONCE and l is Lifetime.RESTRICTED:
        return dict(p), dict(g), usages
    if o is Callability.MANY:
        for i, u in sorted(p.items()):
            if u is Usage.LINEAR:
                raise CheckFailure(Diagnostic(
                    "Fig9.body-context", None,
                    f"Many function may not capture linear permission {i}"))
        for x, (mu, _) in sorted(g.items()):
            if mu.is_linear:
                raise CheckFailure(Diagnostic(
                    "Fig9.body-context", None,
                    f"Many function may not capture linear binding {x}"))
        if l is Lifetime.RESTRICTED:
            return dict(p), dict(g), usages
        return {}, spec_env(g), usages
    lin = linear_part(g)
    for x, (_, t) in sorted(lin.items()):
        if lifetime_of(t) is not Lifetime.STATIC:
            raise CheckFailure(Diagnostic(
                "Fig9.body-context", None,
                f"static function may not capture {x}, whose type has restricted lifetime"))
    body_g = {**spec_env(nonlinear_part(g)), **lin}
    return linear_part(p), body_g, usages


def nonspec_function_modes(m_f: Mode, mu_x: ModeUsage, mu_b: ModeUsage, t_b: Type) -> bool:
    return (is_unrestricted(mu_b, t_b) and m_f is not Mode.SPEC
            and mode_leq(m_f, mu_x.mode) and mode_leq(m_f, mu_b.mode))


__all__ = [
    "is_copyable", "default_value", "wf_type", "wf_closed", "wf_decl_table",
    "function_body_context", "nonspec_function_modes", "is_all_nonlinear", "MalformedType",
]
