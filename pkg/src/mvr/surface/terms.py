"""First-order terms shared by VC generation, SMT-LIB rendering and the oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from . import ast as A


@dataclass(frozen=True)
class Const:
    """A named constant; ``ty`` is the surface type (bool, int, nat or uN)."""

    name: str
    ty: str

    @property
    def sort(self) -> str:
        return "Bool" if self.ty == "bool" else "Int"


@dataclass(frozen=True)
class Lit:
    value: Union[int, bool]


@dataclass(frozen=True)
class App:
    op: str
    args: tuple


Term = Union[Const, Lit, App]

TRUE = Lit(True)
FALSE = Lit(False)

BUILTINS = {"+", "-", "*", "div", "mod", "<", "<=", ">", ">=", "=", "and", "or", "not", "=>", "ite"}

SPEC_SUFFIX = ".?"  # spec-function symbol suffix, e.g. is_odd.?


def spec_symbol(fn: str) -> str:
    return fn + SPEC_SUFFIX


def req_symbol(fn: str) -> str:
    return "req%" + fn


def ens_symbol(fn: str) -> str:
    return "ens%" + fn


def app(op: str, *args) -> App:
    return App(op, tuple(args))


def and_(*parts) -> Term:
    flat = []
    for p in parts:
        if isinstance(p, App) and p.op == "and":
            flat.extend(p.args)
        elif p == TRUE:
            continue
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return App("and", tuple(flat))


def not_(t: Term) -> Term:
    if isinstance(t, Lit) and isinstance(t.value, bool):
        return Lit(not t.value)
    return App("not", (t,))


def implies(a: Term, b: Term) -> Term:
    return App("=>", (a, b))


def eq(a: Term, b: Term) -> Term:
    return App("=", (a, b))


def ite(c: Term, a: Term, b: Term) -> Term:
    return App("ite", (c, a, b))


def in_range(ty: str, t: Term) -> Term:
    """The typing invariant of integer type ``ty``, or TRUE for int/bool."""
    if ty in A.MACHINE_WIDTHS:
        return App("uInv", (Lit(A.MACHINE_WIDTHS[ty]), t))
    if ty == "nat":
        return App("<=", (Lit(0), t))
    return TRUE


def consts_of(t: Term, out: dict = None) -> dict:
    """Constants of ``t`` in first-occurrence order (as an insertion-ordered dict)."""
    if out is None:
        out = {}
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Const):
            out.setdefault(x.name, x)
        elif isinstance(x, App):
            stack.extend(reversed(x.args))
    return out


def symbols_of(t: Term, out: set = None) -> set:
    if out is None:
        out = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, App):
            if x.op not in BUILTINS:
                out.add(x.op)
            stack.extend(x.args)
    return out


def subst(t: Term, mapping: dict) -> Term:
    if isinstance(t, Const):
        return mapping.get(t.name, t)
    if isinstance(t, App):
        return App(t.op, tuple(subst(a, mapping) for a in t.args))
    return t


def render(t: Term) -> str:
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Lit):
        if isinstance(t.value, bool):
            return "true" if t.value else "false"
        return str(t.value) if t.value >= 0 else f"(- {-t.value})"
    return "(" + " ".join([t.op, *(render(a) for a in t.args)]) + ")"
