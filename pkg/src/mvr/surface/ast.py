"""Syntax tree of the surface language (``.mvr`` files).

The language is a small Rust-like dialect with ``#[spec]``, ``#[proof]`` and
``#[exec]`` functions, contracts, loops with invariants and ghost lets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..calculus.syntax import Span

MACHINE_WIDTHS = {"u8": 8, "u16": 16, "u32": 32, "u64": 64}
INT_TYPES = ("int", "nat", *MACHINE_WIDTHS)
TYPES = ("bool", *INT_TYPES)

MODES = ("spec", "proof", "exec")


def is_machine(ty: Optional[str]) -> bool:
    return ty in MACHINE_WIDTHS


def type_range(ty: str):
    """(lo, hi) inclusive bounds of an integer type; None for unbounded ends."""
    if ty in MACHINE_WIDTHS:
        return 0, (1 << MACHINE_WIDTHS[ty]) - 1
    if ty == "nat":
        return 0, None
    if ty == "bool":
        return 0, 1
    return None, None


# -- expressions ---------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Name:
    """A variable; ``deref`` records a leading ``*`` (reads through a reference)."""

    name: str
    deref: bool = False
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Old:
    name: str
    deref: bool = False
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TypeMax:
    """``u64::MAX`` and friends."""

    ty: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "!" or "-"
    arg: "Expr"
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Cast:
    arg: "Expr"
    ty: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Arg:
    """A call argument with its passing marker ("value", "ref" or "mut")."""

    expr: "Expr"
    passing: str = "value"
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class IfExpr:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    span: Optional[Span] = field(default=None, compare=False)


Expr = Union[IntLit, BoolLit, Name, Old, TypeMax, Unary, Binary, Cast, Call, IfExpr]

ARITH = ("+", "-", "*", "/", "%")
COMPARE = ("==", "!=", "<", "<=", ">", ">=")
LOGIC = ("&&", "||", "==>")


# -- statements -----------------------------------------------------------------


@dataclass
class Let:
    name: str
    init: Expr
    mutable: bool = False
    ghost: Optional[str] = None  # None, "spec" or "proof"
    ty: Optional[str] = None
    span: Optional[Span] = None


@dataclass
class Assign:
    name: str
    value: Expr
    deref: bool = False
    span: Optional[Span] = None


@dataclass
class While:
    cond: Expr
    invariants: list
    body: list
    span: Optional[Span] = None


@dataclass
class Assert:
    cond: Expr
    span: Optional[Span] = None


@dataclass
class Return:
    value: Optional[Expr]
    span: Optional[Span] = None


@dataclass
class ExprStmt:
    expr: Expr
    span: Optional[Span] = None


@dataclass
class Reveal:
    fn: str
    fuel: int
    span: Optional[Span] = None


@dataclass
class If:
    cond: Expr
    then: list
    orelse: list
    span: Optional[Span] = None


@dataclass
class Tail:
    """The final expression of a block, which is the block's value."""

    expr: Expr
    span: Optional[Span] = None


Stmt = Union[Let, Assign, While, Assert, Return, ExprStmt, Reveal, If, Tail]


# -- declarations ------------------------------------------------------------------


@dataclass
class Param:
    name: str
    ty: str
    passing: str = "value"  # "value", "ref" or "mut"
    span: Optional[Span] = None


@dataclass
class Function:
    mode: str
    name: str
    params: list
    ret: Optional[str]
    body: list
    requires: list = field(default_factory=list)
    ensures: list = field(default_factory=list)
    ret_name: Optional[str] = None
    decreases: Optional[Expr] = None
    span: Optional[Span] = None

    def param(self, name: str) -> Optional[Param]:
        for p in self.params:
            if p.name == name:
                return p
        return None


@dataclass
class SurfaceProgram:
    functions: list = field(default_factory=list)

    def lookup(self, name: str) -> Optional[Function]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    @property
    def names(self) -> list:
        return [f.name for f in self.functions]


# -- traversal helpers ----------------------------------------------------------------


def expr_children(e) -> tuple:
    if isinstance(e, (Unary, Cast)):
        return (e.arg,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Call):
        return tuple(a.expr for a in e.args)
    if isinstance(e, IfExpr):
        return (e.cond, e.then, e.orelse)
    return ()


def walk_expr(e):
    yield e
    for c in expr_children(e):
        yield from walk_expr(c)


def calls_in(e) -> list:
    return [x for x in walk_expr(e) if isinstance(x, Call)]


def names_in(e) -> set:
    out = set()
    for x in walk_expr(e):
        if isinstance(x, (Name, Old)):
            out.add(x.name)
    return out


def walk_stmts(stmts):
    for s in stmts:
        yield s
        if isinstance(s, While):
            yield from walk_stmts(s.body)
        elif isinstance(s, If):
            yield from walk_stmts(s.then)
            yield from walk_stmts(s.orelse)


def assigned_names(stmts) -> set:
    """Variables assigned (directly or through a ``&mut`` argument) anywhere in ``stmts``."""
    out = set()
    for s in walk_stmts(stmts):
        if isinstance(s, Assign):
            out.add(s.name)
        exprs = stmt_exprs(s)
        for e in exprs:
            for c in calls_in(e):
                for a in c.args:
                    if a.passing == "mut" and isinstance(a.expr, Name):
                        out.add(a.expr.name)
    return out


def stmt_exprs(s) -> list:
    """Expressions held directly by a statement (not by nested blocks)."""
    if isinstance(s, Let):
        return [s.init]
    if isinstance(s, Assign):
        return [s.value]
    if isinstance(s, While):
        return [s.cond, *s.invariants]
    if isinstance(s, (Assert,)):
        return [s.cond]
    if isinstance(s, Return):
        return [s.value] if s.value is not None else []
    if isinstance(s, (ExprStmt, Tail)):
        return [s.expr]
    if isinstance(s, If):
        return [s.cond]
    return []
