"""S-expression concrete syntax for calculus terms, types and files.

Grammar (one form per production)::

    type  ::= int | Unit | Never | S | (perm i type) | (Option type)
            | (Fn m O L mu type mu type)
    mu    ::= spec | proof-linear | proof-shared | exec-linear | exec-shared
    expr  ::= x | i | (+ e e) | () | bot | (default type) | (crash_never e)
            | (hdata) | (hread) | (hwrite e)
            | (permission i e) | (pdata e) | (pread i e) | (pwrite i e e)
            | (drop e) | (copy e)
            | (seq e e [borrow]) | (let m x e e [borrow])
            | (None type) | (Some e type) | (iflet x e e e)
            | (struct S e ...) | (letstruct S (x ...) e e)
            | (lambda m O L x mu type e) | (app e e)
    borrow ::= (borrow item ...)      ; identifiers are variables, integers
                                      ; are permission indices

A calculus file is a sequence of top-level forms::

    (datatype S (m type) ...)   (heap-type type)   (heap e)
    (perm-env (i usage) ...)    (env (x mu type) ...)
    (access m)                  (expect mu type)   (expr e)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    INT,
    NEVER,
    UNIT,
    Add,
    App,
    Borrow,
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
    Span,
    Struct,
    TFn,
    TInt,
    TNever,
    TOption,
    TPerm,
    TStruct,
    TUnit,
    Type,
    UnitLit,
    Usage,
    Var,
)


class SyntaxErr(Exception):
    def __init__(self, message: str, span: Optional[Span] = None):
        self.message = message
        self.span = span
        where = f"{span}: " if span else ""
        super().__init__(f"{where}{message}")


# -- reader ------------------------------------------------------------------


@dataclass
class Atom:
    text: str
    span: Span


@dataclass
class SList:
    items: list
    span: Span


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def read_all(text: str) -> list:
    """Read every top-level datum from ``text``."""
    stack: list = [SList([], Span(1, 1))]
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        tok = m.group(0)
        span = Span(line, pos - line_start + 1)
        if tok == "(":
            stack.append(SList([], span))
        elif tok == ")":
            if len(stack) == 1:
                raise SyntaxErr("unbalanced ')'", span)
            done = stack.pop()
            stack[-1].items.append(done)
        elif not tok[0].isspace() and tok[0] != ";":
            stack[-1].items.append(Atom(tok, span))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    if len(stack) != 1:
        raise SyntaxErr("unclosed '('", stack[-1].span)
    return stack[0].items


def read_one(text: str):
    data = read_all(text)
    if len(data) != 1:
        raise SyntaxErr(f"expected exactly one datum, found {len(data)}")
    return data[0]


# -- datum -> AST --------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*$")
_INT = re.compile(r"-?[0-9]+$")

KEYWORDS = frozenset(
    "+ bot default crash_never hdata hread hwrite permission pdata pread pwrite "
    "drop copy seq let None Some iflet struct letstruct lambda app borrow "
    "int Unit Never perm Option Fn spec proof exec".split()
)

_MU_NAMES = {mu.value: mu for mu in ModeUsage}
_MODE_NAMES = {m.value: m for m in Mode}


def _atom(d, what: str) -> str:
    if not isinstance(d, Atom):
        raise SyntaxErr(f"expected {what}", d.span)
    return d.text


def _int(d, what: str = "integer") -> int:
    t = _atom(d, what)
    if not _INT.match(t):
        raise SyntaxErr(f"expected {what}, got {t!r}", d.span)
    return int(t)


def _ident(d, what: str = "identifier") -> str:
    t = _atom(d, what)
    if not _IDENT.match(t) or t in KEYWORDS:
        raise SyntaxErr(f"expected {what}, got {t!r}", d.span)
    return t


def _mode(d) -> Mode:
    t = _atom(d, "mode")
    if t not in _MODE_NAMES:
        raise SyntaxErr(f"expected mode, got {t!r}", d.span)
    return _MODE_NAMES[t]


def _mu(d) -> ModeUsage:
    t = _atom(d, "mode+usage")
    if t not in _MU_NAMES:
        raise SyntaxErr(f"expected mode+usage, got {t!r}", d.span)
    return _MU_NAMES[t]


def _enum(d, cls, what):
    t = _atom(d, what)
    for v in cls:
        if v.value == t:
            return v
    raise SyntaxErr(f"expected {what}, got {t!r}", d.span)


def _arity(d: SList, n: int, form: str):
    if len(d.items) != n:
        raise SyntaxErr(f"({form} ...) takes {n - 1} argument(s), got {len(d.items) - 1}", d.span)


def datum_to_type(d) -> Type:
    if isinstance(d, Atom):
        t = d.text
        if t == "int":
            return INT
        if t == "Unit":
            return UNIT
        if t == "Never":
            return NEVER
        return TStruct(_ident(d, "type"))
    if not d.items:
        raise SyntaxErr("empty type", d.span)
    head = _atom(d.items[0], "type constructor")
    if head == "perm":
        _arity(d, 3, head)
        return TPerm(_int(d.items[1], "permission index"), datum_to_type(d.items[2]))
    if head == "Option":
        _arity(d, 2, head)
        return TOption(datum_to_type(d.items[1]))
    if head == "Fn":
        _arity(d, 8, head)
        _, m, o, l, mu1, t1, mu2, t2 = d.items
        return TFn(_mode(m), _enum(o, Callability, "callability"),
                   _enum(l, Lifetime, "lifetime"), _mu(mu1), datum_to_type(t1),
                   _mu(mu2), datum_to_type(t2))
    raise SyntaxErr(f"unknown type constructor {head!r}", d.span)


def _borrow(d) -> Borrow:
    if not (isinstance(d, SList) and d.items and isinstance(d.items[0], Atom)
            and d.items[0].text == "borrow"):
        raise SyntaxErr("expected (borrow ...)", d.span)
    names, perms = [], []
    for item in d.items[1:]:
        if isinstance(item, Atom) and _INT.match(item.text):
            perms.append(int(item.text))
        else:
            names.append(_ident(item, "borrowed variable"))
    return Borrow(tuple(names), tuple(perms))


_NULLARY = {"hdata": HData, "hread": HRead}
_UNARY = {"crash_never": CrashNever, "hwrite": HWrite, "pdata": PData, "drop": Drop, "copy": Copy}


def datum_to_expr(d) -> Expr:
    sp = d.span
    if isinstance(d, Atom):
        t = d.text
        if _INT.match(t):
            return IntLit(int(t), span=sp)
        if t == "bot":
            return Bottom(span=sp)
        return Var(_ident(d, "expression"), span=sp)
    if not d.items:
        return UnitLit(span=sp)
    head = _atom(d.items[0], "expression form")
    args = d.items[1:]
    if head == "+":
        _arity(d, 3, head)
        return Add(datum_to_expr(args[0]), datum_to_expr(args[1]), span=sp)
    if head in _NULLARY:
        _arity(d, 1, head)
        return _NULLARY[head](span=sp)
    if head in _UNARY:
        _arity(d, 2, head)
        return _UNARY[head](datum_to_expr(args[0]), span=sp)
    if head == "default":
        _arity(d, 2, head)
        return Default(datum_to_type(args[0]), span=sp)
    if head == "permission":
        _arity(d, 3, head)
        return PermLit(_int(args[0], "permission index"), datum_to_expr(args[1]), span=sp)
    if head == "pread":
        _arity(d, 3, head)
        return PRead(_int(args[0], "permission index"), datum_to_expr(args[1]), span=sp)
    if head == "pwrite":
        _arity(d, 4, head)
        return PWrite(_int(args[0], "permission index"), datum_to_expr(args[1]),
                      datum_to_expr(args[2]), span=sp)
    if head == "seq":
        if len(d.items) not in (3, 4):
            raise SyntaxErr("(seq e1 e2 [borrow]) takes 2 or 3 arguments", sp)
        b = _borrow(args[2]) if len(args) == 3 else None
        return Seq(datum_to_expr(args[0]), datum_to_expr(args[1]), b, span=sp)
    if head == "let":
        if len(d.items) not in (5, 6):
            raise SyntaxErr("(let m x e1 e2 [borrow]) takes 4 or 5 arguments", sp)
        b = _borrow(args[4]) if len(args) == 5 else None
        return Let(_mode(args[0]), _ident(args[1], "variable"), datum_to_expr(args[2]),
                   datum_to_expr(args[3]), b, span=sp)
    if head == "None":
        _arity(d, 2, head)
        return NoneLit(datum_to_type(args[0]), span=sp)
    if head == "Some":
        _arity(d, 3, head)
        return SomeE(datum_to_expr(args[0]), datum_to_type(args[1]), span=sp)
    if head == "iflet":
        _arity(d, 5, head)
        return IfLet(_ident(args[0], "variable"), datum_to_expr(args[1]),
                     datum_to_expr(args[2]), datum_to_expr(args[3]), span=sp)
    if head == "struct":
        if len(d.items) < 2:
            raise SyntaxErr("(struct S e ...) needs a datatype name", sp)
        return Struct(_ident(args[0], "datatype name"),
                      tuple(datum_to_expr(a) for a in args[1:]), span=sp)
    if head == "letstruct":
        _arity(d, 5, head)
        if not isinstance(args[1], SList):
            raise SyntaxErr("expected binder list", args[1].span)
        binders = tuple(_ident(b, "variable") for b in args[1].items)
        if len(set(binders)) != len(binders):
            raise SyntaxErr("duplicate binder in letstruct", args[1].span)
        return LetStruct(_ident(args[0], "datatype name"), binders,
                         datum_to_expr(args[2]), datum_to_expr(args[3]), span=sp)
    if head == "lambda":
        _arity(d, 8, head)
        m, o, l, x, mu, t, body = args
        return Lambda(_mode(m), _enum(o, Callability, "callability"),
                      _enum(l, Lifetime, "lifetime"), _ident(x, "parameter"), _mu(mu),
                      datum_to_type(t), datum_to_expr(body), span=sp)
    if head == "app":
        _arity(d, 3, head)
        return App(datum_to_expr(args[0]), datum_to_expr(args[1]), span=sp)
    raise SyntaxErr(f"unknown expression form {head!r}", sp)


def parse_type(text: str) -> Type:
    return datum_to_type(read_one(text))


def parse_expr(text: str) -> Expr:
    return datum_to_expr(read_one(text))


# -- printer -----------------------------------------------------------------


def print_type(t: Type) -> str:
    if isinstance(t, TInt):
        return "int"
    if isinstance(t, TUnit):
        return "Unit"
    if isinstance(t, TNever):
        return "Never"
    if isinstance(t, TStruct):
        return t.name
    if isinstance(t, TPerm):
        return f"(perm {t.index} {print_type(t.inner)})"
    if isinstance(t, TOption):
        return f"(Option {print_type(t.inner)})"
    if isinstance(t, TFn):
        return (f"(Fn {t.mode} {t.callability} {t.lifetime} {t.arg_mu} {print_type(t.arg)} "
                f"{t.res_mu} {print_type(t.res)})")
    raise TypeError(f"not a type: {t!r}")


def _print_borrow(b: Optional[Borrow]) -> str:
    if b is None:
        return ""
    items = list(b.names) + [str(i) for i in b.perms]
    return " (borrow" + "".join(" " + s for s in items) + ")"


def print_expr(e: Expr) -> str:
    p = print_expr
    if isinstance(e, Var):
        return e.name
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, UnitLit):
        return "()"
    if isinstance(e, Bottom):
        return "bot"
    if isinstance(e, Add):
        return f"(+ {p(e.left)} {p(e.right)})"
    if isinstance(e, Default):
        return f"(default {print_type(e.ty)})"
    if isinstance(e, HData):
        return "(hdata)"
    if isinstance(e, HRead):
        return "(hread)"
    for name, cls in _UNARY.items():
        if type(e) is cls:
            sub = e.perm if isinstance(e, PData) else e.arg
            return f"({name} {p(sub)})"
    if isinstance(e, PermLit):
        return f"(permission {e.index} {p(e.value)})"
    if isinstance(e, PRead):
        return f"(pread {e.index} {p(e.perm)})"
    if isinstance(e, PWrite):
        return f"(pwrite {e.index} {p(e.value)} {p(e.perm)})"
    if isinstance(e, Seq):
        return f"(seq {p(e.first)} {p(e.second)}{_print_borrow(e.borrow)})"
    if isinstance(e, Let):
        return f"(let {e.mode} {e.name} {p(e.bound)} {p(e.body)}{_print_borrow(e.borrow)})"
    if isinstance(e, NoneLit):
        return f"(None {print_type(e.ty)})"
    if isinstance(e, SomeE):
        return f"(Some {p(e.arg)} {print_type(e.ty)})"
    if isinstance(e, IfLet):
        return f"(iflet {e.name} {p(e.scrutinee)} {p(e.then)} {p(e.orelse)})"
    if isinstance(e, Struct):
        return "(struct " + " ".join([e.name] + [p(a) for a in e.args]) + ")"
    if isinstance(e, LetStruct):
        return f"(letstruct {e.name} ({' '.join(e.binders)}) {p(e.bound)} {p(e.body)})"
    if isinstance(e, Lambda):
        return (f"(lambda {e.mode} {e.callability} {e.lifetime} {e.param} {e.param_mu} "
                f"{print_type(e.param_ty)} {p(e.body)})")
    if isinstance(e, App):
        return f"(app {p(e.fn)} {p(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


# -- files -------------------------------------------------------------------


@dataclass
class CalculusFile:
    """Everything needed to check and run one closed or open configuration."""

    decls: DeclTable = field(default_factory=DeclTable)
    heap_type: Type = INT
    heap: Expr = field(default_factory=lambda: IntLit(0))
    perms: dict = field(default_factory=dict)  # index -> Usage
    env: dict = field(default_factory=dict)  # name -> (ModeUsage, Type)
    access: Mode = Mode.EXEC
    expect: Optional[tuple] = None  # (ModeUsage, Type)
    expr: Optional[Expr] = None


def parse_calculus_file(text: str) -> CalculusFile:
    out = CalculusFile()
    decls = []
    seen = set()
    for d in read_all(text):
        if not isinstance(d, SList) or not d.items:
            raise SyntaxErr("expected a top-level form", d.span)
        head = _atom(d.items[0], "top-level form")
        args = d.items[1:]
        if head in seen and head != "datatype":
            raise SyntaxErr(f"duplicate ({head} ...) form", d.span)
        seen.add(head)
        if head == "datatype":
            if not args:
                raise SyntaxErr("(datatype S (m type) ...) needs a name", d.span)
            fields = []
            for f in args[1:]:
                if not isinstance(f, SList) or len(f.items) != 2:
                    raise SyntaxErr("datatype field must be (mode type)", f.span)
                fields.append((_mode(f.items[0]), datum_to_type(f.items[1])))
            decls.append(DatatypeDecl(_ident(args[0], "datatype name"), tuple(fields)))
        elif head == "heap-type":
            _arity(d, 2, head)
            out.heap_type = datum_to_type(args[0])
        elif head == "heap":
            _arity(d, 2, head)
            out.heap = datum_to_expr(args[0])
        elif head == "perm-env":
            for entry in args:
                if not isinstance(entry, SList) or len(entry.items) != 2:
                    raise SyntaxErr("perm-env entry must be (index usage)", entry.span)
                i = _int(entry.items[0], "permission index")
                if i in out.perms:
                    raise SyntaxErr(f"duplicate permission index {i}", entry.span)
                out.perms[i] = _enum(entry.items[1], Usage, "usage")
        elif head == "env":
            for entry in args:
                if not isinstance(entry, SList) or len(entry.items) != 3:
                    raise SyntaxErr("env entry must be (x mu type)", entry.span)
                x = _ident(entry.items[0], "variable")
                if x in out.env:
                    raise SyntaxErr(f"duplicate variable {x}", entry.span)
                out.env[x] = (_mu(entry.items[1]), datum_to_type(entry.items[2]))
        elif head == "access":
            _arity(d, 2, head)
            out.access = _mode(args[0])
        elif head == "expect":
            _arity(d, 3, head)
            out.expect = (_mu(args[0]), datum_to_type(args[1]))
        elif head == "expr":
            _arity(d, 2, head)
            out.expr = datum_to_expr(args[0])
        else:
            raise SyntaxErr(f"unknown top-level form {head!r}", d.span)
    try:
        out.decls = DeclTable(tuple(decls))
    except ValueError as exc:
        raise SyntaxErr(str(exc)) from None
    if out.expr is None:
        raise SyntaxErr("missing (expr ...) form")
    return out


def print_calculus_file(f: CalculusFile) -> str:
    lines = []
    for d in f.decls:
        fields = "".join(f" ({m} {print_type(t)})" for m, t in d.fields)
        lines.append(f"(datatype {d.name}{fields})")
    lines.append(f"(heap-type {print_type(f.heap_type)})")
    lines.append(f"(heap {print_expr(f.heap)})")
    if f.perms:
        lines.append("(perm-env" + "".join(f" ({i} {u})" for i, u in sorted(f.perms.items())) + ")")
    if f.env:
        lines.append("(env" + "".join(f" ({x} {mu} {print_type(t)})" for x, (mu, t) in f.env.items()) + ")")
    lines.append(f"(access {f.access})")
    if f.expect is not None:
        lines.append(f"(expect {f.expect[0]} {print_type(f.expect[1])})")
    lines.append(f"(expr {print_expr(f.expr)})")
    return "\n".join(lines) + "\n"
