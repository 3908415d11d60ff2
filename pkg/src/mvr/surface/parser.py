"""Recursive-descent parser for ``.mvr`` source text.

Grammar (informal)::

    program   := function*
    function  := ("#[" mode "]")? "pub"? "fn" IDENT "(" params? ")" ("->" type)? block
    param     := IDENT ":" ("&" "mut"?)? type
    block     := "{" clause* stmt* expr? "}"
    clause    := "requires" "(" exprs ")" ";"
               | "ensures" "(" ("|" IDENT ":" type "|")? exprs ")" ";"
               | "decreases" "(" expr ")" ";"
    exprs     := "[" expr ("," expr)* ","? "]" | expr
    stmt      := ("#[" ("spec"|"proof") "]")? "let" "mut"? IDENT (":" type)? "=" expr ";"
               | "*"? IDENT "=" expr ";"
               | "while" expr "{" ("invariant" "(" exprs ")" ";")? stmt* "}"
               | "assert" "(" expr ")" ";"
               | "return" expr? ";"
               | "reveal_with_fuel" "(" IDENT "," INT ")" ";"
               | "if" expr block ("else" (if-stmt | block))?
               | expr ";"

Expression precedence, loosest first: ``==>``, ``||``, ``&&``, comparisons,
``+ -``, ``* / %``, ``as``, unary ``! - *``. Integer literals may contain
``_`` separators; ``uN::MAX`` names the largest value of a machine type.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..calculus.syntax import Span
from . import ast as A


class SurfaceSyntaxError(Exception):
    def __init__(self, message: str, span: Span):
        self.message = message
        self.span = span
        super().__init__(f"{span.line}:{span.col}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "op", "eof"
    text: str
    span: Span


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<int>[0-9][0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==>|::|->|==|!=|<=|>=|&&|\|\||\#\[|[-+*/%<>=!&|(){}\[\],;:])
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "fn", "pub", "let", "mut", "while", "if", "else", "return", "assert", "requires",
    "ensures", "decreases", "invariant", "reveal_with_fuel", "true", "false", "as", "old",
}


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        span = Span(line, pos - line_start + 1)
        if m is None:
            raise SurfaceSyntaxError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        chunk = m.group()
        if kind in ("int", "ident", "op"):
            tokens.append(Token(kind, chunk, span))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1)))
    return tokens


_COMPARE = set(A.COMPARE)


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail(f"expected an identifier, found {self.describe(t)}")
        return self.advance()

    @staticmethod
    def describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def fail(self, message: str, span: Optional[Span] = None):
        raise SurfaceSyntaxError(message, span or self.tok.span)

    # -- declarations -------------------------------------------------------------

    def program(self) -> A.SurfaceProgram:
        fns = []
        while self.tok.kind != "eof":
            fns.append(self.function())
        return A.SurfaceProgram(fns)

    def function(self) -> A.Function:
        start = self.tok.span
        mode = "exec"
        if self.at("#["):
            self.advance()
            mode = self.ident_text()
            if mode not in A.MODES:
                self.fail(f"unknown mode attribute {mode!r}", start)
            self.expect("]")
        self.accept("pub")
        self.expect("fn")
        name = self.ident().text
        self.expect("(")
        params = []
        while not self.at(")"):
            params.append(self.param())
            if not self.accept(","):
                break
        self.expect(")")
        ret = None
        if self.accept("->"):
            ret = self.type_name()
        fn = A.Function(mode, name, params, ret, [], span=start)
        self.expect("{")
        self.clauses(fn)
        fn.body = self.block_rest()
        return fn

    def ident_text(self) -> str:
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected a name, found {self.describe(t)}")
        self.advance()
        return t.text

    def param(self) -> A.Param:
        t = self.ident()
        self.expect(":")
        passing = "value"
        if self.accept("&"):
            passing = "mut" if self.accept("mut") else "ref"
        return A.Param(t.text, self.type_name(), passing, t.span)

    def type_name(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text not in A.TYPES:
            self.fail(f"expected a type ({', '.join(A.TYPES)}), found {self.describe(t)}")
        self.advance()
        return t.text

    def clauses(self, fn: A.Function):
        while True:
            if self.at("requires") and self.peek().text == "(":
                self.advance()
                self.expect("(")
                fn.requires.extend(self.expr_list())
            elif self.at("ensures") and self.peek().text == "(":
                self.advance()
                self.expect("(")
                if self.accept("|"):
                    fn.ret_name = self.ident().text
                    self.expect(":")
                    self.type_name()
                    self.expect("|")
                fn.ensures.extend(self.expr_list())
            elif self.at("decreases") and self.peek().text == "(":
                self.advance()
                self.expect("(")
                if fn.decreases is not None:
                    self.fail("a function has at most one decreases clause")
                fn.decreases = self.expr()
            else:
                return
            self.expect(")")
            self.expect(";")

    def expr_list(self) -> list:
        if self.accept("["):
            out = []
            while not self.at("]"):
                out.append(self.expr())
                if not self.accept(","):
                    break
            self.expect("]")
            return out
        return [self.expr()]

    # -- statements -------------------------------------------------------------

    def block(self) -> list:
        self.expect("{")
        return self.block_rest()

    def block_rest(self) -> list:
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("unexpected end of input inside a block")
            stmt = self.statement()
            stmts.append(stmt)
            if isinstance(stmt, A.Tail) and not self.at("}"):
                self.fail(f"expected ';' or '}}', found {self.describe(self.tok)}")
        self.expect("}")
        if stmts and isinstance(stmts[-1], A.If):
            # a trailing if whose branches are expressions is the block's value
            value = block_as_expr(stmts[-1:])
            if value is not None:
                stmts[-1] = A.Tail(value, stmts[-1].span)
        return stmts

    def statement(self):
        t = self.tok
        span = t.span
        if self.at("#[") or self.at("let"):
            return self.let()
        if self.at("while"):
            return self.while_loop()
        if self.at("if"):
            return self.if_stmt()
        if self.at("assert") and self.peek().text == "(":
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.expect(";")
            return A.Assert(cond, span)
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return A.Return(value, span)
        if self.at("reveal_with_fuel"):
            self.advance()
            self.expect("(")
            fn = self.ident().text
            self.expect(",")
            if self.tok.kind != "int":
                self.fail("reveal_with_fuel expects an integer fuel")
            fuel = _int_value(self.advance().text)
            self.expect(")")
            self.expect(";")
            return A.Reveal(fn, fuel, span)
        if self.at("*") and self.peek().kind == "ident" and self.peek(2).text == "=":
            self.advance()
            name = self.ident().text
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return A.Assign(name, value, deref=True, span=span)
        if t.kind == "ident" and t.text not in KEYWORDS and self.peek().text == "=":
            self.advance()
            self.advance()
            value = self.expr()
            self.expect(";")
            return A.Assign(t.text, value, span=span)
        e = self.expr()
        if self.accept(";"):
            return A.ExprStmt(e, span)
        return A.Tail(e, span)

    def let(self) -> A.Let:
        span = self.tok.span
        ghost = None
        if self.accept("#["):
            ghost = self.ident_text()
            if ghost not in ("spec", "proof"):
                self.fail(f"a let may be marked #[spec] or #[proof], not {ghost!r}", span)
            self.expect("]")
        self.expect("let")
        mutable = self.accept("mut")
        name = self.ident().text
        ty = None
        if self.accept(":"):
            ty = self.type_name()
        self.expect("=")
        init = self.expr()
        self.expect(";")
        return A.Let(name, init, mutable, ghost, ty, span)

    def while_loop(self) -> A.While:
        span = self.advance().span
        cond = self.expr()
        self.expect("{")
        invariants = []
        if self.at("invariant") and self.peek().text == "(":
            self.advance()
            self.expect("(")
            invariants = self.expr_list()
            self.expect(")")
            self.expect(";")
        body = self.block_rest()
        return A.While(cond, invariants, body, span)

    def if_stmt(self) -> A.If:
        span = self.advance().span
        cond = self.expr()
        then = self.block()
        orelse = []
        if self.accept("else"):
            if self.at("if"):
                orelse = [self.if_stmt()]
            else:
                orelse = self.block()
        return A.If(cond, then, orelse, span)

    # -- expressions ---------------------------------------------------------------

    def expr(self):
        return self.implies()

    def implies(self):
        left = self.disjunction()
        if self.at("==>"):
            span = self.advance().span
            return A.Binary("==>", left, self.implies(), span)
        return left

    def disjunction(self):
        left = self.conjunction()
        while self.at("||"):
            span = self.advance().span
            left = A.Binary("||", left, self.conjunction(), span)
        return left

    def conjunction(self):
        left = self.comparison()
        while self.at("&&"):
            span = self.advance().span
            left = A.Binary("&&", left, self.comparison(), span)
        return left

    def comparison(self):
        left = self.additive()
        if self.tok.kind == "op" and self.tok.text in _COMPARE:
            op = self.advance()
            left = A.Binary(op.text, left, self.additive(), op.span)
            if self.tok.kind == "op" and self.tok.text in _COMPARE:
                self.fail("comparison operators do not chain; add parentheses")
        return left

    def additive(self):
        left = self.multiplicative()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.advance()
            left = A.Binary(op.text, left, self.multiplicative(), op.span)
        return left

    def multiplicative(self):
        left = self.cast()
        while self.tok.kind == "op" and self.tok.text in ("*", "/", "%"):
            op = self.advance()
            left = A.Binary(op.text, left, self.cast(), op.span)
        return left

    def cast(self):
        e = self.unary()
        while self.at("as"):
            span = self.advance().span
            e = A.Cast(e, self.type_name(), span)
        return e

    def unary(self):
        t = self.tok
        if t.kind == "op" and t.text in ("!", "-"):
            self.advance()
            return A.Unary(t.text, self.unary(), t.span)
        if t.kind == "op" and t.text == "*":
            self.advance()
            inner = self.unary()
            if isinstance(inner, A.Name) and not inner.deref:
                return A.Name(inner.name, True, t.span)
            if isinstance(inner, A.Old) and not inner.deref:
                return A.Old(inner.name, True, t.span)
            self.fail("'*' applies only to a reference variable or old(reference)", t.span)
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(_int_value(t.text), t.span)
        if self.at("true") or self.at("false"):
            self.advance()
            return A.BoolLit(t.text == "true", t.span)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("if"):
            return self.if_expr()
        if self.at("old") and self.peek().text == "(":
            self.advance()
            self.expect("(")
            name = self.ident().text
            self.expect(")")
            return A.Old(name, False, t.span)
        if t.kind == "ident" and t.text in A.MACHINE_WIDTHS and self.peek().text == "::":
            self.advance()
            self.advance()
            if self.ident_text() != "MAX":
                self.fail("only the MAX constant of a machine type is supported", t.span)
            return A.TypeMax(t.text, t.span)
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            if self.at("("):
                return self.call(t)
            return A.Name(t.text, False, t.span)
        self.fail(f"expected an expression, found {self.describe(t)}")

    def call(self, head: Token) -> A.Call:
        self.expect("(")
        args = []
        while not self.at(")"):
            span = self.tok.span
            passing = "value"
            if self.accept("&"):
                passing = "mut" if self.accept("mut") else "ref"
            args.append(A.Arg(self.expr(), passing, span))
            if not self.accept(","):
                break
        self.expect(")")
        return A.Call(head.text, tuple(args), head.span)

    def if_expr(self) -> A.IfExpr:
        span = self.advance().span
        cond = self.expr()
        then = self.expr_block()
        self.expect("else")
        if self.at("if"):
            orelse = self.if_expr()
        else:
            orelse = self.expr_block()
        return A.IfExpr(cond, then, orelse, span)

    def expr_block(self):
        self.expect("{")
        e = self.expr()
        self.expect("}")
        return e


def _int_value(text: str) -> int:
    return int(text.replace("_", ""))


def block_as_expr(stmts: list):
    """View a block as a single expression, or return None if it is not one.

    A block is an expression when it is a lone tail expression, or a lone
    ``if`` statement whose branches are themselves expression blocks.
    """
    if len(stmts) != 1:
        return None
    s = stmts[0]
    if isinstance(s, A.Tail):
        return s.expr
    if isinstance(s, A.If) and s.orelse:
        then = block_as_expr(s.then)
        orelse = block_as_expr(s.orelse)
        if then is not None and orelse is not None:
            return A.IfExpr(s.cond, then, orelse, s.span)
    return None


def parse_surface(text: str) -> A.SurfaceProgram:
    """Parse ``.mvr`` text. Raises SurfaceSyntaxError with line and column."""
    return Parser(text).program()


def parse_expr(text: str):
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.describe(p.tok)} after expression")
    return e
