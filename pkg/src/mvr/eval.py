"""Small-step evaluation of (heap, expression) configurations."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from .calculus.ops import is_value, substitute, substitute_many
from .calculus.sexpr import print_expr
from .calculus.syntax import (
    EMPTY_DECLS,
    Add,
    App,
    Bottom,
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
    NoneLit,
    PData,
    PermLit,
    PRead,
    PWrite,
    Seq,
    SomeE,
    Struct,
    UnitLit,
)
from .typecheck.types import default_value

DEFAULT_BUDGET = 100_000


@dataclass(frozen=True)
class Configuration:
    heap: Expr
    expr: Expr
    decls: DeclTable = EMPTY_DECLS


class StuckReason(enum.Enum):
    CRASH_NEVER_ON_BOTTOM = "crash_never_on_bottom"
    NO_RULE_APPLIES = "no_rule_applies"


@dataclass(frozen=True)
class Stepped:
    config: Configuration
    rule: str
    redex: Expr


@dataclass(frozen=True)
class AlreadyValue:
    pass


@dataclass(frozen=True)
class Stuck:
    reason: StuckReason
    redex: Expr


StepResult = Union[Stepped, AlreadyValue, Stuck]


# -- evaluation contexts -------------------------------------------------------

# A context is a tuple of frames from the outside in; a frame is
# (node, field name, tuple index or None) and plugging rebuilds the node.


def _frame_plug(frame, inner: Expr) -> Expr:
    node, name, idx = frame
    if idx is None:
        return replace(node, **{name: inner})
    items = list(getattr(node, name))
    items[idx] = inner
    return replace(node, **{name: tuple(items)})


def plug(ctx: tuple, e: Expr) -> Expr:
    for frame in reversed(ctx):
        e = _frame_plug(frame, e)
    return e


def _next_hole(e: Expr):
    """The frame of the evaluation position of ``e`` or None if ``e`` is
    itself the redex (or a value)."""
    if isinstance(e, Add):
        if not is_value(e.left):
            return (e, "left", None), e.left
        if not is_value(e.right):
            return (e, "right", None), e.right
        return None
    if isinstance(e, (CrashNever, HWrite, Drop, Copy, SomeE)):
        return None if is_value(e.arg) else ((e, "arg", None), e.arg)
    if isinstance(e, (PData, PRead)):
        return None if is_value(e.perm) else ((e, "perm", None), e.perm)
    if isinstance(e, PWrite):
        if not is_value(e.value):
            return (e, "value", None), e.value
        if not is_value(e.perm):
            return (e, "perm", None), e.perm
        return None
    if isinstance(e, Seq):
        return None if is_value(e.first) else ((e, "first", None), e.first)
    if isinstance(e, (Let, LetStruct)):
        return None if is_value(e.bound) else ((e, "bound", None), e.bound)
    if isinstance(e, IfLet):
        return None if is_value(e.scrutinee) else ((e, "scrutinee", None), e.scrutinee)
    if isinstance(e, Struct):
        for k, a in enumerate(e.args):
            if not is_value(a):
                return (e, "args", k), a
        return None
    if isinstance(e, App):
        if not is_value(e.fn):
            return (e, "fn", None), e.fn
        if not is_value(e.arg):
            return (e, "arg", None), e.arg
        return None
    return None


def decompose(e: Expr):
    """Return ("value", None) or (context, redex)."""
    if is_value(e):
        return "value", None
    ctx = []
    while True:
        nxt = _next_hole(e)
        if nxt is None:
            return tuple(ctx), e
        frame, e = nxt
        ctx.append(frame)


# -- reduction ---------------------------------------------------------------


def _reduce(heap: Expr, r: Expr, decls: DeclTable):
    """Return (heap', e', rule) for a redex, or a StuckReason."""
    if isinstance(r, Add) and isinstance(r.left, IntLit) and isinstance(r.right, IntLit):
        return heap, IntLit(r.left.value + r.right.value), "add"
    if isinstance(r, Default):
        try:
            return heap, default_value(decls, r.ty), "default"
        except ValueError:
            return StuckReason.NO_RULE_APPLIES
    if isinstance(r, HData):
        return heap, heap, "hdata"
    if isinstance(r, HRead):
        return heap, heap, "hread"
    if isinstance(r, HWrite):
        return r.arg, UnitLit(), "hwrite"
    if isinstance(r, PData) and isinstance(r.perm, PermLit):
        return heap, r.perm.value, "pdata"
    if isinstance(r, PRead) and isinstance(r.perm, PermLit) and r.perm.index == r.index:
        return heap, r.perm.value, "pread"
    if isinstance(r, PWrite) and isinstance(r.perm, PermLit) and r.perm.index == r.index:
        return heap, PermLit(r.index, r.value), "pwrite"
    if isinstance(r, Drop):
        return heap, UnitLit(), "drop"
    if isinstance(r, Copy):
        return heap, r.arg, "copy"
    if isinstance(r, Seq) and isinstance(r.first, UnitLit):
        return heap, r.second, "seq"
    if isinstance(r, Let):
        return heap, substitute(r.body, r.name, r.bound), "let"
    if isinstance(r, IfLet):
        if isinstance(r.scrutinee, NoneLit):
            return heap, r.orelse, "iflet-none"
        if isinstance(r.scrutinee, SomeE):
            return heap, substitute(r.then, r.name, r.scrutinee.arg), "iflet-some"
    if (isinstance(r, LetStruct) and isinstance(r.bound, Struct) and r.bound.name == r.name
            and len(r.bound.args) == len(r.binders)):
        return heap, substitute_many(r.body, zip(r.binders, r.bound.args)), "letstruct"
    if isinstance(r, App) and isinstance(r.fn, Lambda):
        return heap, substitute(r.fn.body, r.fn.param, r.arg), "app"
    if isinstance(r, CrashNever) and isinstance(r.arg, Bottom):
        return StuckReason.CRASH_NEVER_ON_BOTTOM
    return StuckReason.NO_RULE_APPLIES


def step(c: Configuration) -> StepResult:
    ctx, redex = decompose(c.expr)
    if ctx == "value":
        return AlreadyValue()
    out = _reduce(c.heap, redex, c.decls)
    if isinstance(out, StuckReason):
        return Stuck(out, redex)
    heap, reduced, rule = out
    return Stepped(Configuration(heap, plug(ctx, reduced), c.decls), rule, redex)


@dataclass(frozen=True)
class Finished:
    heap: Expr
    value: Expr
    steps: int


@dataclass(frozen=True)
class Crashed:
    config: Configuration
    steps: int
    reason: StuckReason


@dataclass(frozen=True)
class BudgetExhausted:
    config: Configuration
    budget: int


RunOutcome = Union[Finished, Crashed, BudgetExhausted]


def run(c: Configuration, budget: int = DEFAULT_BUDGET,
        on_step: Optional[Callable[[int, Stepped], None]] = None) -> RunOutcome:
    if budget < 0:
        raise ValueError("budget must be non-negative")
    steps = 0
    while True:
        if is_value(c.expr):
            return Finished(c.heap, c.expr, steps)
        if steps >= budget:
            return BudgetExhausted(c, budget)
        r = step(c)
        if isinstance(r, Stuck):
            return Crashed(c, steps, r.reason)
        if on_step is not None:
            on_step(steps, r)
        c = r.config
        steps += 1


def trace_lines(c: Configuration, budget: int = DEFAULT_BUDGET):
    """Run ``c`` and return (outcome, one line per step)."""
    lines = []

    def record(i, r: Stepped):
        lines.append(f"{i} {r.rule} {print_expr(r.redex)}")

    return run(c, budget, record), lines


@dataclass
class SnapshotEvidence:
    """What permission reads observed while running a configuration."""

    pdata: list = field(default_factory=list)  # (index, value read from a snapshot)
    pread: list = field(default_factory=list)  # (index, value read from the live permission)
    pwrite: list = field(default_factory=list)  # (index, old value, new value)
    outcome: Optional[RunOutcome] = None

    def stale_snapshot_reads(self) -> list:
        """pdata reads that returned a value older than a preceding write."""
        stale = []
        for idx, val in self.pdata:
            if any(i == idx and old == val and new != val for i, old, new in self.pwrite):
                stale.append((idx, val))
        return stale


def spec_determinism_probe(c: Configuration, budget: int = DEFAULT_BUDGET) -> SnapshotEvidence:
    ev = SnapshotEvidence()

    def record(_, r: Stepped):
        x = r.redex
        if r.rule == "pdata":
            ev.pdata.append((x.perm.index, x.perm.value))
        elif r.rule == "pread":
            ev.pread.append((x.index, x.perm.value))
        elif r.rule == "pwrite":
            ev.pwrite.append((x.index, x.perm.value, x.value))

    ev.outcome = run(c, budget, record)
    return ev
