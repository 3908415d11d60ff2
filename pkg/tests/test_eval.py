from hypothesis import given

from mvr.calculus.ops import is_value
from mvr.calculus.sexpr import parse_expr as E
from mvr.calculus.sexpr import print_expr
from mvr.calculus.syntax import IntLit, NoneLit, SomeE, UnitLit
from mvr.eval import (
    AlreadyValue,
    BudgetExhausted,
    Configuration,
    Crashed,
    Finished,
    Stepped,
    Stuck,
    StuckReason,
    decompose,
    plug,
    run,
    spec_determinism_probe,
    step,
    trace_lines,
)
from mvr.metatheory.enumerate import CORPUS_DECLS
from mvr.metatheory.properties import SELF_APPLY_EXPR, SELF_APPLY_HEAP

import oracles
from strategies import exprs, pure_programs


def cfg(text, heap=IntLit(0)):
    return Configuration(heap, E(text), CORPUS_DECLS)


class TestDecompose:
    def test_left_operand_first(self):
        ctx, redex = decompose(E("(+ (+ 1 2) 3)"))
        assert redex == E("(+ 1 2)")
        assert plug(ctx, IntLit(9)) == E("(+ 9 3)")

    def test_value(self):
        assert decompose(E("(Some 1 int)")) == ("value", None)

    def test_struct_context(self):
        ctx, redex = decompose(E("(struct S 1 (+ 2 3) (hread))"))
        assert redex == E("(+ 2 3)")
        assert plug(ctx, IntLit(5)) == E("(struct S 1 5 (hread))")

    @given(exprs)
    def test_plug_inverts_decompose(self, e):
        ctx, redex = decompose(e)
        if ctx == "value":
            assert is_value(e)
        else:
            assert not is_value(redex) or redex is e
            assert plug(ctx, redex) == e


class TestStep:
    def test_pwrite(self):
        r = step(cfg("(pwrite 0 9 (permission 0 5))"))
        assert isinstance(r, Stepped) and r.config.expr == E("(permission 0 9)") and r.rule == "pwrite"

    def test_crash_never(self):
        r = step(cfg("(crash_never bot)"))
        assert isinstance(r, Stuck) and r.reason is StuckReason.CRASH_NEVER_ON_BOTTOM

    def test_hwrite(self):
        r = step(cfg("(hwrite 7)", heap=IntLit(4)))
        assert r.config.heap == IntLit(7) and r.config.expr == UnitLit()

    def test_reads(self):
        assert step(cfg("(hread)", heap=IntLit(4))).config.expr == IntLit(4)
        assert step(cfg("(pdata (permission 0 5))")).config.expr == IntLit(5)
        assert step(cfg("(pread 0 (permission 0 5))")).config.expr == IntLit(5)

    def test_default(self):
        assert step(cfg("(default S)")).config.expr == E("(struct S 0 0)")
        assert step(cfg("(default (Option int))")).config.expr == NoneLit(E("(default int)").ty)

    def test_no_rule(self):
        r = step(cfg("(pread 1 (permission 0 5))"))
        assert isinstance(r, Stuck) and r.reason is StuckReason.NO_RULE_APPLIES
        assert isinstance(step(cfg("(app 1 2)")), Stuck)

    def test_value_does_not_step(self):
        assert isinstance(step(cfg("(permission 3 7)")), AlreadyValue)

    def test_iflet_and_struct(self):
        assert step(cfg("(iflet x (Some 2 int) (+ x x) 0)")).config.expr == E("(+ 2 2)")
        assert step(cfg("(iflet x (None int) x 0)")).config.expr == IntLit(0)
        assert step(cfg("(letstruct S (a b) (struct S 1 2) (+ a b))")).config.expr == E("(+ 1 2)")

    @given(exprs)
    def test_deterministic(self, e):
        c = Configuration(IntLit(0), e, CORPUS_DECLS)
        assert step(c) == step(c)


class TestRun:
    def test_literal(self):
        out = run(cfg("5"))
        assert isinstance(out, Finished) and out.steps == 0 and out.value == IntLit(5)

    def test_let_copy(self):
        out = run(cfg("(let exec x (+ 1 1) (+ (copy x) (copy x)))"))
        assert isinstance(out, Finished) and out.value == IntLit(4)

    def test_budget_zero(self):
        out = run(cfg("(+ 1 2)"), budget=0)
        assert isinstance(out, BudgetExhausted) and out.budget == 0

    def test_crash(self):
        out = run(cfg("(seq (crash_never bot) 1)"))
        assert isinstance(out, Crashed) and out.reason is StuckReason.CRASH_NEVER_ON_BOTTOM

    def test_self_application_diverges(self):
        out = run(Configuration(SELF_APPLY_HEAP, SELF_APPLY_EXPR), budget=500)
        assert isinstance(out, BudgetExhausted)

    def test_trace_lines(self):
        out, lines = trace_lines(cfg("(+ (+ 1 2) 3)"))
        assert lines == ["0 add (+ 1 2)", "1 add (+ 3 3)"]
        assert out.value == IntLit(6)

    @given(pure_programs)
    def test_matches_big_step_oracle(self, prog):
        expected = oracles.big_step(prog)
        out = run(Configuration(IntLit(0), E(oracles.to_sexpr(prog))))
        assert isinstance(out, Finished)
        assert out.value == IntLit(expected)


class TestSnapshots:
    def test_stale_snapshot(self):
        text = ("(let proof p (permission 0 5) (let spec old p "
                "(let proof q (pwrite 0 9 p) (struct S (pread 0 q) (pdata old)))))")
        ev = spec_determinism_probe(cfg(text))
        assert ev.pdata == [(0, IntLit(5))]
        assert ev.pread == [(0, IntLit(9))]
        assert ev.stale_snapshot_reads() == [(0, IntLit(5))]
        assert ev.outcome.value == E("(struct S 9 5)")

    def test_no_write(self):
        ev = spec_determinism_probe(cfg("(let spec p (permission 0 5) (struct S (pread 0 p) (pdata p)))"))
        assert ev.pread[0][1] == ev.pdata[0][1] and ev.stale_snapshot_reads() == []


def test_print_of_stepped_configs_is_canonical():
    c = cfg("(seq (drop 1) (Some (+ 1 1) int))")
    out, _ = trace_lines(c)
    assert print_expr(out.value) == "(Some 2 int)"
    assert out.value == SomeE(IntLit(2), E("(None int)").ty)
