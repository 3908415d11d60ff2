import itertools

import pytest
from hypothesis import given

from mvr.calculus.ops import free_vars, is_value, size, substitute
from mvr.calculus.sexpr import (
    SyntaxErr,
    parse_calculus_file,
    parse_expr,
    parse_type,
    print_calculus_file,
    print_expr,
    print_type,
)
from mvr.calculus.syntax import (
    INT,
    MODE_USAGES,
    MODES,
    Callability,
    IntLit,
    Lifetime,
    Mode,
    ModeUsage,
    TFn,
    TOption,
    Usage,
    join_mode_usage,
    lifetime_of,
    mode_join,
    mode_leq,
)

import oracles
from strategies import exprs, types, values

E = parse_expr


class TestModeLattice:
    @pytest.mark.parametrize("a,b", list(itertools.product(MODES, MODES)))
    def test_leq_matches_rank_oracle(self, a, b):
        assert mode_leq(a, b) == oracles.mode_leq(a.value, b.value)

    @pytest.mark.parametrize("a,b", list(itertools.product(MODES, MODES)))
    def test_join_matches_oracle(self, a, b):
        assert mode_join(a, b).value == oracles.mode_join(a.value, b.value)

    def test_join_laws(self):
        for a, b, c in itertools.product(MODES, MODES, MODES):
            assert mode_join(a, b) == mode_join(b, a)
            assert mode_join(a, mode_join(b, c)) == mode_join(mode_join(a, b), c)
            assert mode_join(a, a) == a
            assert mode_leq(a, b) == (mode_join(a, b) == b)

    def test_examples(self):
        assert mode_leq(Mode.EXEC, Mode.SPEC)
        assert not mode_leq(Mode.SPEC, Mode.PROOF)
        assert mode_join(Mode.PROOF, Mode.EXEC) is Mode.PROOF

    def test_spec_is_top(self):
        assert all(mode_leq(m, Mode.SPEC) for m in MODES)


class TestModeUsage:
    def test_spec_has_no_usage(self):
        assert ModeUsage.SPEC.usage is None
        assert not ModeUsage.SPEC.is_linear and not ModeUsage.SPEC.is_shared

    @pytest.mark.parametrize("mu", MODE_USAGES)
    def test_linear_iff_linear_usage(self, mu):
        assert mu.is_linear == (mu.usage is Usage.LINEAR)

    def test_of_requires_usage_outside_spec(self):
        with pytest.raises(ValueError):
            ModeUsage.of(Mode.EXEC)
        assert ModeUsage.of(Mode.SPEC, Usage.LINEAR) is ModeUsage.SPEC

    def test_join_mode_usage_examples(self):
        assert join_mode_usage(Mode.PROOF, ModeUsage.EXEC_LINEAR) is ModeUsage.PROOF_LINEAR
        assert join_mode_usage(Mode.EXEC, ModeUsage.SPEC) is ModeUsage.SPEC
        assert join_mode_usage(Mode.SPEC, ModeUsage.EXEC_LINEAR) is ModeUsage.SPEC

    @pytest.mark.parametrize("m,mu", list(itertools.product(MODES, MODE_USAGES)))
    def test_join_mode_usage_oracle(self, m, mu):
        joined = oracles.mode_join(m.value, mu.mode.value)
        got = join_mode_usage(m, mu)
        if joined == "spec":
            assert got is ModeUsage.SPEC
        else:
            assert got.mode.value == joined and got.usage is mu.usage


class TestLifetime:
    def fn(self, lt):
        return TFn(Mode.EXEC, Callability.ONCE, lt, ModeUsage.EXEC_LINEAR, INT, ModeUsage.EXEC_LINEAR, INT)

    def test_examples(self):
        assert lifetime_of(INT) is Lifetime.STATIC
        assert lifetime_of(self.fn(Lifetime.RESTRICTED)) is Lifetime.RESTRICTED
        assert lifetime_of(TOption(TOption(self.fn(Lifetime.RESTRICTED)))) is Lifetime.RESTRICTED
        assert lifetime_of(TOption(self.fn(Lifetime.STATIC))) is Lifetime.STATIC


class TestSubstitute:
    def test_direct(self):
        assert substitute(E("(+ x 1)"), "x", IntLit(2)) == E("(+ 2 1)")

    def test_shadowed_lambda_unchanged(self):
        lam = E("(lambda exec Many static x exec-linear int x)")
        assert substitute(lam, "x", IntLit(5)) == lam

    def test_let_both_occurrences(self):
        got = substitute(E("(let spec y x (+ y x))"), "x", IntLit(3))
        assert got == E("(let spec y 3 (+ y 3))")

    def test_let_shadowing_body(self):
        got = substitute(E("(let exec x x x)"), "x", IntLit(1))
        assert got == E("(let exec x 1 x)")

    def test_iflet_and_letstruct_binders(self):
        assert substitute(E("(iflet x (Some x int) x x)"), "x", IntLit(4)) == E("(iflet x (Some 4 int) x 4)")
        assert substitute(E("(letstruct S (x y) x (+ x z))"), "z", IntLit(0)) == E("(letstruct S (x y) x (+ x 0))")

    @given(exprs, values)
    def test_removes_free_occurrences(self, e, v):
        out = substitute(e, "x", v)
        assert "x" not in free_vars(out)
        assert free_vars(out) == free_vars(e) - {"x"}

    @given(exprs, values, values)
    def test_compositional(self, e, v, w):
        a = substitute(substitute(e, "x", v), "y", w)
        b = substitute(substitute(e, "y", w), "x", v)
        assert a == b

    @given(values, values)
    def test_value_preserved(self, v, w):
        assert is_value(v)
        assert is_value(substitute(v, "x", w))


class TestIsValue:
    def test_examples(self):
        assert is_value(E("(permission 3 7)"))
        assert not is_value(E("(+ 1 2)"))
        assert is_value(E("(Some (struct S 0 ()) S)"))
        assert not is_value(E("(Some (+ 0 1) int)"))
        assert is_value(E("(lambda spec Many static x spec int (+ x 1))"))
        assert not is_value(E("x"))


class TestConcreteSyntax:
    @given(exprs)
    def test_expr_round_trip(self, e):
        text = print_expr(e)
        again = parse_expr(text)
        assert again == e
        assert print_expr(again) == text

    @given(types)
    def test_type_round_trip(self, t):
        assert parse_type(print_type(t)) == t

    @given(exprs)
    def test_canonical_spacing(self, e):
        text = print_expr(e)
        assert "  " not in text and text == text.strip()

    def test_borrow_clause(self):
        e = E("(seq (drop (copy x)) x (borrow x 0))")
        assert e.borrow.names == ("x",) and e.borrow.perms == (0,)
        assert print_expr(e) == "(seq (drop (copy x)) x (borrow x 0))"

    def test_spans(self):
        e = E("(+ 1\n   (+ 2 3))")
        assert (e.right.span.line, e.right.span.col) == (2, 4)

    @pytest.mark.parametrize("bad", ["(+ 1)", "(let exec x 1)", "(perm 0)", "(", "(lambda exec Many static x int x)",
                                     "(app f)", "(bogus 1)"])
    def test_syntax_errors(self, bad):
        with pytest.raises(SyntaxErr):
            parse_expr(bad)

    def test_file_round_trip(self):
        text = (
            "(datatype S (exec int) (spec int))\n(heap-type int)\n(heap 4)\n(perm-env (0 linear))\n"
            "(env (x exec-shared int))\n(access exec)\n(expect exec-linear int)\n(expr (+ x 1))\n"
        )
        f = parse_calculus_file(text)
        assert parse_calculus_file(print_calculus_file(f)) == f


class TestSize:
    def test_counts_nodes_and_annotations(self):
        assert size(E("1")) == 1
        assert size(E("(+ 1 2)")) == 3
        assert size(E("(pdata (permission 0 1))")) == 4
        assert size(E("(None int)")) == 2
