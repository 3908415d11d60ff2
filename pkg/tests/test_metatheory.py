import json

import pytest

from mvr.calculus.ops import size
from mvr.calculus.sexpr import parse_expr as E
from mvr.calculus.sexpr import print_expr
from mvr.calculus.syntax import INT, MODE_USAGES, UNIT, IntLit, Mode, ModeUsage, TPerm, Usage
from mvr.metatheory.enumerate import CORPUS_DECLS, Case, EnumerationSpec, Enumerator, enumerate_configurations
from mvr.metatheory.properties import (
    SELF_APPLY_EXPR,
    SELF_APPLY_FN_TYPE,
    SELF_APPLY_HEAP,
    agreement_sweep,
    property_checker_agreement,
    property_preservation,
    property_progress,
    property_termination,
    sweep,
)
from mvr.typecheck.declarative import Declarative
from mvr.eval import BudgetExhausted, Configuration, run
from mvr.typecheck.configuration import check_configuration


def case(text, access=Mode.EXEC, perms=(), heap=IntLit(0)):
    e = E(text)
    results = Declarative(CORPUS_DECLS, INT).strict(e, dict(perms), {}, access)
    assert results, text
    return Case(heap, e, tuple(perms), access, results)


class TestEnumeration:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            EnumerationSpec(max_size=-1)
        with pytest.raises(ValueError):
            EnumerationSpec(int_literals=())

    def test_size_one_leaves(self):
        cases = list(enumerate_configurations(EnumerationSpec(max_size=1)))
        for lit in (IntLit(0), IntLit(1), E("()")):
            for m in Mode:
                found = [c for c in cases if c.expr == lit and c.access is m and c.perms == ()]
                assert found, (lit, m)
                ty = UNIT if lit == E("()") else INT
                assert found[0].results == {(mu, ty) for mu in MODE_USAGES}

    def test_size_four_has_dead_end_pdata(self):
        target = E("(pdata (permission 0 1))")
        cases = [c for c in enumerate_configurations(EnumerationSpec(max_size=4)) if c.expr == target]
        assert any(c.access is Mode.SPEC and (ModeUsage.SPEC, INT) in c.results for c in cases)

    def test_every_case_is_well_typed(self):
        checker = Declarative(CORPUS_DECLS, INT)
        for c in enumerate_configurations(EnumerationSpec(max_size=3)):
            assert c.results == checker.strict(c.expr, c.perm_env, {}, c.access)
            assert c.evidence() in c.results
            assert size(c.expr) <= 3

    def test_stable_order(self):
        spec = EnumerationSpec(max_size=4)
        a = [(print_expr(c.expr), c.perms, c.access) for c in enumerate_configurations(spec)]
        b = [(print_expr(c.expr), c.perms, c.access) for c in enumerate_configurations(spec)]
        assert a == b and len(a) > 1000

    def test_max_count(self):
        assert len(list(enumerate_configurations(EnumerationSpec(max_size=5, max_count=10)))) == 10

    def test_permission_free(self):
        spec = EnumerationSpec(max_size=4, permission_free=True)
        assert spec.perm_envs() == [{}]
        assert not any("permission" in print_expr(e) for e in Enumerator(spec).closed_terms())


class TestProperties:
    def test_preservation_pwrite(self):
        c = case("(pwrite 0 9 (permission 0 5))", perms=((0, Usage.LINEAR),))
        assert c.results == {(ModeUsage.PROOF_LINEAR, TPerm(0, INT))}
        assert property_preservation(c, CORPUS_DECLS).ok

    def test_preservation_value_and_add(self):
        assert property_preservation(case("3"), CORPUS_DECLS).ok
        assert property_preservation(case("(+ 1 2)"), CORPUS_DECLS).ok

    def test_preservation_default_gap(self):
        rep = property_preservation(case("(default (Fn exec Many static exec-linear int exec-linear int))"),
                                    CORPUS_DECLS)
        assert not rep.ok and rep.counterexample.property == "preservation"

    def test_progress(self):
        assert property_progress(case("(+ 1 2)"), CORPUS_DECLS).ok
        assert property_progress(case("1"), CORPUS_DECLS).ok

    def test_crash_never_bottom_not_enumerated(self):
        checker = Declarative(CORPUS_DECLS, INT)
        assert checker.strict(E("(crash_never bot)"), {}, {}, Mode.EXEC) == frozenset()
        assert checker.strict(E("bot"), {}, {}, Mode.EXEC) == {(ModeUsage.SPEC, E("(default Never)").ty)}

    def test_termination(self):
        assert property_termination(case("(+ 1 2)", access=Mode.SPEC), CORPUS_DECLS).ok
        rep = property_termination(case("(+ 1 2)", access=Mode.SPEC), CORPUS_DECLS, budget=0)
        assert not rep.ok and "0 steps" in rep.counterexample.detail
        with pytest.raises(ValueError):
            property_termination(case("(+ 1 2)"), CORPUS_DECLS)

    def test_divergence_fixture_is_exec_and_well_typed(self):
        v = check_configuration(CORPUS_DECLS, SELF_APPLY_FN_TYPE, {}, {}, Mode.EXEC, SELF_APPLY_HEAP, SELF_APPLY_EXPR)
        assert v.ok
        assert isinstance(run(Configuration(SELF_APPLY_HEAP, SELF_APPLY_EXPR), budget=1000), BudgetExhausted)
        for m in (Mode.PROOF, Mode.SPEC):
            assert not check_configuration(CORPUS_DECLS, SELF_APPLY_FN_TYPE, {}, {}, m, SELF_APPLY_HEAP,
                                           SELF_APPLY_EXPR).ok


class TestAgreement:
    def test_missing_borrow_is_known_incompleteness(self):
        e = E("(let proof p (permission 0 5) (seq (drop (copy (pread 0 p))) p))")
        entry = property_checker_agreement(e, {0: Usage.LINEAR}, {}, Mode.EXEC, CORPUS_DECLS)
        assert entry is not None and entry.kind == "known-incompleteness"

    def test_agreement_on_plain_terms(self):
        assert property_checker_agreement(E("(+ 1 2)"), {}, {}, Mode.EXEC, CORPUS_DECLS) is None
        assert property_checker_agreement(E("(hread)"), {}, {}, Mode.SPEC, CORPUS_DECLS) is None

    def test_empty_corpus(self):
        rep = agreement_sweep(EnumerationSpec(max_size=0))
        assert rep.examined == 0 and rep.ok()

    def test_small_sweep(self):
        rep = agreement_sweep(EnumerationSpec(max_size=4))
        assert rep.examined > 5000 and rep.ok() and not rep.entries


class TestSweep:
    def test_size_zero(self):
        rep = sweep(EnumerationSpec(max_size=0))
        assert rep.ok and rep.cases == 0

    def test_size_three_clean(self):
        rep = sweep(EnumerationSpec(max_size=3))
        assert rep.ok and rep.cases == 1117
        assert rep.termination.examined == rep.ghost_purity.examined < rep.cases

    def test_size_five(self):
        rep = sweep(EnumerationSpec(max_size=5))
        assert rep.progress.ok and rep.termination.ok and rep.ghost_purity.ok
        assert not rep.preservation.ok
        data = json.loads(json.dumps(rep.to_json()))
        assert [p["name"] for p in data["properties"]] == ["preservation", "progress", "termination", "ghost-purity"]
