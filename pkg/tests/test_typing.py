
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from mvr.calculus.ops import size, children
from mvr.calculus.sexpr import parse_expr as E
from mvr.calculus.sexpr import parse_type as T
from mvr.calculus.syntax import (
    INT,
    MODE_USAGES,
    NEVER,
    UNIT,
    Bottom,
    Callability,
    DatatypeDecl,
    DeclTable,
    HData,
    HRead,
    HWrite,
    IntLit,
    Lifetime,
    Mode,
    ModeUsage,
    NoneLit,
    PRead,
    PWrite,
    TFn,
    TOption,
    TPerm,
    TStruct,
    Usage,
)
from mvr.metatheory.enumerate import CORPUS_DECLS, EnumerationSpec, Enumerator
from mvr.metatheory.properties import property_checker_agreement
from mvr.typecheck.algorithmic import typecheck_algorithmic
from mvr.typecheck.configuration import check_configuration
from mvr.typecheck.declarative import Declarative, OversizeTerm, typecheck_declarative
from mvr.typecheck.diagnostics import CheckFailure
from mvr.typecheck.env import (
    env_merge,
    env_project,
    env_split_enumerate,
    perm_merge,
    perm_split_enumerate,
)
from mvr.typecheck.types import (
    default_value,
    function_body_context,
    is_copyable,
    wf_closed,
    wf_decl_table,
    wf_type,
)

from strategies import exprs

EMPTY = DeclTable()
EL, ES, PL, PS, SP = (ModeUsage.EXEC_LINEAR, ModeUsage.EXEC_SHARED, ModeUsage.PROOF_LINEAR,
                      ModeUsage.PROOF_SHARED, ModeUsage.SPEC)


def declared(e, p=None, g=None, m=Mode.EXEC, decls=EMPTY, heap=INT):
    return typecheck_declarative(decls, heap, p or {}, g or {}, m, True, e if not isinstance(e, str) else E(e))


def algorithmic(e, p=None, g=None, m=Mode.EXEC, decls=EMPTY, heap=INT):
    return typecheck_algorithmic(decls, heap, p or {}, g or {}, m, e if not isinstance(e, str) else E(e))


class TestEnvironments:
    def test_projections(self):
        g = {"x1": (ES, INT), "x2": (EL, INT)}
        assert env_project(g, "linear") == {"x2": (EL, INT)}
        assert env_project(g, "nonlinear") == {"x1": (ES, INT)}
        assert env_project({0: Usage.LINEAR}, "nonlinear") == {}
        assert env_project({"x": (PL, INT)}, "as_spec") == {"x": (SP, INT)}
        assert env_project(g, "as_shared") == {"x1": (ES, INT), "x2": (ES, INT)}
        assert env_project({0: Usage.SHARED}, "as_linear") == {0: Usage.LINEAR}
        with pytest.raises(ValueError):
            env_project({0: Usage.LINEAR}, "as_spec")

    def test_split_examples(self):
        g = {"x1": (ES, INT), "x2": (EL, INT)}
        splits = env_split_enumerate(g)
        assert ({"x1": (ES, INT), "x2": (EL, INT)}, {"x1": (ES, INT), "x2": (SP, INT)}) in splits
        assert env_split_enumerate({}) == [({}, {})]

    @given(st.dictionaries(st.sampled_from("abcdef"), st.sampled_from(MODE_USAGES), max_size=6))
    def test_split_count_and_soundness(self, mus):
        g = {x: (mu, INT) for x, mu in mus.items()}
        k = sum(mu.is_linear for mu in mus.values())
        splits = env_split_enumerate(g)
        assert len(splits) == 2 ** k
        assert len({repr(s) for s in splits}) == 2 ** k
        for g1, g2 in splits:
            assert env_merge(g1, g2) == g

    @given(st.dictionaries(st.integers(-2, 4), st.sampled_from(list(Usage)), max_size=5))
    def test_perm_split_soundness(self, p):
        k = sum(u is Usage.LINEAR for u in p.values())
        splits = perm_split_enumerate(p)
        assert len(splits) == 2 ** k
        for p1, p2 in splits:
            assert perm_merge(p1, p2) == p
            # shared entries are duplicated, linear ones go to exactly one side
            for i, u in p.items():
                assert (i in p1) + (i in p2) == (1 if u is Usage.LINEAR else 2)

    def test_merge_rejects_double_linear(self):
        assert env_merge({"x": (EL, INT)}, {"x": (EL, INT)}) is None


class TestCopyAndDefaults:
    def once_fn(self):
        return T("(Fn exec Once static exec-linear int exec-linear int)")

    def test_copy_examples(self):
        assert is_copyable(EMPTY, Mode.SPEC, T("(perm 0 int)"))
        assert is_copyable(EMPTY, Mode.EXEC, INT)
        assert not is_copyable(EMPTY, Mode.EXEC, self.once_fn())
        assert is_copyable(EMPTY, Mode.EXEC, T("(Fn exec Many static exec-linear int exec-linear int)"))
        assert not is_copyable(EMPTY, Mode.PROOF, T("(perm 0 int)"))
        assert is_copyable(EMPTY, Mode.EXEC, TOption(INT))

    def test_copy_struct_by_fields(self):
        d = DeclTable((DatatypeDecl("P", ((Mode.PROOF, T("(perm 0 int)")),)),
                       DatatypeDecl("Q", ((Mode.SPEC, T("(perm 0 int)")),))))
        assert not is_copyable(d, Mode.EXEC, TStruct("P"))
        assert is_copyable(d, Mode.EXEC, TStruct("Q"))

    def test_self_reaching_datatype_not_copyable(self):
        d = DeclTable((DatatypeDecl("List", ((Mode.EXEC, INT), (Mode.EXEC, T("(Option List)")))),))
        assert not is_copyable(d, Mode.EXEC, TStruct("List"))

    def test_default_examples(self):
        assert default_value(EMPTY, INT) == IntLit(0)
        assert default_value(EMPTY, NEVER) == Bottom()
        assert default_value(EMPTY, TOption(NEVER)) == NoneLit(NEVER)
        assert default_value(CORPUS_DECLS, TStruct("S")) == E("(struct S 0 0)")
        assert default_value(EMPTY, T("(perm 2 Unit)")) == E("(permission 2 ())")

    def corpus_types(self):
        en = Enumerator(EnumerationSpec(max_size=4))
        return [t for n in range(1, 5) for t in en.types(n)]

    def test_spec_copy_totality_over_corpus(self):
        for t in self.corpus_types():
            assert is_copyable(CORPUS_DECLS, Mode.SPEC, t)

    def test_default_types_at_spec(self):
        """Defaults type at (spec, t), except where the default contains an
        exec/proof function literal whose annotated result is not spec: its
        body default(res) types only at spec, so no function rule gives the
        literal that type. This is the same gap as the "default" preservation
        family (see test_preservation_gap.py)."""
        checker = Declarative(CORPUS_DECLS, INT)
        typed = gap = 0
        for t in self.corpus_types():
            v = default_value(CORPUS_DECLS, t)
            ok = (SP, t) in checker.strict(v, {}, {}, Mode.SPEC)
            assert ok == (not _nonspec_fn_default(t)), t
            typed += ok
            gap += not ok
        assert typed and gap


def _nonspec_fn_default(t) -> bool:
    if isinstance(t, TFn):
        return t.mode is not Mode.SPEC and t.res_mu is not ModeUsage.SPEC
    if isinstance(t, TPerm):
        return _nonspec_fn_default(t.inner)
    return False


class TestWellFormedness:
    def test_option_shifts_positive_names(self):
        assert wf_type(frozenset(), frozenset(), frozenset({"List"}), T("(Option List)"))
        assert not wf_type(frozenset(), frozenset(), frozenset({"List"}), TStruct("List"))

    def test_strict_positivity(self):
        bad = T("(Fn spec Many static spec Bad spec Unit)")
        ok = T("(Fn exec Many static exec-linear Ok exec-linear Unit)")
        assert not wf_type(frozenset(), frozenset(), frozenset({"Bad"}), bad)
        assert wf_type(frozenset(), frozenset({"Ok"}), frozenset(), ok)
        assert wf_decl_table(DeclTable((DatatypeDecl("Ok", ((Mode.EXEC, T("(Option Ok)")),)),))) == []

    def test_decl_tables(self):
        assert wf_decl_table(EMPTY) == []
        assert wf_decl_table(DeclTable((DatatypeDecl("Pair", ((Mode.EXEC, INT), (Mode.EXEC, INT))),))) == []
        diags = wf_decl_table(DeclTable((DatatypeDecl("Bad", (
            (Mode.SPEC, T("(Fn spec Many static spec Bad spec Unit)")),)),)))
        assert len(diags) == 1 and diags[0].rule == "Fig11.wf-decl"

    def test_restricted_field_needs_spec_mode(self):
        f = T("(Fn exec Once restricted exec-linear int exec-linear int)")
        assert wf_decl_table(DeclTable((DatatypeDecl("R", ((Mode.EXEC, f),)),)))
        assert wf_decl_table(DeclTable((DatatypeDecl("R", ((Mode.SPEC, f),)),))) == []

    def test_unknown_name(self):
        assert not wf_closed(EMPTY, TStruct("Nope"))


class TestFunctionBodyContext:
    def test_once_restricted_keeps_everything(self):
        p, g = {0: Usage.LINEAR}, {"x": (EL, INT)}
        assert function_body_context(Callability.ONCE, Lifetime.RESTRICTED, p, g) == (p, g, frozenset({Usage.LINEAR}))

    def test_many_static_spec_copies(self):
        pb, gb, usages = function_body_context(Callability.MANY, Lifetime.STATIC, {0: Usage.SHARED}, {"x": (ES, INT)})
        assert pb == {} and gb == {"x": (SP, INT)} and usages == frozenset(Usage)

    def test_many_rejects_linear_capture(self):
        with pytest.raises(CheckFailure) as info:
            function_body_context(Callability.MANY, Lifetime.RESTRICTED, {}, {"x": (EL, INT)})
        assert "x" in info.value.diag.message

    def test_once_static(self):
        g = {"x": (EL, INT), "y": (ES, INT)}
        pb, gb, usages = function_body_context(Callability.ONCE, Lifetime.STATIC, {0: Usage.LINEAR, 1: Usage.SHARED}, g)
        assert pb == {0: Usage.LINEAR}
        assert gb == {"x": (EL, INT), "y": (SP, INT)} and usages == frozenset({Usage.LINEAR})
        restricted = T("(Fn exec Once restricted exec-linear int exec-linear int)")
        with pytest.raises(CheckFailure):
            function_body_context(Callability.ONCE, Lifetime.STATIC, {}, {"f": (EL, restricted)})


class TestDeclarative:
    def test_pread_on_shared_permission(self):
        assert (ES, INT) in declared("(pread 0 (permission 0 5))", p={0: Usage.SHARED})

    def test_pwrite_needs_exec(self):
        assert declared("(pwrite 0 9 (permission 0 5))", p={0: Usage.LINEAR}, m=Mode.PROOF) == frozenset()
        assert declared("(pwrite 0 9 (permission 0 5))", p={0: Usage.LINEAR}) == {(PL, T("(perm 0 int)"))}

    def test_spec_snapshot_of_shared_variable(self):
        assert declared("x", g={"x": (ES, INT)}) == {(ES, INT), (SP, INT)}

    def test_dead_end_permission_admits_only_pdata(self):
        assert declared("(pdata (permission 0 1))") == {(SP, INT)}
        assert declared("(pread 0 (permission 0 1))") == frozenset()
        assert declared("(pwrite 0 2 (permission 0 1))") == frozenset()

    def test_drop_is_unit(self):
        assert declared("(drop x)", g={"x": (EL, INT)}) == {(ES, UNIT)}

    def test_unconsumed_linear_variable(self):
        assert declared("1", g={"x": (EL, INT)}) == frozenset()

    def test_size_gate(self):
        e = E("(+ 1 " * 13 + "1" + ")" * 13)
        with pytest.raises(OversizeTerm):
            Declarative(EMPTY, INT).derive(e, {}, {}, Mode.EXEC)

    def test_let_snapshot_then_consume(self):
        assert (ES, UNIT) in declared("(let spec s x (drop x))", g={"x": (EL, INT)})


class TestAlgorithmic:
    def test_snapshot_then_consume(self):
        v = algorithmic("(let spec s x (drop x))", g={"x": (EL, INT)})
        assert v.ok and v.result == (ES, UNIT) and v.consumed == frozenset({"x"})

    def test_double_linear_permission(self):
        two = DeclTable((DatatypeDecl("Two", ((Mode.PROOF, T("(perm 0 int)")), (Mode.PROOF, T("(perm 0 int)")))),))
        e = E("(let proof p (permission 0 5) (struct Two (pwrite 0 1 p) (pwrite 0 2 p)))")
        v = algorithmic(e, p={0: Usage.LINEAR}, decls=two)
        assert not v.ok and v.diagnostic.rule == "Fig9.split"
        assert v.diagnostic.span is not None
        assert declared(e, p={0: Usage.LINEAR}, decls=two) == frozenset()

    def test_drop_copyable(self):
        v = algorithmic("(drop x)", g={"x": (EL, INT)})
        assert v.result == (ES, UNIT)

    def test_prefers_direct_use(self):
        v = algorithmic("x", g={"x": (EL, INT)})
        assert v.result == (EL, INT)

    def test_unconsumed(self):
        v = algorithmic("1", g={"x": (EL, INT)})
        assert not v.ok and v.diagnostic.rule == "Fig9.unconsumed"

    def test_borrow_annotation(self):
        e = "(let proof p (permission 0 5) (seq (drop (copy (pread 0 p))) p (borrow p)))"
        assert algorithmic(e, p={0: Usage.LINEAR}).result == (PL, T("(perm 0 int)"))
        no_borrow = "(let proof p (permission 0 5) (seq (drop (copy (pread 0 p))) p))"
        assert not algorithmic(no_borrow, p={0: Usage.LINEAR}).ok

    def test_pwrite_at_proof_names_rule(self):
        v = algorithmic("(pwrite 0 9 (permission 0 5))", p={0: Usage.LINEAR}, m=Mode.PROOF)
        assert v.diagnostic.rule == "Fig10.pwrite"

    def test_lax_dead_end_body(self):
        # a spec variable used as an exec value in a dead-end body
        e = "(let spec y 1 (lambda exec Many static x exec-linear int (drop y)))"
        assert algorithmic(e).ok
        assert declared(e)


class TestConfiguration:
    def test_hread(self):
        v = check_configuration(EMPTY, INT, {}, {}, Mode.EXEC, IntLit(0), HRead(), expected=(EL, INT))
        assert v.ok

    def test_restricted_heap_rejected(self):
        h = T("(Fn exec Once restricted exec-linear int exec-linear int)")
        v = check_configuration(EMPTY, h, {}, {}, Mode.EXEC, IntLit(0), IntLit(1))
        assert not v.ok and v.side == "heap"

    @pytest.mark.parametrize("m", list(Mode))
    def test_literal_sum_every_mode(self, m):
        v = check_configuration(EMPTY, UNIT, {}, {}, m, E("()"), E("(+ 1 1)"))
        assert v.ok and v.results == {(mu, INT) for mu in MODE_USAGES}

    def test_bad_heap_value(self):
        v = check_configuration(EMPTY, INT, {}, {}, Mode.EXEC, E("()"), IntLit(1))
        assert not v.ok and v.side == "heap"

    def test_expected_mismatch(self):
        v = check_configuration(EMPTY, INT, {}, {}, Mode.EXEC, IntLit(0), E("bot"), expected=(EL, NEVER))
        assert not v.ok and v.side == "expr"


EXEC_ONLY = (HData, HRead, HWrite, PRead, PWrite)


def _uses_exec_only(e) -> bool:
    return isinstance(e, EXEC_ONLY) or any(_uses_exec_only(c) for c in children(e))


class TestCorpusProperties:
    spec = EnumerationSpec(max_size=4)

    def terms(self):
        return list(Enumerator(self.spec).closed_terms())

    def test_access_level_monotonicity(self):
        # every premise on the access level has the form m <= something, so
        # lowering m keeps every derivation
        checker = Declarative(CORPUS_DECLS, INT)
        for e in self.terms():
            for p in self.spec.perm_envs():
                at = {m: checker.strict(e, p, {}, m) for m in Mode}
                assert at[Mode.SPEC] <= at[Mode.PROOF] <= at[Mode.EXEC], e

    def test_raising_access_level_is_not_monotone(self):
        # the converse fails even without exec-only operations
        e = E("(let exec x 0 x)")
        assert not _uses_exec_only(e)
        assert declared(e) and not declared(e, m=Mode.PROOF)

    def test_agreement_small_corpus(self):
        checker = Declarative(CORPUS_DECLS, INT)
        for e in self.terms():
            for p in self.spec.perm_envs():
                for m in Mode:
                    entry = property_checker_agreement(e, p, {}, m, CORPUS_DECLS, INT, checker)
                    assert entry is None or entry.kind == "known-incompleteness", entry

    @given(exprs)
    def test_agreement_on_random_terms(self, e):
        assume(size(e) <= 10)
        for m in Mode:
            entry = property_checker_agreement(e, {0: Usage.LINEAR}, {}, m, CORPUS_DECLS, INT)
            assert entry is None or entry.kind == "known-incompleteness", entry

    @given(exprs)
    def test_rejections_carry_one_rule(self, e):
        assume(size(e) <= 10)
        v = typecheck_algorithmic(CORPUS_DECLS, INT, {}, {}, Mode.EXEC, e)
        if not v.ok:
            assert v.diagnostic is not None and v.diagnostic.rule
