"""Executable metatheory: preservation, progress, termination and checker
agreement over enumerated configurations."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

from ..calculus.ops import free_vars, is_value, perm_indices, size
from ..calculus.sexpr import print_expr, print_type
from ..calculus.syntax import (
    DeclTable,
    Expr,
    Let,
    Mode,
    Seq,
    Borrow,
    TFn,
    Type,
    Var,
    App,
    HRead,
    IntLit,
    Lambda,
    Callability,
    Lifetime,
    ModeUsage,
    INT,
)
from ..eval import (
    DEFAULT_BUDGET,
    BudgetExhausted,
    Configuration,
    Finished,
    Stepped,
    Stuck,
    run,
    step,
    trace_lines,
)
from ..typecheck.algorithmic import Algorithmic
from ..typecheck.configuration import check_configuration
from ..typecheck.declarative import Declarative
from .enumerate import Case, EnumerationSpec, Enumerator


@dataclass
class Counterexample:
    property: str
    heap: str
    expr: str
    perms: dict
    access: str
    detail: str
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "property": self.property,
            "heap": self.heap,
            "expr": self.expr,
            "perms": self.perms,
            "access": self.access,
            "detail": self.detail,
            "trace": self.trace,
        }


@dataclass
class PropertyReport:
    name: str
    examined: int = 0
    passed: int = 0
    counterexample: Optional[Counterexample] = None
    failures: int = 0
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.passed == self.examined

    def record(self, cx: Optional[Counterexample]) -> None:
        self.examined += 1
        if cx is None:
            self.passed += 1
        else:
            self.failures += 1
            if self.counterexample is None:
                self.counterexample = cx

    def merge(self, other: "PropertyReport") -> None:
        self.examined += other.examined
        self.passed += other.passed
        self.failures += other.failures
        if self.counterexample is None:
            self.counterexample = other.counterexample

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "examined": self.examined,
            "passed": self.passed,
            "failures": self.failures,
            "counterexample": self.counterexample.to_json() if self.counterexample else None,
            "notes": self.notes,
        }


def _cx(prop: str, case: Case, detail: str, trace: Optional[list] = None) -> Counterexample:
    return Counterexample(
        prop, print_expr(case.heap), print_expr(case.expr),
        {str(i): str(u) for i, u in case.perms}, str(case.access), detail, trace or [])


def _short_trace(case: Case, decls: DeclTable, budget: int = 50) -> list:
    _, lines = trace_lines(Configuration(case.heap, case.expr, decls), budget)
    return lines


class Properties:
    """Property checks sharing one declarative oracle (and its memo)."""

    def __init__(self, decls: DeclTable, heap_type: Type, checker: Optional[Declarative] = None):
        self.decls = decls
        self.heap_type = heap_type
        self.checker = checker or Declarative(decls, heap_type)

    def _retype(self, case: Case, heap: Expr, e: Expr) -> frozenset:
        if size(e) <= self.checker.max_size and size(heap) <= self.checker.max_size:
            if heap != case.heap:
                v = check_configuration(self.decls, self.heap_type, case.perm_env, {}, case.access,
                                        heap, e, checker=self.checker)
                return v.results if v.ok else frozenset()
            return self.checker.strict(e, case.perm_env, {}, case.access)
        out = set()
        for mu, t in case.results:
            v = check_configuration(self.decls, self.heap_type, case.perm_env, {}, case.access,
                                    heap, e, expected=(mu, t), checker=self.checker,
                                    use_declarative=False)
            if v.ok:
                out.add((mu, t))
        return frozenset(out)

    def preservation(self, case: Case) -> Optional[Counterexample]:
        r = step(Configuration(case.heap, case.expr, self.decls))
        if not isinstance(r, Stepped):
            return None
        after = self._retype(case, r.config.heap, r.config.expr)
        lost = sorted(case.results - after, key=lambda x: (x[0].value, repr(x[1])))
        if not lost:
            return None
        mu, t = lost[0]
        return _cx("preservation", case,
                   f"{mu} {print_type(t)} lost after {r.rule}: {print_expr(r.config.expr)}",
                   [f"0 {r.rule} {print_expr(r.redex)}"])

    def progress(self, case: Case) -> Optional[Counterexample]:
        r = step(Configuration(case.heap, case.expr, self.decls))
        if isinstance(r, Stuck):
            return _cx("progress", case, f"stuck ({r.reason.value}) at {print_expr(r.redex)}")
        return None

    def termination(self, case: Case, budget: int = DEFAULT_BUDGET) -> Optional[Counterexample]:
        out = run(Configuration(case.heap, case.expr, self.decls), budget)
        if isinstance(out, Finished):
            return None
        if isinstance(out, BudgetExhausted):
            return _cx("termination", case, f"no value within {budget} steps",
                       _short_trace(case, self.decls))
        return _cx("termination", case, f"crashed: {out.reason.value}", _short_trace(case, self.decls))

    def ghost_purity(self, case: Case, budget: int = DEFAULT_BUDGET) -> Optional[Counterexample]:
        out = run(Configuration(case.heap, case.expr, self.decls), budget)
        if isinstance(out, Finished) and out.heap != case.heap:
            return _cx("ghost-purity", case, f"heap changed to {print_expr(out.heap)}")
        return None


# -- module-level entry points -------------------------------------------------


def property_preservation(case: Case, decls: DeclTable, heap_type: Type = INT) -> PropertyReport:
    rep = PropertyReport("preservation")
    rep.record(Properties(decls, heap_type).preservation(case))
    return rep


def property_progress(case: Case, decls: DeclTable, heap_type: Type = INT) -> PropertyReport:
    rep = PropertyReport("progress")
    rep.record(Properties(decls, heap_type).progress(case))
    return rep


def property_termination(case: Case, decls: DeclTable, budget: int = DEFAULT_BUDGET,
                         heap_type: Type = INT) -> PropertyReport:
    if case.access is Mode.EXEC:
        raise ValueError("termination is only claimed at spec and proof access")
    rep = PropertyReport("termination")
    rep.record(Properties(decls, heap_type).termination(case, budget))
    return rep


# -- checker agreement --------------------------------------------------------------


@dataclass
class AgreementEntry:
    expr: str
    access: str
    kind: str  # "known-incompleteness", "unsound" or "missing-diagnostic" or "unexplained"
    detail: str

    def to_json(self) -> dict:
        return {"expr": self.expr, "access": self.access, "kind": self.kind, "detail": self.detail}


def _borrow_sites(e: Expr, bound: tuple = ()):
    """Yield (path, candidate names) for each seq/let in ``e``."""
    from dataclasses import fields as dc_fields

    def walk(x, path, scope):
        if isinstance(x, (Seq, Let)):
            names = sorted(free_vars(x.first if isinstance(x, Seq) else x.bound) & set(scope))
            yield path, names
        for f in dc_fields(x):
            if not f.compare:
                continue
            v = getattr(x, f.name)
            inner = scope
            if isinstance(x, Let) and f.name == "body":
                inner = scope + (x.name,)
            elif isinstance(x, Lambda) and f.name == "body":
                inner = scope + (x.param,)
            elif hasattr(x, "name") and f.name in ("then",) and isinstance(getattr(x, "name"), str):
                inner = scope + (x.name,)
            elif f.name == "body" and hasattr(x, "binders"):
                inner = scope + tuple(x.binders)
            if isinstance(v, Expr):
                yield from walk(v, path + ((f.name, None),), inner)
            elif isinstance(v, tuple):
                for k, c in enumerate(v):
                    if isinstance(c, Expr):
                        yield from walk(c, path + ((f.name, k),), inner)

    yield from walk(e, (), bound)


def _annotate(e: Expr, path: tuple, names: tuple) -> Expr:
    from dataclasses import replace

    if not path:
        return replace(e, borrow=Borrow(tuple(names), ()))
    (name, k), rest = path[0], path[1:]
    child = getattr(e, name)
    if k is None:
        return replace(e, **{name: _annotate(child, rest, names)})
    items = list(child)
    items[k] = _annotate(items[k], rest, names)
    return replace(e, **{name: tuple(items)})


def explained_by_borrowing(alg: Algorithmic, e: Expr, p: dict, g: dict, m: Mode,
                           declared: frozenset, limit: int = 4096) -> bool:
    """Whether some choice of borrow annotations makes the algorithmic checker
    accept ``e`` with a result the declarative checker derives."""
    sites = list(_borrow_sites(e, tuple(g)))
    options = []
    for path, names in sites:
        subsets = [()]
        for r in range(1, len(names) + 1):
            subsets.extend(combinations(names, r))
        options.append((path, subsets))
    tried = 0

    def search(k, cur):
        nonlocal tried
        if tried >= limit:
            return False
        if k == len(options):
            tried += 1
            v = alg.check(cur, p, g, m)
            return v.ok and (v.mu, v.ty) in declared
        path, subsets = options[k]
        for sub in subsets:
            nxt = _annotate(cur, path, sub) if sub else cur
            if search(k + 1, nxt):
                return True
        return False

    return search(0, e) if options else False


def property_checker_agreement(e: Expr, p: dict, g: dict, m: Mode, decls: DeclTable, heap_type: Type = INT,
                               checker: Optional[Declarative] = None,
                               alg: Optional[Algorithmic] = None) -> Optional[AgreementEntry]:
    """None when the checkers agree; otherwise an entry describing how."""
    checker = checker or Declarative(decls, heap_type)
    alg = alg or Algorithmic(decls, heap_type)
    declared = checker.strict(e, p, g, m)
    v = alg.check(e, p, g, m)
    if v.ok:
        if (v.mu, v.ty) in declared:
            return None
        return AgreementEntry(print_expr(e), str(m), "unsound",
                              f"algorithmic {v.mu} {print_type(v.ty)} not derivable declaratively")
    if v.diagnostic is None:
        return AgreementEntry(print_expr(e), str(m), "missing-diagnostic", "rejected without a diagnostic")
    if not declared:
        return None
    if explained_by_borrowing(alg, e, p, g, m, declared):
        return AgreementEntry(print_expr(e), str(m), "known-incompleteness",
                              f"accepted once borrow annotations are supplied ({v.diagnostic.rule})")
    return AgreementEntry(print_expr(e), str(m), "unexplained",
                          f"declarative derives {len(declared)} result(s); algorithmic: "
                          f"[{v.diagnostic.rule}] {v.diagnostic.message}")


@dataclass
class AgreementReport:
    examined: int = 0
    agreed: int = 0
    entries: list = field(default_factory=list)

    @property
    def known_incompleteness(self) -> list:
        return [x for x in self.entries if x.kind == "known-incompleteness"]

    @property
    def violations(self) -> list:
        return [x for x in self.entries if x.kind != "known-incompleteness"]

    def incompleteness_rate(self) -> float:
        return len(self.known_incompleteness) / self.examined if self.examined else 0.0

    def ok(self, threshold: float = 0.01) -> bool:
        return not self.violations and self.incompleteness_rate() <= threshold

    def to_json(self) -> dict:
        return {
            "examined": self.examined,
            "agreed": self.agreed,
            "known_incompleteness": len(self.known_incompleteness),
            "incompleteness_rate": self.incompleteness_rate(),
            "violations": [x.to_json() for x in self.violations],
            "entries": [x.to_json() for x in self.entries[:200]],
        }


def agreement_sweep(spec: EnumerationSpec) -> AgreementReport:
    """Run both checkers on every enumerated candidate term (typed or not)
    at every access level, under empty environments."""
    en = Enumerator(spec)
    alg = Algorithmic(spec.decls, spec.heap_type)
    rep = AgreementReport()
    for e in en.closed_terms():
        for p in spec.perm_envs():
            for m in spec.access_levels:
                rep.examined += 1
                entry = property_checker_agreement(e, p, {}, m, spec.decls, spec.heap_type, en.checker, alg)
                if entry is None:
                    rep.agreed += 1
                else:
                    rep.entries.append(entry)
    return rep


# -- the full sweep ---------------------------------------------------------------


@dataclass
class SweepReport:
    spec: EnumerationSpec
    cases: int = 0
    terms: int = 0
    seconds: float = 0.0
    preservation: PropertyReport = field(default_factory=lambda: PropertyReport("preservation"))
    progress: PropertyReport = field(default_factory=lambda: PropertyReport("progress"))
    termination: PropertyReport = field(default_factory=lambda: PropertyReport("termination"))
    ghost_purity: PropertyReport = field(default_factory=lambda: PropertyReport("ghost-purity"))

    @property
    def reports(self) -> list:
        return [self.preservation, self.progress, self.termination, self.ghost_purity]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)

    def to_json(self) -> dict:
        return {
            "max_size": self.spec.max_size,
            "cases": self.cases,
            "terms": self.terms,
            "seconds": round(self.seconds, 2),
            "properties": [r.to_json() for r in self.reports],
        }

    def summary_lines(self) -> list:
        lines = [f"size<={self.spec.max_size}: {self.cases} well-typed configurations "
                 f"over {self.terms} terms in {self.seconds:.1f}s"]
        for r in self.reports:
            status = "ok" if r.ok else f"{r.failures} counterexample(s)"
            lines.append(f"  {r.name}: {r.passed}/{r.examined} {status}")
            if r.counterexample is not None:
                cx = r.counterexample
                lines.append(f"    first: {cx.expr} at {cx.access} perms={cx.perms}: {cx.detail}")
        return lines


def sweep(spec: EnumerationSpec, budget: int = DEFAULT_BUDGET,
          on_case: Optional[Callable[[Case], None]] = None) -> SweepReport:
    started = time.perf_counter()
    en = Enumerator(spec)
    props = Properties(spec.decls, spec.heap_type, en.checker)
    rep = SweepReport(spec)
    last = None
    verdicts: dict = {}
    for case in en.cases():
        rep.cases += 1
        if case.expr is not last:
            rep.terms += 1
            last = case.expr
            verdicts = {}
        if on_case is not None:
            on_case(case)
        ghost = case.access is not Mode.EXEC
        if is_value(case.expr):
            # vacuous for all four properties
            found = (None, None, None, None)
        else:
            # permissions the term never mentions cannot affect any verdict
            idx = perm_indices(case.expr)
            key = (tuple((i, u) for i, u in case.perms if i in idx), case.access)
            found = verdicts.get(key)
            if found is None:
                found = verdicts[key] = (
                    props.preservation(case),
                    props.progress(case),
                    props.termination(case, budget) if ghost else None,
                    props.ghost_purity(case, budget) if ghost else None,
                )
        rep.preservation.record(found[0])
        rep.progress.record(found[1])
        if ghost:
            rep.termination.record(found[2])
            rep.ghost_purity.record(found[3])
    rep.seconds = time.perf_counter() - started
    return rep


def write_json(obj, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- the divergence fixture -----------------------------------------------------------

# An exec function stored in the heap that reads itself back and calls itself.
SELF_APPLY_FN_TYPE = TFn(Mode.EXEC, Callability.MANY, Lifetime.STATIC,
                         ModeUsage.EXEC_LINEAR, INT, ModeUsage.EXEC_LINEAR, INT)
SELF_APPLY_HEAP = Lambda(Mode.EXEC, Callability.MANY, Lifetime.STATIC, "x", ModeUsage.EXEC_LINEAR, INT,
                         App(HRead(), Var("x")))
SELF_APPLY_EXPR = App(HRead(), IntLit(0))
