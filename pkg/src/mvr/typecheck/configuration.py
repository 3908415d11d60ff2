"""Checking a (heap value, expression) configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..calculus.ops import size
from ..calculus.sexpr import print_type
from ..calculus.syntax import DeclTable, Expr, Lifetime, Mode, ModeUsage, Type, lifetime_of
from .algorithmic import Algorithmic
from .declarative import Declarative
from .diagnostics import Diagnostic
from .env import spec_env
from .types import is_copyable, wf_decl_table


@dataclass
class ConfigVerdict:
    ok: bool
    side: Optional[str] = None  # "decls", "heap" or "expr" when rejected
    results: frozenset = frozenset()
    diagnostics: list = field(default_factory=list)


def check_configuration(decls: DeclTable, heap_type: Type, p: dict, g: dict, m: Mode,
                        heap_value: Expr, e: Expr, expected=None, checker: Optional[Declarative] = None,
                        use_declarative: Optional[bool] = None) -> ConfigVerdict:
    """Check the heap side and the expression side of a configuration.

    The expression is checked with the declarative oracle when it is small
    enough (or when forced), otherwise with the algorithmic checker. With
    ``expected`` the verdict succeeds only if that (mu, type) is derivable.
    """
    bad = wf_decl_table(decls)
    if bad:
        return ConfigVerdict(False, "decls", diagnostics=bad)
    dec = checker or Declarative(decls, heap_type)
    if lifetime_of(heap_type) is not Lifetime.STATIC:
        return ConfigVerdict(False, "heap", diagnostics=[Diagnostic(
            "Fig11.config", None, f"heap type {print_type(heap_type)} must have static lifetime")])
    if not is_copyable(decls, Mode.EXEC, heap_type):
        return ConfigVerdict(False, "heap", diagnostics=[Diagnostic(
            "Fig11.config", None, f"heap type {print_type(heap_type)} must be copyable at exec")])
    heap_g = spec_env(g)
    if size(heap_value) <= dec.max_size:
        heap_ok = (ModeUsage.EXEC_LINEAR, heap_type) in dec.strict(heap_value, {}, heap_g, Mode.EXEC)
    else:
        heap_ok = Algorithmic(decls, heap_type).check(
            heap_value, {}, heap_g, Mode.EXEC, (ModeUsage.EXEC_LINEAR, heap_type)).ok
    if not heap_ok:
        return ConfigVerdict(False, "heap", diagnostics=[Diagnostic(
            "Fig11.config", getattr(heap_value, "span", None),
            f"heap value does not type at exec-linear {print_type(heap_type)}")])

    if use_declarative is None:
        use_declarative = size(e) <= dec.max_size
    if use_declarative:
        results = dec.strict(e, p, g, m)
        ok = bool(results) if expected is None else tuple(expected) in results
        if ok:
            return ConfigVerdict(True, results=results)
        alg = Algorithmic(decls, heap_type).check(e, p, g, m, expected)
        diag = alg.diagnostic or Diagnostic("Fig11.config", getattr(e, "span", None),
                                            "no derivation for the expression")
        if expected is not None and results:
            diag = Diagnostic("expect", getattr(e, "span", None),
                              f"expected {expected[0]} {print_type(expected[1])} is not derivable")
        return ConfigVerdict(False, "expr", results=results, diagnostics=[diag])
    alg = Algorithmic(decls, heap_type).check(e, p, g, m, expected)
    if alg.ok:
        return ConfigVerdict(True, results=frozenset({(alg.mu, alg.ty)}))
    return ConfigVerdict(False, "expr", diagnostics=[alg.diagnostic])
