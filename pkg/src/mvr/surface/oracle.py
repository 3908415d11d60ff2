"""Bounded brute-force verification oracle.

``bounded_verify`` decides a VCQuery by enumeration. Free machine-integer
constants range over ``[0, 2**width)`` (clipped to their type), booleans over
both values, and spec functions are evaluated from their definitions with
memoization (fuel plays no role here). The search assigns constants one at a
time: a constant pinned by an equation with already-assigned constants takes
that single value, comparisons with assigned terms narrow its interval, and
every fact is checked as soon as its constants are assigned. Facts that share
no constants with the goal are only checked for satisfiability.

The verdict is exact for the enumerated window. A constant of sort int or
nat that is neither pinned nor bounded by the facts makes the verdict Unknown.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional

from . import ast as A
from . import terms as T
from .vcgen import Theory, VCQuery


class Undecided(Exception):
    """Evaluation left the oracle's semantics (depth cap, partial operation)."""


@dataclass
class Verdict:
    status: str  # "valid", "invalid" or "unknown"
    counterexample: Optional[dict] = None
    reason: str = ""
    examined: int = 0

    @property
    def valid(self) -> bool:
        return self.status == "valid"

    def to_json(self) -> dict:
        out = {"status": self.status, "examined": self.examined}
        if self.counterexample is not None:
            out["counterexample"] = {k: _jsonable(v) for k, v in self.counterexample.items()}
        if self.reason:
            out["reason"] = self.reason
        return out


def _jsonable(v):
    return v if isinstance(v, (bool, int)) else str(v)


def _ediv(a: int, b: int) -> int:
    if b == 0:
        raise Undecided("division by zero is uninterpreted")
    r = a % abs(b)
    return (a - r) // b


def _emod(a: int, b: int) -> int:
    if b == 0:
        raise Undecided("division by zero is uninterpreted")
    return a % abs(b)


def _range_ok(ty: str, v) -> bool:
    lo, hi = A.type_range(ty)
    if ty == "bool":
        return isinstance(v, bool)
    return (lo is None or v >= lo) and (hi is None or v <= hi)


class Evaluator:
    """Compiles terms to closures and evaluates spec functions semantically."""

    def __init__(self, theory: Theory, depth_cap: int = 400):
        self.theory = theory
        self.depth_cap = depth_cap
        self.depth = 0
        self.memo = {}
        self.warm = {}
        self.bodies = {}
        self.contracts = {}

    # -- spec functions ----------------------------------------------------------------

    def _body(self, name: str):
        fn = self.bodies.get(name)
        if fn is None:
            spec = self.theory.specs[name]
            fn = self.bodies[name] = (spec, self.compile(spec.body))
        return fn

    def call(self, name: str, args: tuple):
        key = (name, args)
        try:
            return self.memo[key]
        except KeyError:
            pass
        spec, body = self._body(name)
        for p, a in zip(spec.params, args):
            if not _range_ok(p.ty, a):
                raise Undecided(f"{name} applied outside its parameter range")
        if spec.recursive and len(args) == 1 and isinstance(args[0], int) and not isinstance(args[0], bool):
            self._warm_up(name, spec, args[0])
        if self.depth >= self.depth_cap:
            raise Undecided(f"recursion depth cap {self.depth_cap} reached in {name}")
        self.depth += 1
        try:
            value = body({p.name: a for p, a in zip(spec.params, args)})
        finally:
            self.depth -= 1
        self.memo[key] = value
        return value

    def _warm_up(self, name: str, spec, target: int):
        """Fill the memo bottom-up so single-argument recursion stays shallow."""
        lo = A.type_range(spec.params[0].ty)[0]
        start = self.warm.get(name, (lo if lo is not None else min(target, 0)) - 1) + 1
        if target - start < 32:
            return
        for j in range(start, target):
            try:
                self.call(name, (j,))
            except Undecided:
                break
            self.warm[name] = j

    def contract(self, symbol: str, args: tuple):
        entry = self.contracts.get(symbol)
        if entry is None:
            params, body = self.theory.contract_body(symbol)
            entry = self.contracts[symbol] = (params, self.compile(body))
        params, body = entry
        return body({p.name: a for p, a in zip(params, args)})

    # -- compilation ---------------------------------------------------------------------

    def compile(self, t: T.Term):
        if isinstance(t, T.Const):
            name = t.name
            return lambda env: env[name]
        if isinstance(t, T.Lit):
            v = t.value
            return lambda env: v
        op = t.op
        args = [self.compile(a) for a in t.args]
        if op == "and":
            return lambda env: all(a(env) for a in args)
        if op == "or":
            return lambda env: any(a(env) for a in args)
        if op == "not":
            (a,) = args
            return lambda env: not a(env)
        if op == "=>":
            a, b = args
            return lambda env: (not a(env)) or b(env)
        if op == "ite":
            c, a, b = args
            return lambda env: a(env) if c(env) else b(env)
        if op == "uInv":
            width = t.args[0].value
            bound = 1 << width
            x = args[1]
            return lambda env: 0 <= x(env) < bound
        if op in _BINARY:
            f = _BINARY[op]
            if len(args) == 2:
                a, b = args
                return lambda env: f(a(env), b(env))
            if op == "-" and len(args) == 1:
                (a,) = args
                return lambda env: -a(env)
            first, rest = args[0], args[1:]

            def fold(env):
                acc = first(env)
                for r in rest:
                    acc = f(acc, r(env))
                return acc

            return fold
        spec = self.theory.spec_by_symbol(op)
        if spec is not None:
            name = spec.name
            return lambda env: self.call(name, tuple(a(env) for a in args))
        if self.theory.contract_body(op) is not None:
            return lambda env: self.contract(op, tuple(a(env) for a in args))
        raise ValueError(f"no semantics for symbol {op!r}")

    def evaluate(self, t: T.Term, env: dict):
        return self.compile(t)(env)


_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "div": _ediv,
    "mod": _emod,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
}

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}


# -- fact preprocessing -----------------------------------------------------------------------


def _conjuncts(t: T.Term, theory: Theory, out: list):
    """Flatten ``t`` into conjuncts, unfolding contract applications."""
    if isinstance(t, T.App):
        if t.op == "and":
            for a in t.args:
                _conjuncts(a, theory, out)
            return
        cb = theory.contract_body(t.op)
        if cb is not None:
            params, body = cb
            _conjuncts(T.subst(body, {p.name: a for p, a in zip(params, t.args)}), theory, out)
            return
    if t != T.TRUE:
        out.append(t)


@dataclass
class _Fact:
    term: T.Term
    fn: object
    consts: frozenset


@dataclass
class _Slot:
    """Per-constant search information."""

    const: T.Const
    checks: list = field(default_factory=list)
    forcers: list = field(default_factory=list)  # (guard or None, value fn)
    bounds: list = field(default_factory=list)  # (op, value fn), read as const op value
    goal_here: bool = False


class BoundedOracle:
    def __init__(self, theory: Theory, width: int = 6, depth_cap: int = 400, max_steps: int = 5_000_000):
        self.theory = theory
        self.width = width
        self.max_steps = max_steps
        self.ev = Evaluator(theory, depth_cap)
        if sys.getrecursionlimit() < 20000:
            sys.setrecursionlimit(20000)

    # -- entry point ----------------------------------------------------------------------

    def verify(self, q: VCQuery) -> Verdict:
        raw = []
        for h in q.hyps:
            _conjuncts(h, self.theory, raw)
        facts = [_Fact(t, self.ev.compile(t), frozenset(T.consts_of(t))) for t in raw]
        goal = _Fact(q.goal, self.ev.compile(q.goal), frozenset(T.consts_of(q.goal)))
        consts = {c.name: c for c in q.consts}
        for f in facts:
            for name, c in T.consts_of(f.term).items():
                consts.setdefault(name, c)
        for name, c in T.consts_of(q.goal).items():
            consts.setdefault(name, c)

        self.steps = 0
        self.undecided = None
        try:
            # ground facts first: a false one makes the query vacuous
            for f in facts:
                if not f.consts and not f.fn({}):
                    return Verdict("valid", reason="hypotheses are contradictory", examined=0)
            components = _components(facts, goal, consts)
            goal_part = components[0]
            found = self._search(goal_part, goal)
            if found is None:
                return self._no_counterexample()
            assignment = dict(found)
            for part in components[1:]:
                sat = self._search(part, None)
                if sat is None:
                    return self._no_counterexample()
                assignment.update(sat)
        except _Unbounded as exc:
            return Verdict("unknown", reason=str(exc), examined=self.steps)
        except _Budget:
            return Verdict("unknown", reason=f"search budget of {self.max_steps} assignments exhausted", examined=self.steps)
        except Undecided as exc:
            return Verdict("unknown", reason=str(exc), examined=self.steps)
        ordered = {c.name: assignment[c.name] for c in q.consts if c.name in assignment}
        ordered.update({k: v for k, v in assignment.items() if k not in ordered})
        return Verdict("invalid", counterexample=ordered, examined=self.steps)

    def _no_counterexample(self) -> Verdict:
        if self.undecided is not None:
            return Verdict("unknown", reason=self.undecided, examined=self.steps)
        return Verdict("valid", examined=self.steps)

    # -- search ------------------------------------------------------------------------------

    def _search(self, part, goal: Optional[_Fact]):
        """An assignment satisfying the part's facts (and falsifying ``goal`` if given)."""
        consts, facts = part
        order = _order(consts, facts)
        pos = {c.name: i for i, c in enumerate(order)}
        slots = [_Slot(c) for c in order]
        for f in facts:
            if not f.consts:
                continue
            slots[max(pos[n] for n in f.consts)].checks.append(f)
            _classify(f, pos, slots, self.ev)
        if goal is not None:
            if goal.consts:
                slots[max(pos[n] for n in goal.consts)].goal_here = True
            elif not slots:
                return {} if not self._eval(goal.fn, {}) else None
        if not slots:
            return {}
        env = {}
        return self._dfs(0, slots, env, goal)

    def _eval(self, fn, env):
        try:
            return fn(env)
        except Undecided as exc:
            if self.undecided is None:
                self.undecided = str(exc)
            return None

    def _candidates(self, slot: _Slot, env: dict):
        c = slot.const
        for guard, value in slot.forcers:
            try:
                if guard is None or guard(env):
                    return (value(env),)
            except Undecided:
                continue
        if c.ty == "bool":
            return (False, True)
        lo, hi = A.type_range(c.ty)
        if c.ty in A.MACHINE_WIDTHS:
            hi = min(hi, (1 << self.width) - 1)
        for op, value in slot.bounds:
            try:
                v = value(env)
            except Undecided:
                continue
            if isinstance(v, bool):
                continue
            if op == "<":
                hi = v - 1 if hi is None else min(hi, v - 1)
            elif op == "<=":
                hi = v if hi is None else min(hi, v)
            elif op == ">":
                lo = v + 1 if lo is None else max(lo, v + 1)
            elif op == ">=":
                lo = v if lo is None else max(lo, v)
            elif op == "=":
                lo = v if lo is None else max(lo, v)
                hi = v if hi is None else min(hi, v)
        if lo is None or hi is None:
            raise _Unbounded(f"constant {c.name} has unbounded sort {c.ty} and no bounding fact")
        return range(lo, hi + 1)

    def _dfs(self, i: int, slots: list, env: dict, goal: Optional[_Fact]):
        slot = slots[i]
        name = slot.const.name
        last = i == len(slots) - 1
        for v in self._candidates(slot, env):
            self.steps += 1
            if self.steps > self.max_steps:
                raise _Budget()
            env[name] = v
            ok = True
            for f in slot.checks:
                if not self._eval(f.fn, env):
                    ok = False
                    break
            if not ok:
                continue
            if goal is not None and slot.goal_here:
                g = self._eval(goal.fn, env)
                if g is None or g:
                    continue
            if last:
                return dict(env)
            found = self._dfs(i + 1, slots, env, goal)
            if found is not None:
                return found
        env.pop(name, None)
        return None


class _Unbounded(Exception):
    pass


class _Budget(Exception):
    pass


def _components(facts, goal: _Fact, consts: dict) -> list:
    """Split constants and facts into connected parts; the goal's part comes first."""
    parent = {n: n for n in consts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(names):
        names = list(names)
        for n in names[1:]:
            a, b = find(names[0]), find(n)
            if a != b:
                parent[b] = a

    for f in facts:
        union(f.consts)
    union(goal.consts)
    groups = {}
    for n in consts:
        groups.setdefault(find(n), []).append(consts[n])
    goal_root = find(next(iter(goal.consts))) if goal.consts else None
    parts = []
    for root, members in groups.items():
        member_names = {c.name for c in members}
        part_facts = [f for f in facts if f.consts and next(iter(f.consts)) in member_names]
        parts.append((root, members, part_facts))
    goal_part = [(members, fs) for root, members, fs in parts if root == goal_root]
    others = [(members, fs) for root, members, fs in parts if root != goal_root]
    if not goal_part:
        goal_part = [([], [])]
    return goal_part + others


def _order(consts: list, facts: list) -> list:
    """Greedy static order: pinned constants first, then the most constrained."""
    appearance = {c.name: i for i, c in enumerate(consts)}
    remaining = {c.name: c for c in consts}
    chosen = set()
    order = []
    while remaining:
        best, best_key = None, None
        for name in remaining:
            pinned = any(_pins(f.term, name, chosen) for f in facts if name in f.consts)
            bounded = sum(1 for f in facts if name in f.consts and f.consts - {name} <= chosen)
            key = (not pinned, -bounded, appearance[name])
            if best_key is None or key < best_key:
                best, best_key = name, key
        order.append(remaining.pop(best))
        chosen.add(best)
    return order


def _pins(t: T.Term, name: str, chosen: set) -> bool:
    if isinstance(t, T.App) and t.op == "=>":
        guard, body = t.args
        return set(T.consts_of(guard)) <= chosen and _pins(body, name, chosen)
    if isinstance(t, T.App) and t.op == "=" and len(t.args) == 2:
        a, b = t.args
        for mine, other in ((a, b), (b, a)):
            if isinstance(mine, T.Const) and mine.name == name and set(T.consts_of(other)) <= chosen:
                return True
    return False


def _classify(f: _Fact, pos: dict, slots: list, ev: Evaluator):
    """Record equations and comparisons that pin or bound a constant from earlier ones."""
    t = f.term
    guard = None
    if isinstance(t, T.App) and t.op == "=>":
        g, t = t.args
        if not isinstance(t, T.App) or t.op != "=":
            return
        guard = g
    if not isinstance(t, T.App) or t.op not in ("=", "<", "<=", ">", ">=") or len(t.args) != 2:
        return
    a, b = t.args
    for mine, other, op in ((a, b, t.op), (b, a, _FLIP.get(t.op, t.op))):
        if not isinstance(mine, T.Const):
            continue
        i = pos[mine.name]
        deps = set(T.consts_of(other)) | (set(T.consts_of(guard)) if guard is not None else set())
        if any(pos[n] >= i for n in deps):
            continue
        value = ev.compile(other)
        if op == "=":
            slots[i].forcers.append((ev.compile(guard) if guard is not None else None, value))
        elif guard is None:
            slots[i].bounds.append((op, value))


def bounded_verify(q: VCQuery, width: int = 6, depth_cap: int = 400, oracle: Optional[BoundedOracle] = None) -> Verdict:
    """Decide ``q`` by exhaustive enumeration of its free constants below ``2**width``."""
    if oracle is None:
        oracle = BoundedOracle(q.theory or Theory(), width, depth_cap)
    return oracle.verify(q)


def replay(q: VCQuery, assignment: dict, evaluator: Optional[Evaluator] = None) -> tuple:
    """(all hypotheses hold, goal holds) under ``assignment``."""
    ev = evaluator or Evaluator(q.theory or Theory())
    hyps = all(ev.evaluate(h, assignment) for h in q.hyps)
    return hyps, bool(ev.evaluate(q.goal, assignment))
