"""Abstract syntax of the mode/linearity calculus.

Every node is an immutable dataclass. Hashes are cached on first use so that
terms can be used as memoization keys by the checkers and the enumerator.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Optional, Union


class Mode(enum.Enum):
    # members are singletons; identity hashing is much cheaper than the default
    __hash__ = object.__hash__

    SPEC = "spec"
    PROOF = "proof"
    EXEC = "exec"

    @property
    def rank(self) -> int:
        return _MODE_RANK[self]

    def __str__(self) -> str:
        return self.value


_MODE_RANK = {Mode.EXEC: 0, Mode.PROOF: 1, Mode.SPEC: 2}
MODES = (Mode.EXEC, Mode.PROOF, Mode.SPEC)


def mode_leq(m1: Mode, m2: Mode) -> bool:
    """exec <= proof <= spec."""
    return _MODE_RANK[m1] <= _MODE_RANK[m2]


def mode_join(m1: Mode, m2: Mode) -> Mode:
    return m1 if _MODE_RANK[m1] >= _MODE_RANK[m2] else m2


class Usage(enum.Enum):
    __hash__ = object.__hash__

    LINEAR = "linear"
    SHARED = "shared"

    def __str__(self) -> str:
        return self.value


class ModeUsage(enum.Enum):
    """A mode paired with a usage; spec carries no usage."""

    __hash__ = object.__hash__

    SPEC = "spec"
    PROOF_LINEAR = "proof-linear"
    PROOF_SHARED = "proof-shared"
    EXEC_LINEAR = "exec-linear"
    EXEC_SHARED = "exec-shared"

    @property
    def mode(self) -> Mode:
        return _MU_PARTS[self][0]

    @property
    def usage(self) -> Optional[Usage]:
        return _MU_PARTS[self][1]

    @property
    def is_linear(self) -> bool:
        return _MU_PARTS[self][1] is Usage.LINEAR

    @property
    def is_shared(self) -> bool:
        return _MU_PARTS[self][1] is Usage.SHARED

    @staticmethod
    def of(mode: Mode, usage: Optional[Usage] = None) -> "ModeUsage":
        if mode is Mode.SPEC:
            return ModeUsage.SPEC
        if usage is None:
            raise ValueError(f"{mode} requires a usage")
        return _MU_BY_PARTS[(mode, usage)]

    def with_usage(self, usage: Usage) -> "ModeUsage":
        if self is ModeUsage.SPEC:
            return self
        return _MU_BY_PARTS[(self.mode, usage)]

    def __str__(self) -> str:
        return self.value


_MU_PARTS = {
    ModeUsage.SPEC: (Mode.SPEC, None),
    ModeUsage.PROOF_LINEAR: (Mode.PROOF, Usage.LINEAR),
    ModeUsage.PROOF_SHARED: (Mode.PROOF, Usage.SHARED),
    ModeUsage.EXEC_LINEAR: (Mode.EXEC, Usage.LINEAR),
    ModeUsage.EXEC_SHARED: (Mode.EXEC, Usage.SHARED),
}
_MU_BY_PARTS = {v: k for k, v in _MU_PARTS.items() if v[1] is not None}
MODE_USAGES = (
    ModeUsage.EXEC_LINEAR,
    ModeUsage.EXEC_SHARED,
    ModeUsage.PROOF_LINEAR,
    ModeUsage.PROOF_SHARED,
    ModeUsage.SPEC,
)


def join_mode_usage(m: Mode, mu: ModeUsage) -> ModeUsage:
    """Join a field mode into a mode+usage, keeping the usage unless the
    result is spec."""
    joined = mode_join(m, mu.mode)
    if joined is Mode.SPEC:
        return ModeUsage.SPEC
    return ModeUsage.of(joined, mu.usage)


class Callability(enum.Enum):
    __hash__ = object.__hash__

    ONCE = "Once"
    MANY = "Many"

    def __str__(self) -> str:
        return self.value


class Lifetime(enum.Enum):
    __hash__ = object.__hash__

    STATIC = "static"
    RESTRICTED = "restricted"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _cached_hash(self) -> int:
    try:
        return self.__dict__["_hash"]
    except KeyError:
        h = hash((type(self).__name__,) + tuple(getattr(self, n) for n in self._hash_fields))
        self.__dict__["_hash"] = h
        return h


def node(cls):
    """Frozen dataclass with a cached structural hash; ``span`` is ignored by
    equality and hashing."""
    cls = dataclass(frozen=True)(cls)
    cls._hash_fields = tuple(f.name for f in dataclasses.fields(cls) if f.compare)
    cls.__hash__ = _cached_hash
    return cls


# -- types -------------------------------------------------------------------


class Type:
    __slots__ = ()


@node
class TInt(Type):
    pass


@node
class TUnit(Type):
    pass


@node
class TNever(Type):
    pass


@node
class TPerm(Type):
    index: int
    inner: Type


@node
class TOption(Type):
    inner: Type


@node
class TStruct(Type):
    name: str


@node
class TFn(Type):
    mode: Mode
    callability: Callability
    lifetime: Lifetime
    arg_mu: ModeUsage
    arg: Type
    res_mu: ModeUsage
    res: Type


INT = TInt()
UNIT = TUnit()
NEVER = TNever()


def lifetime_of(t: Type) -> Lifetime:
    while isinstance(t, TOption):
        t = t.inner
    if isinstance(t, TFn):
        return t.lifetime
    return Lifetime.STATIC


def outlives_static(m: Mode, t: Type) -> bool:
    """The ``m |- t : static`` judgment: spec values carry no lifetime."""
    return m is Mode.SPEC or lifetime_of(t) is Lifetime.STATIC


def is_unrestricted(mu: ModeUsage, t: Type) -> bool:
    return not mu.is_shared and outlives_static(mu.mode, t)


# -- expressions -------------------------------------------------------------


class Expr:
    __slots__ = ()


@node
class Borrow:
    """Explicit borrow clause for seq/let: variables and permission indices."""

    names: tuple = ()
    perms: tuple = ()

    @property
    def empty(self) -> bool:
        return not self.names and not self.perms


_SPAN = dict(default=None, compare=False, repr=False)


@node
class Var(Expr):
    name: str
    span: Optional[Span] = field(**_SPAN)


@node
class IntLit(Expr):
    value: int
    span: Optional[Span] = field(**_SPAN)


@node
class Add(Expr):
    left: Expr
    right: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class UnitLit(Expr):
    span: Optional[Span] = field(**_SPAN)


@node
class Bottom(Expr):
    span: Optional[Span] = field(**_SPAN)


@node
class Default(Expr):
    ty: Type
    span: Optional[Span] = field(**_SPAN)


@node
class CrashNever(Expr):
    arg: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class HData(Expr):
    span: Optional[Span] = field(**_SPAN)


@node
class HRead(Expr):
    span: Optional[Span] = field(**_SPAN)


@node
class HWrite(Expr):
    arg: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class PermLit(Expr):
    index: int
    value: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class PData(Expr):
    perm: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class PRead(Expr):
    index: int
    perm: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class PWrite(Expr):
    index: int
    value: Expr
    perm: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class Drop(Expr):
    arg: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class Copy(Expr):
    arg: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class Seq(Expr):
    first: Expr
    second: Expr
    borrow: Optional[Borrow] = None
    span: Optional[Span] = field(**_SPAN)


@node
class Let(Expr):
    mode: Mode
    name: str
    bound: Expr
    body: Expr
    borrow: Optional[Borrow] = None
    span: Optional[Span] = field(**_SPAN)


@node
class NoneLit(Expr):
    ty: Type
    span: Optional[Span] = field(**_SPAN)


@node
class SomeE(Expr):
    arg: Expr
    ty: Type
    span: Optional[Span] = field(**_SPAN)


@node
class IfLet(Expr):
    name: str
    scrutinee: Expr
    then: Expr
    orelse: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class Struct(Expr):
    name: str
    args: tuple
    span: Optional[Span] = field(**_SPAN)


@node
class LetStruct(Expr):
    name: str
    binders: tuple
    bound: Expr
    body: Expr
    span: Optional[Span] = field(**_SPAN)


@node
class Lambda(Expr):
    mode: Mode
    callability: Callability
    lifetime: Lifetime
    param: str
    param_mu: ModeUsage
    param_ty: Type
    body: Expr
    span: Optional[Span] = field(**_SPAN)

    @property
    def fn_type_head(self):
        return (self.mode, self.callability, self.lifetime, self.param_mu, self.param_ty)


@node
class App(Expr):
    fn: Expr
    arg: Expr
    span: Optional[Span] = field(**_SPAN)


Value = Expr


# -- declarations ------------------------------------------------------------


@node
class DatatypeDecl:
    name: str
    fields: tuple  # of (Mode, Type)


@dataclass(frozen=True)
class DeclTable:
    decls: tuple = ()

    def __post_init__(self):
        names = [d.name for d in self.decls]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate datatype names in {names}")

    def lookup(self, name: str) -> Optional[DatatypeDecl]:
        for d in self.decls:
            if d.name == name:
                return d
        return None

    def names(self) -> frozenset:
        return frozenset(d.name for d in self.decls)

    def __iter__(self):
        return iter(self.decls)

    def __len__(self):
        return len(self.decls)


EMPTY_DECLS = DeclTable()

Term = Union[Expr, Type]
