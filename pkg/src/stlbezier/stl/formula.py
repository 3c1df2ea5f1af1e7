"""Abstract syntax for bounded-time STL over polytope predicates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple


class UnsupportedConstruct(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (0.0 <= a < b) or b == float("inf"):
            raise ValueError(f"time interval [{self.a}, {self.b}] must satisfy 0 <= a < b < inf")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __str__(self):
        return f"[{_num(self.a)},{_num(self.b)}]"


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


class Formula:
    """Base class; concrete nodes are frozen dataclasses so equal trees hash equal."""

    def children(self) -> Tuple["Formula", ...]:
        return ()

    def walk(self) -> Iterator["Formula"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children()))

    def region_names(self) -> set:
        return {n.name for n in self.walk() if isinstance(n, (Pred, NegPred))}

    def __str__(self):
        return to_text(self)


_POS = dict(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TrueF(Formula):
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class FalseF(Formula):
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class Pred(Formula):
    name: str
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class NegPred(Formula):
    name: str
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class Not(Formula):
    """General negation; only present before :func:`to_nnf`."""

    arg: Formula
    pos: Optional[tuple] = field(**_POS)

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class And(Formula):
    args: Tuple[Formula, ...]
    pos: Optional[tuple] = field(**_POS)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 1:
            raise ValueError("conjunction needs at least one operand")

    def children(self):
        return self.args


@dataclass(frozen=True)
class Or(Formula):
    args: Tuple[Formula, ...]
    pos: Optional[tuple] = field(**_POS)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 1:
            raise ValueError("disjunction needs at least one operand")

    def children(self):
        return self.args


@dataclass(frozen=True)
class Always(Formula):
    interval: Interval
    arg: Formula
    pos: Optional[tuple] = field(**_POS)

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Eventually(Formula):
    interval: Interval
    arg: Formula
    pos: Optional[tuple] = field(**_POS)

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Until(Formula):
    interval: Interval
    left: Formula
    right: Formula
    pos: Optional[tuple] = field(**_POS)

    def children(self):
        return (self.left, self.right)


def is_nnf(f: Formula) -> bool:
    return not any(isinstance(n, Not) for n in f.walk())


def to_nnf(f: Formula, negate: bool = False) -> Formula:
    """Push negations down to predicates.

    Negated Until has no dual in this grammar (it would need Release) and is
    rejected with :class:`UnsupportedConstruct`.
    """
    if isinstance(f, Not):
        return to_nnf(f.arg, not negate)
    if isinstance(f, TrueF):
        return FalseF(pos=f.pos) if negate else f
    if isinstance(f, FalseF):
        return TrueF(pos=f.pos) if negate else f
    if isinstance(f, Pred):
        return NegPred(f.name, pos=f.pos) if negate else f
    if isinstance(f, NegPred):
        return Pred(f.name, pos=f.pos) if negate else f
    if isinstance(f, And):
        args = tuple(to_nnf(a, negate) for a in f.args)
        return Or(args, pos=f.pos) if negate else And(args, pos=f.pos)
    if isinstance(f, Or):
        args = tuple(to_nnf(a, negate) for a in f.args)
        return And(args, pos=f.pos) if negate else Or(args, pos=f.pos)
    if isinstance(f, Always):
        cls = Eventually if negate else Always
        return cls(f.interval, to_nnf(f.arg, negate), pos=f.pos)
    if isinstance(f, Eventually):
        cls = Always if negate else Eventually
        return cls(f.interval, to_nnf(f.arg, negate), pos=f.pos)
    if isinstance(f, Until):
        if negate:
            where = f" at line {f.pos[0]}, column {f.pos[1]}" if f.pos else ""
            raise UnsupportedConstruct(f"negated Until{where} has no negation normal form without Release")
        return Until(f.interval, to_nnf(f.left), to_nnf(f.right), pos=f.pos)
    raise TypeError(f"not a formula node: {f!r}")


def formula_horizon(f: Formula) -> float:
    """Length of the time window after ``t`` that decides satisfaction at ``t``."""
    if isinstance(f, (TrueF, FalseF, Pred, NegPred)):
        return 0.0
    if isinstance(f, Not):
        return formula_horizon(f.arg)
    if isinstance(f, (And, Or)):
        return max(formula_horizon(a) for a in f.args)
    if isinstance(f, (Always, Eventually)):
        return f.interval.b + formula_horizon(f.arg)
    if isinstance(f, Until):
        return f.interval.b + max(formula_horizon(f.left), formula_horizon(f.right))
    raise TypeError(f"not a formula node: {f!r}")


def formula_size(f: Formula) -> int:
    return sum(1 for _ in f.walk())


def count_disjunctions(f: Formula) -> int:
    """Number of disjunctive operators (Or, Eventually, Until, negated predicates)."""
    return sum(1 for n in f.walk() if isinstance(n, (Or, Eventually, Until, NegPred)))


# -- printing ---------------------------------------------------------------

def to_text(f: Formula) -> str:
    """Concrete syntax accepted by :func:`stlbezier.stl.parse`."""
    if isinstance(f, TrueF):
        return "True"
    if isinstance(f, FalseF):
        return "False"
    if isinstance(f, Pred):
        return f.name
    if isinstance(f, NegPred):
        return "!" + f.name
    if isinstance(f, Not):
        inner = to_text(f.arg)
        return "!" + (inner if isinstance(f.arg, (Pred, TrueF, FalseF)) else f"({inner})")
    if isinstance(f, And):
        return " & ".join(_wrap(a, (And, Or)) for a in f.args)
    if isinstance(f, Or):
        return " | ".join(_wrap(a, (Or,)) for a in f.args)
    if isinstance(f, Always):
        return f"G{f.interval} " + _wrap(f.arg, (And, Or, Until))
    if isinstance(f, Eventually):
        return f"F{f.interval} " + _wrap(f.arg, (And, Or, Until))
    if isinstance(f, Until):
        return _wrap(f.left, (And, Or, Until)) + f" U{f.interval} " + _wrap(f.right, (And, Or, Until))
    raise TypeError(f"not a formula node: {f!r}")


def _wrap(f: Formula, kinds) -> str:
    s = to_text(f)
    return f"({s})" if isinstance(f, kinds) else s
