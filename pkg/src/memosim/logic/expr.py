"""Boolean expression trees and their NAND/NOR lowering.

Expressions are immutable and hashable so identical subtrees compare equal;
the netlist builder relies on that to share gates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np


class BoolExpr:
    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __xor__(self, other):
        return Xor(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Var(BoolExpr):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const(BoolExpr):
    bit: int

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError("constant must be 0 or 1")

    def __str__(self):
        return str(self.bit)


@dataclass(frozen=True)
class Not(BoolExpr):
    e: BoolExpr

    def __str__(self):
        return f"~{self.e}"


@dataclass(frozen=True)
class _Binary(BoolExpr):
    a: BoolExpr
    b: BoolExpr
    symbol = "?"

    def __str__(self):
        return f"({self.a} {self.symbol} {self.b})"


class And(_Binary):
    symbol = "&"


class Or(_Binary):
    symbol = "|"


class Xor(_Binary):
    symbol = "^"


class Nand(_Binary):
    symbol = "!&"


class Nor(_Binary):
    symbol = "!|"


def all_of(*terms: BoolExpr) -> BoolExpr:
    out = terms[0]
    for t in terms[1:]:
        out = And(out, t)
    return out


def any_of(*terms: BoolExpr) -> BoolExpr:
    out = terms[0]
    for t in terms[1:]:
        out = Or(out, t)
    return out


def variables(e: BoolExpr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Not):
        return variables(e.e)
    return variables(e.a) | variables(e.b)


def evaluate(e: BoolExpr, env):
    """Evaluate ``e``; ``env`` maps variable names to bits or boolean arrays."""
    if isinstance(e, Var):
        return np.asarray(env[e.name], dtype=bool)
    if isinstance(e, Const):
        return np.bool_(e.bit)
    if isinstance(e, Not):
        return ~evaluate(e.e, env)
    a = evaluate(e.a, env)
    b = evaluate(e.b, env)
    if isinstance(e, And):
        return a & b
    if isinstance(e, Or):
        return a | b
    if isinstance(e, Xor):
        return a ^ b
    if isinstance(e, Nand):
        return ~(a & b)
    if isinstance(e, Nor):
        return ~(a | b)
    raise TypeError(f"not a BoolExpr: {e!r}")


def truth_table(e: BoolExpr, names=None) -> tuple:
    """Output column over all assignments of ``names`` (sorted variables by default)."""
    names = sorted(variables(e)) if names is None else list(names)
    rows = np.array(list(product((0, 1), repeat=len(names))), dtype=bool).reshape(-1, len(names))
    env = {n: rows[:, k] for k, n in enumerate(names)}
    out = np.broadcast_to(evaluate(e, env), (rows.shape[0],))
    return tuple(int(v) for v in out)


def node_count(e: BoolExpr) -> int:
    """Number of gate nodes, counting shared subtrees once."""
    seen = set()

    def walk(x):
        if isinstance(x, (Var, Const)) or x in seen:
            return
        seen.add(x)
        if isinstance(x, Not):
            walk(x.e)
        else:
            walk(x.a)
            walk(x.b)

    walk(e)
    return len(seen)


def is_lowered(e: BoolExpr) -> bool:
    if isinstance(e, (Var, Const)):
        return True
    if isinstance(e, Not):
        return is_lowered(e.e)
    if isinstance(e, (Nand, Nor)):
        return is_lowered(e.a) and is_lowered(e.b)
    return False


def _pick(*candidates):
    # first candidate wins ties, so the NAND form of And/Or is preferred
    return min(candidates, key=node_count)


@lru_cache(maxsize=None)
def _pos(e: BoolExpr) -> BoolExpr:
    """Lowered form of ``e``."""
    if isinstance(e, (Var, Const)):
        return e
    if isinstance(e, Not):
        return _neg(e.e)
    if isinstance(e, And):
        return _pick(Not(Nand(_pos(e.a), _pos(e.b))), Nor(_neg(e.a), _neg(e.b)))
    if isinstance(e, Or):
        return _pick(Nand(_neg(e.a), _neg(e.b)), Not(Nor(_pos(e.a), _pos(e.b))))
    if isinstance(e, Xor):
        a, b = _pos(e.a), _pos(e.b)
        ab = Nand(a, b)
        return Nand(Nand(a, ab), Nand(b, ab))
    if isinstance(e, Nand):
        return Nand(_pos(e.a), _pos(e.b))
    if isinstance(e, Nor):
        return Nor(_pos(e.a), _pos(e.b))
    raise TypeError(f"not a BoolExpr: {e!r}")


@lru_cache(maxsize=None)
def _neg(e: BoolExpr) -> BoolExpr:
    """Lowered form of ``~e`` with double inversions cancelled."""
    if isinstance(e, Var):
        return Not(e)
    if isinstance(e, Const):
        return Const(1 - e.bit)
    if isinstance(e, Not):
        return _pos(e.e)
    if isinstance(e, And):
        return Nand(_pos(e.a), _pos(e.b))
    if isinstance(e, Or):
        return Nor(_pos(e.a), _pos(e.b))
    if isinstance(e, Nand):
        return _pos(And(e.a, e.b))
    if isinstance(e, Nor):
        return _pos(Or(e.a, e.b))
    lowered = _pos(e)
    if isinstance(lowered, Not):
        return lowered.e
    return Not(lowered)


def lower_to_nand_nor(e: BoolExpr) -> BoolExpr:
    """Rewrite ``e`` using only Var, Const, Not, Nand and Nor.

    And/Or are removed by double inversion plus De Morgan, so ``a | (b & ~c)``
    becomes ``Nand(~a, Nand(b, ~c))``. Xor is expanded to the four-NAND form
    ``Nand(Nand(a, Nand(a, b)), Nand(b, Nand(a, b)))``.
    """
    return _pos(e)
