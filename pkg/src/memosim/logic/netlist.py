"""Leveled gate netlists.

Gates are stored in creation order, which is always a topological order: a
gate can only reference gates created before it. The builder shares
structurally identical gates and folds constants, so boundary digits wired to
constant 0 do not leave dead logic behind.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import MissingInput, ParseError
from . import expr as ex

INPUT, CONST, NOT, NAND, NOR, AND, OR, XOR = "INPUT", "CONST", "NOT", "NAND", "NOR", "AND", "OR", "XOR"
KINDS = (INPUT, CONST, NOT, NAND, NOR, AND, OR, XOR)
LOWERED_KINDS = frozenset({INPUT, CONST, NOT, NAND, NOR})
_ARITY = {INPUT: 0, CONST: 0, NOT: 1, NAND: 2, NOR: 2, AND: 2, OR: 2, XOR: 2}
_COMMUTATIVE = frozenset({NAND, NOR, AND, OR, XOR})


@dataclass(frozen=True)
class Gate:
    id: int
    kind: str
    fanin: tuple = ()
    # INPUT: variable name; CONST: "0" or "1"
    label: str = ""


@dataclass
class Netlist:
    gates: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def levels(self) -> list:
        lv = []
        for g in self.gates:
            lv.append(1 + max(lv[f] for f in g.fanin) if g.fanin else 0)
        return lv

    def depth(self) -> int:
        return max(self.levels, default=0)

    def count(self, *kinds) -> int:
        return sum(g.kind in kinds for g in self.gates)

    def gate_count(self) -> int:
        """Logic gates, i.e. everything except INPUT and CONST."""
        return sum(g.kind not in (INPUT, CONST) for g in self.gates)

    def is_lowered(self) -> bool:
        return all(g.kind in LOWERED_KINDS for g in self.gates)

    def level_schedule(self) -> list:
        """Gate ids grouped by level, level 0 first."""
        lv = self.levels
        out = [[] for _ in range(max(lv, default=0) + 1)]
        for g, l in zip(self.gates, lv):
            out[l].append(g.id)
        return out

    def dumps(self) -> str:
        lv = self.levels
        lines = ["# memosim netlist v1"]
        lines += [f"META {k} {v}" for k, v in self.meta.items()]
        for g, l in zip(self.gates, lv):
            args = g.label if g.kind in (INPUT, CONST) else " ".join(map(str, g.fanin))
            lines.append(f"{g.id} {g.kind} {args} # {l}")
        lines += [f"OUTPUT {name} {gid}" for name, gid in self.outputs.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Netlist":
        net = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] == "META":
                if len(tok) != 3:
                    raise ParseError("META needs a key and a value", lineno)
                net.meta[tok[1]] = tok[2]
                continue
            if tok[0] == "OUTPUT":
                if len(tok) != 3:
                    raise ParseError("OUTPUT needs a name and a gate id", lineno)
                gid = _int(tok[2], lineno)
                if not 0 <= gid < len(net.gates):
                    raise ParseError(f"output refers to unknown gate {gid}", lineno)
                net.outputs[tok[1]] = gid
                continue
            if len(tok) < 2:
                raise ParseError("expected 'id KIND args'", lineno)
            gid, kind = _int(tok[0], lineno), tok[1]
            if gid != len(net.gates):
                raise ParseError(f"gate ids must be consecutive, expected {len(net.gates)}", lineno)
            if kind not in KINDS:
                raise ParseError(f"unknown gate kind {kind!r}", lineno)
            args = tok[2:]
            if kind in (INPUT, CONST):
                if len(args) != 1:
                    raise ParseError(f"{kind} needs one label", lineno)
                if kind == CONST and args[0] not in ("0", "1"):
                    raise ParseError("CONST label must be 0 or 1", lineno)
                net.gates.append(Gate(gid, kind, (), args[0]))
                if kind == INPUT:
                    net.inputs[args[0]] = gid
                continue
            fanin = tuple(_int(a, lineno) for a in args)
            if len(fanin) != _ARITY[kind]:
                raise ParseError(f"{kind} takes {_ARITY[kind]} fan-ins", lineno)
            if any(not 0 <= f < gid for f in fanin):
                raise ParseError("fan-in must refer to an earlier gate", lineno)
            net.gates.append(Gate(gid, kind, fanin))
        return net


def _int(tok, lineno):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", lineno) from None


class NetlistBuilder:
    """Incremental netlist construction with gate sharing and constant folding."""

    def __init__(self):
        self.net = Netlist()
        self._keys = {}
        self._const = {}

    def input(self, name: str) -> int:
        if name in self.net.inputs:
            return self.net.inputs[name]
        gid = self._append(INPUT, (), name)
        self.net.inputs[name] = gid
        return gid

    def const(self, bit: int) -> int:
        bit = int(bit)
        if bit not in self._const:
            self._const[bit] = self._append(CONST, (), str(bit))
        return self._const[bit]

    def const_value(self, gid: int):
        g = self.net.gates[gid]
        return int(g.label) if g.kind == CONST else None

    def _append(self, kind, fanin, label=""):
        gid = len(self.net.gates)
        self.net.gates.append(Gate(gid, kind, fanin, label))
        return gid

    def gate(self, kind: str, *fanin: int) -> int:
        folded = self._fold(kind, fanin)
        if folded is not None:
            return folded
        key = (kind, tuple(sorted(fanin)) if kind in _COMMUTATIVE else fanin)
        if key not in self._keys:
            self._keys[key] = self._append(kind, tuple(fanin))
        return self._keys[key]

    def _fold(self, kind, fanin):
        cv = [self.const_value(f) for f in fanin]
        if kind == NOT:
            (a,) = fanin
            if cv[0] is not None:
                return self.const(1 - cv[0])
            g = self.net.gates[a]
            if g.kind == NOT:
                return g.fanin[0]
            return None
        a, b = fanin
        ca, cb = cv
        if ca is not None and cb is not None:
            return self.const(_apply(kind, ca, cb))
        if ca is not None or cb is not None:
            c, x = (ca, b) if ca is not None else (cb, a)
            if kind == NAND:
                return self.const(1) if c == 0 else self.gate(NOT, x)
            if kind == NOR:
                return self.gate(NOT, x) if c == 0 else self.const(0)
            if kind == AND:
                return self.const(0) if c == 0 else x
            if kind == OR:
                return x if c == 0 else self.const(1)
            if kind == XOR:
                return x if c == 0 else self.gate(NOT, x)
        if a == b:
            if kind in (NAND, NOR):
                return self.gate(NOT, a)
            if kind in (AND, OR):
                return a
            if kind == XOR:
                return self.const(0)
        return None

    def emit(self, e: ex.BoolExpr, env: Mapping[str, int]) -> int:
        """Instantiate ``e`` with variables bound to existing gate ids."""
        memo = {}

        def walk(x):
            if x in memo:
                return memo[x]
            if isinstance(x, ex.Var):
                gid = env[x.name]
            elif isinstance(x, ex.Const):
                gid = self.const(x.bit)
            elif isinstance(x, ex.Not):
                gid = self.gate(NOT, walk(x.e))
            else:
                kind = {ex.And: AND, ex.Or: OR, ex.Xor: XOR, ex.Nand: NAND, ex.Nor: NOR}[type(x)]
                gid = self.gate(kind, walk(x.a), walk(x.b))
            memo[x] = gid
            return gid

        return walk(e)

    def output(self, name: str, gid: int):
        self.net.outputs[name] = gid


def _apply(kind, a, b):
    return {
        NAND: 1 - (a & b),
        NOR: 1 - (a | b),
        AND: a & b,
        OR: a | b,
        XOR: a ^ b,
    }[kind]


def eval_gates(net: Netlist, assignment: Mapping[str, object]) -> list:
    """Values of every gate, in gate order; inputs may be bits or boolean arrays."""
    vals = [None] * len(net.gates)
    for g in net.gates:
        k = g.kind
        if k == INPUT:
            if g.label not in assignment:
                raise MissingInput(g.label)
            vals[g.id] = np.asarray(assignment[g.label], dtype=bool)
        elif k == CONST:
            vals[g.id] = np.bool_(g.label == "1")
        elif k == NOT:
            vals[g.id] = ~vals[g.fanin[0]]
        else:
            a, b = vals[g.fanin[0]], vals[g.fanin[1]]
            if k == NAND:
                vals[g.id] = ~(a & b)
            elif k == NOR:
                vals[g.id] = ~(a | b)
            elif k == AND:
                vals[g.id] = a & b
            elif k == OR:
                vals[g.id] = a | b
            else:
                vals[g.id] = a ^ b
    return vals


def eval_netlist(net: Netlist, assignment: Mapping[str, object]) -> dict:
    """Ideal logic evaluation; returns ``{output name: bit or boolean array}``."""
    vals = eval_gates(net, assignment)
    return {name: vals[gid] for name, gid in net.outputs.items()}
