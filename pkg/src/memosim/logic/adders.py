"""Per-digit cell equations and full-width carry-free adder netlists.

Two adder families are built:

``step4``
    Two cascaded SD + binary subadders (two logic steps each). The first adds
    the positive part of the second operand, the second subtracts its negative
    part via ``sd - B = -((-sd) + B)``; the negations are (n, p) wire swaps.
``step3``
    Three steps over a transfer vector ``t`` (weight +2), an intermediate
    vector ``z`` in {-2, -1, 0} coded as ``-2*z_p - z_n``, and a second
    transfer ``t'`` (weight -2).

Operand inputs are named ``a{i}_n``, ``a{i}_p``, ``b{i}_n``, ``b{i}_p`` and
sum outputs ``s{i}_n``, ``s{i}_p`` with ``i = 0`` least significant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GuardViolation, InvalidCoding, WidthMismatch
from ..sdarith import SDNumber
from . import expr as ex
from .netlist import Netlist, NetlistBuilder, eval_netlist

STEP3, STEP4 = "step3", "step4"
FAMILIES = (STEP3, STEP4)
STAGE1 = "step4-stage1"
STEPS = {STEP3: 3, STEP4: 4, STAGE1: 2}

V = ex.Var


def step4_cell() -> dict:
    """SD digit ``x`` plus bit ``y``; step 2 consumes the carry ``c_prev`` of digit i-1."""
    xp, xn, y, zn, cprev = V("x_p"), V("x_n"), V("y"), V("z_n"), V("c_prev")
    return {
        "step1": {
            "c_p": xp | (y & ~xn),
            "z_n": (xp | xn) ^ y,
        },
        "step2": {
            "s_p": ~zn & cprev,
            "s_n": ~cprev & zn,
        },
    }


def step3_cell() -> dict:
    """Digit logic of the three-step SD + SD adder.

    Step-2 inputs ``t``, ``z_p``, ``z_n`` and step-3 inputs ``tq``, ``zq`` are the
    values arriving at digit i (``t`` and ``tq`` come from digit i-1).
    """
    ap, an, bp, bn = V("a_p"), V("a_n"), V("b_p"), V("b_n")
    t, zp, zn = V("t"), V("z_p"), V("z_n")
    tq, zq = V("tq"), V("zq")
    return {
        "step1": {
            "t_next": (ap & ~bn) | (~an & bp),
            "z_p": an & bn,
            "z_n": ex.any_of(
                ex.all_of(~ap, ~an, bn),
                ex.all_of(an, ~bp, ~bn),
                ex.all_of(ap, ~bp, ~bn),
                ex.all_of(~ap, ~an, bp),
            ),
        },
        "step2": {
            "tq_next": (~t & zn) | zp,
            # (~t & z_n) | (t & ~z_n)
            "zq": t ^ zn,
        },
        "step3": {
            "s_p": ~tq & zq,
            # t' without z' is a lone -1; the t' & z' form would map that case to 0
            "s_n": tq & ~zq,
        },
    }


@dataclass
class AdderNetlist:
    netlist: Netlist
    family: str
    width: int
    out_width: int
    steps: int

    def input_assignment(self, a_digits, b_digits) -> dict:
        """Bit arrays for every operand input from ``(batch, width)`` digit arrays."""
        a = np.atleast_2d(np.asarray(a_digits))
        b = np.atleast_2d(np.asarray(b_digits))
        if a.shape[-1] != self.width or b.shape[-1] != self.width:
            raise WidthMismatch(f"adder width {self.width}, operands {a.shape[-1]} and {b.shape[-1]}")
        env = {}
        for i in range(self.width):
            env[f"a{i}_n"] = a[:, i] < 0
            env[f"a{i}_p"] = a[:, i] > 0
            if self.family == STAGE1:
                env[f"y{i}"] = b[:, i] > 0
            else:
                env[f"b{i}_n"] = b[:, i] < 0
                env[f"b{i}_p"] = b[:, i] > 0
        return {k: v for k, v in env.items() if k in self.netlist.inputs}

    def decode(self, outputs: dict, batch: int) -> np.ndarray:
        """``(batch, out_width)`` digit array from output bits; rejects (1, 1) codes."""
        digits = np.zeros((batch, self.out_width), dtype=np.int8)
        for i in range(self.out_width):
            n = np.broadcast_to(outputs[f"s{i}_n"], (batch,))
            p = np.broadcast_to(outputs[f"s{i}_p"], (batch,))
            if np.any(n & p):
                raise InvalidCoding(f"output digit {i} decoded as (1, 1)")
            digits[:, i] = p.astype(np.int8) - n.astype(np.int8)
        if "guard_p" in outputs:
            if np.any(outputs["guard_p"]) or np.any(outputs["guard_n"]):
                raise GuardViolation("step-3 guard digit is nonzero")
        return digits

    def add_digits(self, a_digits, b_digits) -> np.ndarray:
        env = self.input_assignment(a_digits, b_digits)
        batch = np.atleast_2d(np.asarray(a_digits)).shape[0]
        return self.decode(eval_netlist(self.netlist, env), batch)

    def add(self, a: SDNumber, b: SDNumber) -> SDNumber:
        out = self.add_digits([a.digits], [b.digits])[0]
        return SDNumber(tuple(out.tolist()))

    def dumps(self) -> str:
        return self.netlist.dumps()

    @classmethod
    def from_netlist(cls, net: Netlist) -> "AdderNetlist":
        m = net.meta
        return cls(net, m["family"], int(m["width"]), int(m["out_width"]), int(m["steps"]))


def _swap(digits):
    return [(p, n) for n, p in digits]


def _cells(lowered):
    def prep(cell):
        if not lowered:
            return cell
        return {step: {k: ex.lower_to_nand_nor(e) for k, e in outs.items()} for step, outs in cell.items()}

    return prep


def _subadder(bld, cell, x, y):
    """SD digits ``x`` (list of (n, p) gate ids) plus bits ``y``; returns len(x)+1 digits."""
    n = len(x)
    zero = bld.const(0)
    carry, zneg = [], []
    for i in range(n):
        env = {"x_n": x[i][0], "x_p": x[i][1], "y": y[i]}
        carry.append(bld.emit(cell["step1"]["c_p"], env))
        zneg.append(bld.emit(cell["step1"]["z_n"], env))
    out = []
    for i in range(n + 1):
        env = {"z_n": zneg[i] if i < n else zero, "c_prev": carry[i - 1] if i > 0 else zero}
        out.append((bld.emit(cell["step2"]["s_n"], env), bld.emit(cell["step2"]["s_p"], env)))
    return out


def _operand(bld, name, width):
    return [(bld.input(f"{name}{i}_n"), bld.input(f"{name}{i}_p")) for i in range(width)]


def _finish(bld, digits, family, width, guard=None):
    for i, (n, p) in enumerate(digits):
        bld.output(f"s{i}_n", n)
        bld.output(f"s{i}_p", p)
    if guard is not None:
        bld.output("guard_n", guard[0])
        bld.output("guard_p", guard[1])
    net = bld.net
    net.meta.update(family=family, width=width, out_width=len(digits), steps=STEPS[family])
    return AdderNetlist(net, family, width, len(digits), STEPS[family])


def build_step4_stage1(width: int, lowered: bool = True) -> AdderNetlist:
    """The SD + binary subadder alone: inputs ``a{i}_n/p`` and bits ``y{i}``."""
    if width < 1:
        raise ValueError("width must be >= 1")
    cell = _cells(lowered)(step4_cell())
    bld = NetlistBuilder()
    x = _operand(bld, "a", width)
    y = [bld.input(f"y{i}") for i in range(width)]
    return _finish(bld, _subadder(bld, cell, x, y), STAGE1, width)


def build_step4_adder(width: int, lowered: bool = True) -> AdderNetlist:
    if width < 1:
        raise ValueError("width must be >= 1")
    cell = _cells(lowered)(step4_cell())
    bld = NetlistBuilder()
    a = _operand(bld, "a", width)
    b = _operand(bld, "b", width)
    first = _subadder(bld, cell, a, [p for _, p in b])
    # subtract the negative part: -((-first) + b_n)
    b_neg = [n for n, _ in b] + [bld.const(0)]
    second = _swap(_subadder(bld, cell, _swap(first), b_neg))
    return _finish(bld, second, STEP4, width)


def build_step3_adder(width: int, lowered: bool = True) -> AdderNetlist:
    if width < 1:
        raise ValueError("width must be >= 1")
    cell = _cells(lowered)(step3_cell())
    bld = NetlistBuilder()
    a = _operand(bld, "a", width)
    b = _operand(bld, "b", width)
    zero = bld.const(0)

    t, zp, zn = [zero], [], []
    for i in range(width):
        env = {"a_n": a[i][0], "a_p": a[i][1], "b_n": b[i][0], "b_p": b[i][1]}
        t.append(bld.emit(cell["step1"]["t_next"], env))
        zp.append(bld.emit(cell["step1"]["z_p"], env))
        zn.append(bld.emit(cell["step1"]["z_n"], env))

    tq, zq = [zero], []
    for i in range(width + 1):
        env = {"t": t[i], "z_p": zp[i] if i < width else zero, "z_n": zn[i] if i < width else zero}
        tq.append(bld.emit(cell["step2"]["tq_next"], env))
        zq.append(bld.emit(cell["step2"]["zq"], env))

    digits = []
    for i in range(width + 2):
        env = {"tq": tq[i], "zq": zq[i] if i <= width else zero}
        digits.append((bld.emit(cell["step3"]["s_n"], env), bld.emit(cell["step3"]["s_p"], env)))
    return _finish(bld, digits[: width + 1], STEP3, width, guard=digits[width + 1])


def build_adder(family: str, width: int, lowered: bool = True) -> AdderNetlist:
    if family == STEP3:
        return build_step3_adder(width, lowered)
    if family == STEP4:
        return build_step4_adder(width, lowered)
    raise ValueError(f"unknown adder family {family!r}")


def depth_metrics(adder: AdderNetlist) -> dict:
    return {
        "block_depth": adder.steps,
        "gate_levels": adder.netlist.depth(),
        "gate_count": adder.netlist.gate_count(),
    }


def step3_trace(a_digits, b_digits) -> dict:
    """Intermediate vectors of the three-step adder, lsb first.

    ``t`` and ``tq`` are already shifted one position left; ``z`` is the
    step-1 vector in {-2, -1, 0} and ``zq`` the step-2 vector in {0, -1}.
    """
    a, b = list(a_digits), list(b_digits)
    if len(a) != len(b):
        raise WidthMismatch(f"operand widths {len(a)} and {len(b)}")
    cell = step3_cell()
    w = len(a)

    def ev(e, env):
        return int(ex.evaluate(e, env))

    t, zp, zn = [0], [], []
    for x, y in zip(a, b):
        env = {"a_n": x < 0, "a_p": x > 0, "b_n": y < 0, "b_p": y > 0}
        t.append(ev(cell["step1"]["t_next"], env))
        zp.append(ev(cell["step1"]["z_p"], env))
        zn.append(ev(cell["step1"]["z_n"], env))
    zp.append(0)
    zn.append(0)
    tq, zq = [0], []
    for i in range(w + 1):
        env = {"t": t[i], "z_p": zp[i], "z_n": zn[i]}
        tq.append(ev(cell["step2"]["tq_next"], env))
        zq.append(ev(cell["step2"]["zq"], env))
    zq.append(0)
    s = []
    for i in range(w + 2):
        env = {"tq": tq[i], "zq": zq[i]}
        s.append(ev(cell["step3"]["s_p"], env) - ev(cell["step3"]["s_n"], env))
    return {
        "t": t,
        "z": [-2 * p - n for p, n in zip(zp, zn)],
        "tq": tq,
        "zq": [-v for v in zq],
        "s": s,
    }
