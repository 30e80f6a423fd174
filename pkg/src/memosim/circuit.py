"""MeMOS circuits: ratioed two-memristor AND/OR blocks with restoring inverters.

A lowered netlist maps one-to-one onto hardware: every NAND becomes an AND
block followed by an inverting restoring element, every NOR an OR block with
an inverting restoring element, and every NOT a restoring element alone.

Each block's two memristors connect input 1 and input 2 to a shared output
node; with an unloaded node its voltage is the conductance-weighted mean of
the inputs. The blocks differ only in device orientation. In an AND block a
device passing current from a high input toward the node is driven OFF, so the
node is pulled toward the low input; an OR block uses the reverse orientation.

Timing is level-synchronous: a block sees its inputs held for one settle
window of ``1/f``; the restoring element then digitizes the final node voltage
with 0.3/0.7 * Vdd thresholds. Inside the band the previous output is held and
the run is flagged metastable.
"""

from __future__ import annotations

import copy
import csv
import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernel
from .devices import MemristorDevice, ModelKind
from .errors import NonFiniteState, UnloweredGate, WidthMismatch
from .logic.adders import AdderNetlist
from .logic.netlist import CONST, INPUT, NAND, NOR, NOT, Netlist
from .sdarith import SDNumber, digits_value

STEPS_PER_WINDOW = 200


class Mode(str, enum.Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class BlockKind(str, enum.Enum):
    AND = "AND"
    OR = "OR"


@dataclass(frozen=True)
class ClockConfig:
    """Clock and supply settings.

    ``v_drive`` is the logic-1 level of primary inputs and defaults to ``vdd``;
    restoring elements swing between 0 and ``vdd``.
    """

    frequency: float
    vdd: float = 1.8
    v_drive: float | None = None
    mode: Mode = Mode.STATIC
    steps_per_window: int = STEPS_PER_WINDOW
    inverter_energy: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if not self.vdd > 0:
            raise ValueError("vdd must be positive")
        if self.steps_per_window < STEPS_PER_WINDOW:
            raise ValueError(f"need at least {STEPS_PER_WINDOW} Euler steps per window")
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.v_drive is None:
            object.__setattr__(self, "v_drive", self.vdd)

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    @property
    def dt(self) -> float:
        return self.period / self.steps_per_window

    def with_frequency(self, f: float) -> "ClockConfig":
        return ClockConfig(f, self.vdd, self.v_drive, self.mode, self.steps_per_window, self.inverter_energy)


def divider_voltage(g1: float, v1: float, g2: float, v2: float) -> float:
    if g1 <= 0 or g2 <= 0:
        raise ValueError("conductances must be positive")
    # offset form: exact when v1 == v2
    return v1 + (v2 - v1) * (g2 / (g1 + g2))


def restoring_element(v_in: float, vdd: float, invert: bool, prev_out: float) -> tuple:
    """Return ``(output volts, metastable)``."""
    if vdd <= 0:
        raise ValueError("vdd must be positive")
    v, meta = _kernel.restore(float(v_in), float(vdd), bool(invert), float(prev_out))
    return float(v), bool(meta)


@dataclass
class MeMOSBlock:
    kind: BlockKind
    devices: tuple
    invert_output: bool = True

    def __post_init__(self):
        if len(self.devices) != 2:
            raise ValueError("a block has exactly two memristors")
        self.kind = BlockKind(self.kind)

    @property
    def polarity(self) -> float:
        """Sign applied to the input-to-node terminal voltage of both devices."""
        return -1.0 if self.kind is BlockKind.AND else 1.0

    def reset(self):
        for d in self.devices:
            d.reset()


@dataclass
class BlockTrace:
    node_v: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    energy_cum: np.ndarray
    energy: float
    metastable: bool


def simulate_block(b: MeMOSBlock, in1: float, in2: float, settle: float, dt: float, vdd: float,
                   prev_out: float = 0.0) -> tuple:
    """Integrate one block over ``settle`` seconds; returns ``(BlockTrace, output volts)``.

    Node and state samples are taken at the start of each Euler step; the
    cumulative energy sample includes that step.
    """
    if settle < dt:
        raise ValueError("settle window shorter than one step")
    n = int(round(settle / dt))
    d1, d2 = b.devices
    pol = b.polarity
    node = np.empty(n)
    w1 = np.empty(n)
    w2 = np.empty(n)
    cum = np.empty(n)
    energy = 0.0
    for s in range(n):
        g1, g2 = 1.0 / d1.resistance, 1.0 / d2.resistance
        vn = in1 + (in2 - in1) * (g2 / (g1 + g2))
        node[s], w1[s], w2[s] = vn, d1.w, d2.w
        v1, v2 = in1 - vn, in2 - vn
        # energy is v*i*dt, unchanged by the polarity flip
        r1 = d1.euler_step(pol * v1, dt)
        r2 = d2.euler_step(pol * v2, dt)
        energy += r1.energy + r2.energy
        cum[s] = energy
    g1, g2 = 1.0 / d1.resistance, 1.0 / d2.resistance
    v_final = in1 + (in2 - in1) * (g2 / (g1 + g2))
    out, meta = restoring_element(v_final, vdd, b.invert_output, prev_out)
    return BlockTrace(node, w1, w2, cum, energy, meta), out


@dataclass
class EvalResult:
    outputs: SDNumber | None
    energy: float
    correct: bool
    latency: float
    metastable: bool = False


@dataclass
class StreamResult:
    results: list
    digits: np.ndarray = field(repr=False)
    energy: np.ndarray = field(repr=False)
    correct: np.ndarray = field(repr=False)

    @property
    def mean_energy(self) -> float:
        return float(self.energy.mean()) if len(self.energy) else 0.0

    @property
    def all_correct(self) -> bool:
        return bool(self.correct.all())

    @property
    def error_count(self) -> int:
        return int((~self.correct).sum())


class MeMOSCircuit:
    """Hardware instance of a lowered netlist with per-device state.

    Parameters
    ----------
    netlist : AdderNetlist or Netlist
        Must contain only INPUT, CONST, NOT, NAND and NOR gates.
    model : ModelKind
    params
        Parameters matching ``model``.
    seed : int
        Seed of the per-device random streams (stochastic Knowm only).
    """

    def __init__(self, netlist, model: ModelKind, params, seed: int = 0):
        self.adder = netlist if isinstance(netlist, AdderNetlist) else None
        net: Netlist = netlist.netlist if self.adder else netlist
        bad = sorted({g.kind for g in net.gates} - {INPUT, CONST, NOT, NAND, NOR})
        if bad:
            raise UnloweredGate(f"netlist still contains {', '.join(bad)} gates")
        self.netlist = net
        self.model = model
        self.params = params
        self.seed = seed
        self.levels = net.levels
        self.input_names = list(net.inputs)
        self.output_names = list(net.outputs)
        n = len(net.gates)
        code = {INPUT: _kernel.K_INPUT, CONST: _kernel.K_CONST, NOT: _kernel.K_NOT,
                NAND: _kernel.K_NAND, NOR: _kernel.K_NOR}
        col = {name: j for j, name in enumerate(self.input_names)}
        self._kind = np.array([code[g.kind] for g in net.gates], dtype=np.int8)
        self._fan0 = np.array([g.fanin[0] if g.fanin else -1 for g in net.gates], dtype=np.int64)
        self._fan1 = np.array([g.fanin[1] if len(g.fanin) > 1 else -1 for g in net.gates], dtype=np.int64)
        self._col = np.array([col[g.label] if g.kind == INPUT else (int(g.label) if g.kind == CONST else 0)
                              for g in net.gates], dtype=np.int64)
        self._block = np.full(n, -1, dtype=np.int64)
        self._pol = np.zeros(n)
        self.blocks = []
        for g in net.gates:
            if g.kind in (NAND, NOR):
                b = len(self.blocks)
                kind = BlockKind.AND if g.kind == NAND else BlockKind.OR
                devs = tuple(MemristorDevice(model, params, seed=seed, device_id=2 * b + k) for k in range(2))
                self.blocks.append(MeMOSBlock(kind, devs, invert_output=True))
                self._block[g.id] = b
                self._pol[g.id] = self.blocks[-1].polarity
        self._out = np.array([net.outputs[name] for name in self.output_names], dtype=np.int64)
        self._packed = params.packed()
        self.w = np.full((max(len(self.blocks), 1), 2), 0.5)
        self.prev = np.zeros(n)

    # -- structure --------------------------------------------------------

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    @property
    def inverter_count(self) -> int:
        """Restoring elements: one per block plus one per NOT gate."""
        return self.block_count + int((self._kind == _kernel.K_NOT).sum())

    @property
    def level_count(self) -> int:
        return max(self.levels, default=0)

    def structure_report(self) -> str:
        and_blocks = sum(b.kind is BlockKind.AND for b in self.blocks)
        lines = [
            f"model: {self.model.value}",
            f"gate levels: {self.level_count}",
            f"AND blocks (from NAND): {and_blocks}",
            f"OR blocks (from NOR): {self.block_count - and_blocks}",
            f"memristors: {2 * self.block_count}",
            f"standalone inverters (from NOT): {self.inverter_count - self.block_count}",
            f"restoring elements total: {self.inverter_count}",
            "restoring elements after blocks invert (NAND = AND block + inverter, NOR = OR block + inverter)",
        ]
        if self.adder:
            lines.insert(0, f"adder: {self.adder.family} width {self.adder.width} -> {self.adder.out_width} digits,"
                            f" {self.adder.steps} steps")
        return "\n".join(lines) + "\n"

    # -- state ------------------------------------------------------------

    def reset(self):
        self.w[:] = 0.5
        self.prev[:] = 0.0
        for b in self.blocks:
            b.reset()

    def copy(self) -> "MeMOSCircuit":
        return copy.deepcopy(self)

    def _sync_devices_from_array(self):
        for b, blk in enumerate(self.blocks):
            blk.devices[0].w, blk.devices[1].w = float(self.w[b, 0]), float(self.w[b, 1])

    def _sync_array_from_devices(self):
        for b, blk in enumerate(self.blocks):
            self.w[b, 0], self.w[b, 1] = blk.devices[0].w, blk.devices[1].w

    # -- simulation -------------------------------------------------------

    def simulate_bits(self, bits: np.ndarray, clk: ClockConfig, backend: str = "auto", trace: list | None = None):
        """Run input vectors ``bits[k, j]`` (column order = ``input_names``) through the circuit.

        Returns ``(output bits, energy per vector, metastable per vector)``. With
        ``trace`` given, per-step block samples are appended to it as
        ``(time_s, block_id, node_v, w1, w2, energy_J)`` rows; tracing and the
        stochastic Knowm model use the pure-Python path.
        """
        bits = np.ascontiguousarray(bits, dtype=np.uint8).reshape(-1, len(self.input_names))
        if backend == "auto":
            backend = "python" if (trace is not None or self.model is ModelKind.KNOWM_STOCHASTIC) else "kernel"
        if backend == "kernel":
            if self.model is ModelKind.KNOWM_STOCHASTIC:
                raise ValueError("the compiled kernel only covers deterministic models")
            out, energy, meta, status = _kernel.run_stream(
                self._kind, self._fan0, self._fan1, self._block, self._pol, self._col, self._out, bits,
                clk.mode is Mode.STATIC, clk.steps_per_window, clk.dt, float(clk.v_drive), float(clk.vdd),
                self._packed, self.w, self.prev, float(clk.inverter_energy))
            if status != _kernel.OK:
                raise NonFiniteState(f"device state diverged at f={clk.frequency:g} Hz")
            self._sync_devices_from_array()
            return out, energy, meta
        if backend != "python":
            raise ValueError(f"unknown backend {backend!r}")
        return self._simulate_python(bits, clk, trace)

    def _simulate_python(self, bits, clk, trace):
        self._sync_devices_from_array()
        vdd, vdrive, period, dt = float(clk.vdd), float(clk.v_drive), clk.period, clk.dt
        n_levels = max(self.level_count, 1)
        out = np.zeros((bits.shape[0], len(self._out)), dtype=np.uint8)
        energy = np.zeros(bits.shape[0])
        meta = np.zeros(bits.shape[0], dtype=bool)
        vol = np.zeros(len(self._kind))
        for k in range(bits.shape[0]):
            if clk.mode is Mode.STATIC:
                self.reset()
            for g, kg in enumerate(self._kind):
                if kg == _kernel.K_INPUT:
                    vol[g] = vdrive if bits[k, self._col[g]] else 0.0
                    continue
                if kg == _kernel.K_CONST:
                    vol[g] = vdd if self._col[g] else 0.0
                    continue
                if kg == _kernel.K_NOT:
                    v, m = restoring_element(vol[self._fan0[g]], vdd, True, self.prev[g])
                else:
                    b = int(self._block[g])
                    bt, v = simulate_block(self.blocks[b], vol[self._fan0[g]], vol[self._fan1[g]],
                                           period, dt, vdd, self.prev[g])
                    m = bt.metastable
                    energy[k] += bt.energy
                    if trace is not None:
                        t0 = (k * n_levels + self.levels[g] - 1) * period
                        trace.extend((t0 + s * dt, b, bt.node_v[s], bt.w1[s], bt.w2[s], bt.energy_cum[s])
                                     for s in range(len(bt.node_v)))
                if v != self.prev[g]:
                    energy[k] += clk.inverter_energy
                vol[g] = v
                self.prev[g] = v
                meta[k] |= m
            for j, gid in enumerate(self._out):
                out[k, j] = vol[gid] > 0.0
        self._sync_array_from_devices()
        return out, energy, meta

    # -- adders -----------------------------------------------------------

    def _require_adder(self) -> AdderNetlist:
        if self.adder is None:
            raise TypeError("operand evaluation needs a circuit built from an AdderNetlist")
        return self.adder

    def operand_bits(self, a_digits: np.ndarray, b_digits: np.ndarray) -> np.ndarray:
        env = self._require_adder().input_assignment(a_digits, b_digits)
        return np.stack([np.asarray(env[name], dtype=np.uint8) for name in self.input_names], axis=1)

    def decode_outputs(self, out_bits: np.ndarray) -> tuple:
        """Digits ``(batch, out_width)`` and a validity mask (no (1, 1) codes, zero guard)."""
        adder = self._require_adder()
        idx = {name: j for j, name in enumerate(self.output_names)}
        n = np.stack([out_bits[:, idx[f"s{i}_n"]] for i in range(adder.out_width)], axis=1).astype(np.int8)
        p = np.stack([out_bits[:, idx[f"s{i}_p"]] for i in range(adder.out_width)], axis=1).astype(np.int8)
        valid = ~np.any((n == 1) & (p == 1), axis=1)
        if "guard_n" in idx:
            valid &= (out_bits[:, idx["guard_n"]] == 0) & (out_bits[:, idx["guard_p"]] == 0)
        return p - n, valid

    def latency(self, clk: ClockConfig) -> float:
        """Reported latency: adder steps times the clock period."""
        return self._require_adder().steps / clk.frequency


def build_memos_circuit(netlist, model: ModelKind, params, seed: int = 0) -> MeMOSCircuit:
    return MeMOSCircuit(netlist, model, params, seed=seed)


def _check_width(c: MeMOSCircuit, width: int):
    if width != c._require_adder().width:
        raise WidthMismatch(f"circuit width {c.adder.width}, operands width {width}")


def run_stream_digits(c: MeMOSCircuit, a_digits: np.ndarray, b_digits: np.ndarray, clk: ClockConfig,
                      backend: str = "auto", trace: list | None = None) -> StreamResult:
    """Stream operand digit arrays ``(count, width)`` through the circuit in order."""
    a_digits = np.atleast_2d(a_digits)
    b_digits = np.atleast_2d(b_digits)
    _check_width(c, a_digits.shape[1])
    _check_width(c, b_digits.shape[1])
    bits = c.operand_bits(a_digits, b_digits)
    out, energy, meta = c.simulate_bits(bits, clk, backend=backend, trace=trace)
    digits, valid = c.decode_outputs(out)
    expected = digits_value(a_digits) + digits_value(b_digits)
    correct = valid & ~meta & (digits_value(digits) == expected).astype(bool)
    lat = c.latency(clk)
    results = [
        EvalResult(SDNumber(tuple(digits[k].tolist())) if valid[k] else None, float(energy[k]),
                   bool(correct[k]), lat, bool(meta[k]))
        for k in range(len(energy))
    ]
    return StreamResult(results, digits, energy, correct)


def run_stream(c: MeMOSCircuit, pairs: Sequence, clk: ClockConfig, backend: str = "auto",
               trace: list | None = None) -> StreamResult:
    """Evaluate ``(a, b)`` SDNumber pairs in order; Static mode resets before each pair."""
    a = np.array([p[0].digits for p in pairs], dtype=np.int8)
    b = np.array([p[1].digits for p in pairs], dtype=np.int8)
    return run_stream_digits(c, a, b, clk, backend=backend, trace=trace)


def evaluate_operands(c: MeMOSCircuit, a: SDNumber, b: SDNumber, clk: ClockConfig,
                      backend: str = "auto", trace: list | None = None) -> EvalResult:
    if a.width != b.width:
        raise WidthMismatch(f"operand widths {a.width} and {b.width} differ")
    return run_stream(c, [(a, b)], clk, backend=backend, trace=trace).results[0]


TRACE_COLUMNS = ("time_s", "block_id", "node_v", "w1", "w2", "energy_J")


def write_trace_csv(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRACE_COLUMNS)
        for r in rows:
            wr.writerow([f"{r[0]:.9e}", r[1], f"{r[2]:.9e}", f"{r[3]:.9e}", f"{r[4]:.9e}", f"{r[5]:.9e}"])
