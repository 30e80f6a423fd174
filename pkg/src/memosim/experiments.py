"""Evaluation protocols: cut-off search, static and dynamic runs, ED products.

A cut-off frequency is the highest clock frequency at which every pair of a
validation set adds correctly. It is located on a log grid (10 points per
decade from 1 kHz to 10 GHz by default) and refined by geometric bisection
between the last passing and the first failing grid point.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .circuit import ClockConfig, MeMOSCircuit, Mode, build_memos_circuit, run_stream_digits
from .devices import KnowmParams, ModelKind, ParamSet, TeamParams, VteamParams
from .errors import IoFailure, NoPassingFrequency, NonMonotoneSweep, ParseError, WidthMismatch
from .logic.adders import FAMILIES, build_adder
from .sdarith import random_digit_matrix

log = logging.getLogger(__name__)

STATIC_VOLTAGE = 1.8
DYNAMIC_VOLTAGE = {ModelKind.TEAM: 6.0, ModelKind.VTEAM: 4.0, ModelKind.KNOWM: 1.8,
                   ModelKind.KNOWM_STOCHASTIC: 1.8}
DYNAMIC_WIDTHS = (8, 16, 32, 64)
STATIC_WIDTH = 40
SEARCH_PAIRS = 100
REPORT_PAIRS = 1000
BISECTION_PRECISION = 1.05
CHUNK = 10


def default_grid(f_min: float = 1e3, f_max: float = 1e10, per_decade: int = 10) -> np.ndarray:
    lo, hi = math.log10(f_min), math.log10(f_max)
    n = int(round((hi - lo) * per_decade))
    return 10.0 ** (lo + np.arange(n + 1) / per_decade)


def preset_voltage(model: ModelKind, mode: Mode) -> float:
    return STATIC_VOLTAGE if Mode(mode) is Mode.STATIC else DYNAMIC_VOLTAGE[model]


def is_extension(model: ModelKind, mode: Mode) -> bool:
    """Knowm devices were only characterized in static operation."""
    return model in (ModelKind.KNOWM, ModelKind.KNOWM_STOCHASTIC) and Mode(mode) is Mode.DYNAMIC


@dataclass(frozen=True)
class SweepSpec:
    family: str
    model: ModelKind
    mode: Mode = Mode.STATIC
    grid: tuple = tuple(default_grid())
    v_drive: float | None = None
    width: int = 8
    n_pairs: int = SEARCH_PAIRS
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        object.__setattr__(self, "mode", Mode(self.mode))
        grid = tuple(float(f) for f in self.grid)
        if list(grid) != sorted(grid):
            raise ValueError("frequency grid must be ascending")
        object.__setattr__(self, "grid", grid)
        if self.v_drive is None:
            object.__setattr__(self, "v_drive", preset_voltage(self.model, self.mode))

    def clock(self, f: float) -> ClockConfig:
        return ClockConfig(f, vdd=self.v_drive, v_drive=self.v_drive, mode=self.mode)

    def validation_set(self) -> np.ndarray:
        return random_digit_matrix(self.width, self.n_pairs, self.seed)


@dataclass
class SweepResult:
    spec: SweepSpec
    f_max: float
    grid_pass: tuple
    bisection: list = field(default_factory=list)
    capped: bool = False


_CIRCUITS = {}


def circuit_for(family: str, width: int, model: ModelKind, params: ParamSet, seed: int = 0) -> MeMOSCircuit:
    """Fresh (reset) circuit; built circuits are cached and copied."""
    key = (family, width, model, params.hash, seed)
    if key not in _CIRCUITS:
        _CIRCUITS[key] = build_memos_circuit(build_adder(family, width), model, params.for_model(model), seed=seed)
    c = _CIRCUITS[key].copy()
    c.reset()
    return c


def stream_passes(c: MeMOSCircuit, pairs: np.ndarray, clk: ClockConfig) -> bool:
    """Stream ``pairs`` in order, stopping at the first chunk with a wrong sum."""
    for start in range(0, len(pairs), CHUNK):
        chunk = pairs[start:start + CHUNK]
        if not run_stream_digits(c, chunk[:, 0], chunk[:, 1], clk).all_correct:
            return False
    return True


def _passes_at(spec: SweepSpec, params: ParamSet, pairs: np.ndarray, f: float) -> bool:
    c = circuit_for(spec.family, spec.width, spec.model, params, spec.seed)
    return stream_passes(c, pairs, spec.clock(f))


def sweep(spec: SweepSpec, params: ParamSet, jobs: int = 1) -> SweepResult:
    grid = spec.grid
    if math.log10(grid[-1] / grid[0]) < 4 - 1e-9:
        raise ValueError("frequency grid must span at least four decades")
    pairs = spec.validation_set()
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            ok = list(ex.map(lambda f: _passes_at(spec, params, pairs, f), grid))
    else:
        ok = [_passes_at(spec, params, pairs, f) for f in grid]
    if not ok[0]:
        raise NoPassingFrequency(
            f"{spec.family}/{spec.model.value}/{spec.mode.value} fails already at {grid[0]:g} Hz")
    last = max(k for k, o in enumerate(ok) if o)
    bad = [grid[k] for k in range(last) if not ok[k]]
    if bad:
        raise NonMonotoneSweep(
            f"{spec.family}/{spec.model.value}/{spec.mode.value}: passes at {grid[last]:g} Hz "
            f"but fails at {', '.join(f'{f:g}' for f in bad)} Hz")
    if last == len(grid) - 1:
        log.warning("no failing grid point up to %g Hz; cut-off is capped", grid[-1])
        return SweepResult(spec, grid[-1], tuple(ok), capped=True)
    lo, hi = grid[last], grid[last + 1]
    steps = []
    while hi / lo > BISECTION_PRECISION:
        mid = math.sqrt(lo * hi)
        passed = _passes_at(spec, params, pairs, mid)
        steps.append((mid, passed))
        if passed:
            lo = mid
        else:
            hi = mid
    return SweepResult(spec, lo, tuple(ok), steps)


def find_cutoff_frequency(spec: SweepSpec, params: ParamSet, jobs: int = 1) -> float:
    return sweep(spec, params, jobs).f_max


# -- reports -------------------------------------------------------------------

CSV_COLUMNS = ("family", "model", "mode", "f_max_hz", "latency_s", "energy_j", "ed_js", "width", "seed",
               "param_hash")


@dataclass(frozen=True)
class EvalReport:
    family: str
    model: str
    mode: str
    f_max_hz: float
    latency_s: float
    energy_j: float
    ed_js: float
    width: int
    seed: int
    param_hash: str
    v_drive: float = float("nan")
    n_pairs: int = 0
    errors: int = 0
    note: str = ""

    def csv_row(self) -> list:
        return [self.family, self.model, self.mode, f"{self.f_max_hz:.6e}", f"{self.latency_s:.6e}",
                f"{self.energy_j:.6e}", f"{self.ed_js:.6e}", str(self.width), str(self.seed), self.param_hash]

    @classmethod
    def from_csv_row(cls, row: dict) -> "EvalReport":
        return cls(row["family"], row["model"], row["mode"], float(row["f_max_hz"]), float(row["latency_s"]),
                   float(row["energy_j"]), float(row["ed_js"]), int(row["width"]), int(row["seed"]),
                   row["param_hash"])

    def sort_key(self):
        return (self.family, self.model, self.mode, self.width, self.seed, self.param_hash)


def ed_product(latency: float, energy: float) -> float:
    """Energy-delay product in J*s."""
    if latency < 0 or energy < 0:
        raise ValueError("latency and energy must be non-negative")
    return latency * energy


def to_ns_pj(ed_js: float) -> float:
    return ed_js * 1e21


def _report(family, model, mode, f_max, energy, width, seed, params, v_drive, n_pairs, errors, note=""):
    steps = build_adder(family, 1).steps
    latency = steps / f_max
    return EvalReport(family, model.value, Mode(mode).value, f_max, latency, energy, ed_product(latency, energy),
                      width, seed, params.hash, v_drive, n_pairs, errors, note)


def measure(family: str, model: ModelKind, params: ParamSet, mode: Mode, f: float, width: int,
            n_pairs: int, seed: int, v_drive: float):
    """Mean energy per addition and error count for a fresh circuit at ``f``."""
    c = circuit_for(family, width, model, params, seed)
    pairs = random_digit_matrix(width, n_pairs, seed)
    clk = ClockConfig(f, vdd=v_drive, v_drive=v_drive, mode=mode)
    res = run_stream_digits(c, pairs[:, 0], pairs[:, 1], clk)
    return res.mean_energy, res.error_count


def run_static_eval(family: str, model: ModelKind, params: ParamSet, vdd: float = STATIC_VOLTAGE,
                    width: int = STATIC_WIDTH, seed: int = 0, n_pairs: int = REPORT_PAIRS,
                    search_pairs: int = SEARCH_PAIRS, grid=None, jobs: int = 1) -> EvalReport:
    """Post-reset characterization: cut-off, latency and mean energy at ``width`` digits."""
    spec = SweepSpec(family, model, Mode.STATIC, tuple(default_grid() if grid is None else grid), vdd, width,
                     search_pairs, seed)
    res = sweep(spec, params, jobs)
    energy, errors = measure(family, model, params, Mode.STATIC, res.f_max, width, n_pairs, seed, vdd)
    note = "capped" if res.capped else ""
    return _report(family, model, Mode.STATIC, res.f_max, energy, width, seed, params, vdd, n_pairs, errors, note)


def run_dynamic_eval(family: str, model: ModelKind, params: ParamSet, v_drive: float | None = None,
                     widths=DYNAMIC_WIDTHS, seed: int = 0, n_pairs: int = REPORT_PAIRS,
                     search_pairs: int = SEARCH_PAIRS, grid=None, jobs: int = 1) -> list:
    """Streaming characterization over several widths, one report per width.

    All widths are measured at the common cut-off, the lowest per-width
    cut-off, so the per-width energies are directly comparable.
    """
    v_drive = DYNAMIC_VOLTAGE[model] if v_drive is None else v_drive
    grid = tuple(default_grid() if grid is None else grid)
    cutoffs = [sweep(SweepSpec(family, model, Mode.DYNAMIC, grid, v_drive, w, search_pairs, seed), params, jobs)
               for w in widths]
    f_max = min(r.f_max for r in cutoffs)
    notes = ["extension"] if is_extension(model, Mode.DYNAMIC) else []
    if any(r.capped for r in cutoffs):
        notes.append("capped")
    reports = []
    for w in widths:
        energy, errors = measure(family, model, params, Mode.DYNAMIC, f_max, w, n_pairs, seed, v_drive)
        reports.append(_report(family, model, Mode.DYNAMIC, f_max, energy, w, seed, params, v_drive, n_pairs,
                               errors, ",".join(notes)))
    return reports


def energy_ratios(reports: list) -> list:
    """Energy ratio between consecutive widths of a width-sorted report list."""
    rs = sorted(reports, key=lambda r: r.width)
    return [b.energy_j / a.energy_j for a, b in zip(rs, rs[1:])]


def reports_to_csv(reports: list) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in reports:
        wr.writerow(r.csv_row())
    return buf.getvalue()


def reports_to_text(reports: list) -> str:
    head = ("family", "model", "mode", "width", "f_max MHz", "latency ns", "energy pJ", "ED ns*pJ", "seed",
            "params", "note")
    rows = [head]
    for r in reports:
        rows.append((r.family, r.model, r.mode, str(r.width), f"{r.f_max_hz / 1e6:.4g}", f"{r.latency_s * 1e9:.4g}",
                     f"{r.energy_j * 1e12:.4g}", f"{to_ns_pj(r.ed_js):.4g}", str(r.seed), r.param_hash, r.note))
    widths = [max(len(row[k]) for row in rows) for k in range(len(head))]
    lines = ["  ".join(cell.ljust(wd) for cell, wd in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * wd for wd in widths))
    return "\n".join(lines) + "\n"


def emit_report(reports: list, csv_path=None, text_path=None) -> None:
    """Write the machine (CSV) and human (aligned text) renderings."""
    try:
        if csv_path is not None:
            Path(csv_path).write_text(reports_to_csv(reports))
        if text_path is not None:
            Path(text_path).write_text(reports_to_text(reports))
    except OSError as exc:
        raise IoFailure(f"cannot write report: {exc}") from exc


def read_reports_csv(path) -> list:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(rd.fieldnames or ())
        if missing:
            raise ParseError(f"{path}: missing columns {sorted(missing)}")
        return [EvalReport.from_csv_row(row) for row in rd]


def merge_reports(*groups) -> list:
    """Union of report lists (exact duplicate rows dropped), stably sorted."""
    seen, out = set(), []
    for group in groups:
        for r in group:
            key = tuple(r.csv_row())
            if key not in seen:
                seen.add(key)
                out.append(r)
    return sorted(out, key=EvalReport.sort_key)


# -- baseline comparison -------------------------------------------------------

@dataclass(frozen=True)
class Baseline:
    name: str
    latency_s: float
    energy_j: float
    width: int


CMOS_MEMRISTOR_REGISTERS = Baseline("CMOS ternary adder with memristor registers", 3e-9, 10e-12, 40)


@dataclass(frozen=True)
class Comparison:
    latency_ratio: float
    energy_ratio: float
    ed_ratio: float
    verdict: str

    @property
    def latency_improvement(self) -> float:
        return 1.0 - self.latency_ratio

    @property
    def ed_degradation(self) -> float:
        return self.ed_ratio - 1.0

    def table(self, name: str = "baseline") -> str:
        return (f"latency ratio  {self.latency_ratio:.3g}  ({self.latency_improvement:+.0%} faster)\n"
                f"energy ratio   {self.energy_ratio:.3g}\n"
                f"ED ratio       {self.ed_ratio:.3g}  ({self.ed_degradation:+.0%} vs {name})\n"
                f"verdict        {self.verdict}\n")


def compare_baseline(r: EvalReport, b: Baseline) -> Comparison:
    if r.width != b.width:
        raise WidthMismatch(f"report width {r.width} vs baseline width {b.width}")
    lat = r.latency_s / b.latency_s
    en = r.energy_j / b.energy_j
    ed = r.ed_js / ed_product(b.latency_s, b.energy_j)
    if ed > 1:
        verdict = f"prefer {b.name}"
    elif ed < 1:
        verdict = "prefer MeMOS"
    else:
        verdict = "break-even"
    return Comparison(lat, en, ed, verdict)


# -- calibration ---------------------------------------------------------------

def scale_time(params, factor: float):
    """Speed a model up by ``factor``: every trajectory is replayed ``factor`` times faster.

    TEAM/VTEAM rates are proportional to ``k_on``/``k_off`` and Knowm rates to
    ``1/t_c``, so a cut-off frequency scales exactly with ``factor`` when the
    number of Euler steps per window is fixed.
    """
    if isinstance(params, (TeamParams, VteamParams)):
        return replace(params, k_on=params.k_on * factor, k_off=params.k_off * factor)
    if isinstance(params, KnowmParams):
        return replace(params, t_c=params.t_c / factor)
    raise TypeError(f"cannot scale {type(params).__name__}")


def calibrate(model: ModelKind, params: ParamSet, target_hz: float, family: str = "step3",
              mode: Mode = Mode.STATIC, width: int = 8, seed: int = 0):
    """Rescale one model so its cut-off lands on ``target_hz``; returns (ParamSet, achieved Hz)."""
    f0 = find_cutoff_frequency(SweepSpec(family, model, mode, width=width, seed=seed), params)
    section = model.section
    scaled = params.replace(**{section: scale_time(params.for_model(model), target_hz / f0)})
    f1 = find_cutoff_frequency(SweepSpec(family, model, mode, width=width, seed=seed), scaled)
    return scaled, f1


# -- experiment spec files -----------------------------------------------------

_SPEC_KEYS = {
    "family": str, "model": str, "mode": str, "vdd": float, "v_drive": float, "width": int, "widths": str,
    "pairs": int, "search_pairs": int, "seed": int, "f_min": float, "f_max": float, "points_per_decade": int,
    "frequency": float, "output": str,
}


def parse_experiment_spec(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Errors carry line numbers."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key = value", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _SPEC_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno)
        try:
            out[key] = _SPEC_KEYS[key](val)
        except ValueError:
            raise ParseError(f"bad value {val!r} for {key}", lineno) from None
        if key == "widths":
            try:
                out[key] = tuple(int(w) for w in val.split(","))
            except ValueError:
                raise ParseError(f"widths must be comma-separated integers, got {val!r}", lineno) from None
        if key == "family" and val not in FAMILIES:
            raise ParseError(f"family must be one of {FAMILIES}", lineno)
        if key == "mode" and val not in ("static", "dynamic"):
            raise ParseError("mode must be static or dynamic", lineno)
        if key == "model":
            try:
                ModelKind.parse(val)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    for req in ("family", "model"):
        if req not in out:
            raise ParseError(f"missing required key {req!r}")
    return out


def spec_grid(spec: dict) -> tuple:
    return tuple(default_grid(spec.get("f_min", 1e3), spec.get("f_max", 1e10), spec.get("points_per_decade", 10)))
