"""``memosim`` command line.

Exit codes: 0 success, 1 usage or parse error, 2 verification failure,
3 simulation divergence.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import ClockConfig, Mode, build_memos_circuit, run_stream_digits, write_trace_csv
from .devices import ModelKind, load_params
from .errors import MemosError, NonFiniteState
from .experiments import (
    DYNAMIC_WIDTHS, REPORT_PAIRS, SEARCH_PAIRS, STATIC_WIDTH, SweepSpec, emit_report, energy_ratios,
    merge_reports, parse_experiment_spec, preset_voltage, read_reports_csv, reports_to_text, run_dynamic_eval,
    run_static_eval, spec_grid, sweep,
)
from .logic.adders import FAMILIES, build_adder
from .sdarith import SDNumber, oracle_add, random_digit_matrix

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_DIVERGED = 0, 1, 2, 3
MAX_EXHAUSTIVE_WIDTH = 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _banner(seed, params):
    print(f"seed={seed} params={params.hash} ({params.source})")


def _digits_str(d) -> str:
    return str(SDNumber(tuple(int(x) for x in d)))


def cmd_verify(args) -> int:
    adder = build_adder(args.family, args.width)
    w = args.width
    if args.exhaustive:
        if w > MAX_EXHAUSTIVE_WIDTH:
            raise UsageError(f"--exhaustive is limited to width <= {MAX_EXHAUSTIVE_WIDTH}")
        words = np.array(list(itertools.product((-1, 0, 1), repeat=w)), dtype=np.int8)
        a = np.repeat(words, len(words), axis=0)
        b = np.tile(words, (len(words), 1))
    else:
        pairs = random_digit_matrix(w, args.random, args.seed)
        a, b = pairs[:, 0], pairs[:, 1]
    _banner(args.seed, load_params(args.params))
    bad = 0
    for start in range(0, len(a), 4096):
        sa, sb = a[start:start + 4096], b[start:start + 4096]
        got = adder.add_digits(sa, sb)
        weights = np.array([1 << i for i in range(got.shape[1])], dtype=object)
        val = got.astype(object) @ weights
        ref = sa.astype(object) @ weights[:w] + sb.astype(object) @ weights[:w]
        for k in np.nonzero(val != ref)[0]:
            bad += 1
            if bad <= 20:
                print(f"MISMATCH a={_digits_str(sa[k])} b={_digits_str(sb[k])} "
                      f"got={_digits_str(got[k])} ({val[k]}) expected {ref[k]}")
    total = len(a)
    print(f"{args.family} width {w}: {total - bad}/{total} pairs correct")
    return EXIT_OK if bad == 0 else EXIT_MISMATCH


def cmd_netlist(args) -> int:
    if args.load:
        from .logic.netlist import Netlist

        net = Netlist.loads(Path(args.load).read_text())
        print(f"loaded {args.load}: {net.gate_count()} gates, {net.depth()} levels, "
              f"{len(net.inputs)} inputs, {len(net.outputs)} outputs")
        return EXIT_OK
    adder = build_adder(args.family, args.width, lowered=not args.raw)
    text = adder.dumps()
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}: {adder.netlist.gate_count()} gates, {adder.netlist.depth()} levels")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _model(text) -> ModelKind:
    try:
        return ModelKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_simulate(args) -> int:
    params = load_params(args.params)
    _banner(args.seed, params)
    a, b = SDNumber.parse(args.a), SDNumber.parse(args.b)
    if a.width != b.width:
        raise UsageError(f"operand widths differ: {a.width} vs {b.width}")
    mode = Mode.DYNAMIC if args.dynamic else Mode.STATIC
    vdd = args.vdd if args.vdd is not None else preset_voltage(args.model, mode)
    adder = build_adder(args.family, a.width)
    circ = build_memos_circuit(adder, args.model, params.for_model(args.model), seed=args.seed)
    clk = ClockConfig(args.freq, vdd=vdd, v_drive=vdd, mode=mode)
    trace = [] if args.trace else None
    res = run_stream_digits(circ, np.array([a.digits]), np.array([b.digits]), clk, trace=trace)
    if trace is not None:
        write_trace_csv(trace, args.trace)
    expected = oracle_add(a, b)
    digits = res.digits[0]
    energy = res.results[0].energy
    ok = bool(res.correct[0])
    shown = _digits_str(digits)
    value = SDNumber(tuple(int(x) for x in digits)).value
    print(f"{a} + {b} = {shown} (value {value}), expected {expected}")
    print(f"energy {energy * 1e12:.4g} pJ  latency {circ.latency(clk) * 1e9:.4g} ns  "
          f"f {args.freq / 1e6:.4g} MHz  vdd {vdd:g} V")
    if not ok:
        print("incorrect result: clock is likely above the cut-off frequency", file=sys.stderr)
        return EXIT_MISMATCH
    print("correct")
    return EXIT_OK


def _spec(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read spec file: {exc}") from None
    return parse_experiment_spec(text), text


def _outputs(spec, args, default_stem):
    stem = Path(spec.get("output", args.output or default_stem))
    return stem.with_suffix(".csv"), stem.with_suffix(".txt")


def cmd_sweep(args) -> int:
    spec, _ = _spec(args.spec)
    params = load_params(args.params)
    seed = spec.get("seed", args.seed)
    _banner(seed, params)
    model = ModelKind.parse(spec["model"])
    mode = Mode(spec.get("mode", "static"))
    vdd = spec.get("v_drive", spec.get("vdd"))
    width = spec.get("width", STATIC_WIDTH if mode is Mode.STATIC else 8)
    if mode is Mode.STATIC:
        reports = [run_static_eval(spec["family"], model, params, vdd if vdd is not None else 1.8, width, seed,
                                   spec.get("pairs", REPORT_PAIRS), spec.get("search_pairs", SEARCH_PAIRS),
                                   spec_grid(spec), args.jobs)]
    else:
        reports = run_dynamic_eval(spec["family"], model, params, vdd, (width,), seed,
                                   spec.get("pairs", REPORT_PAIRS), spec.get("search_pairs", SEARCH_PAIRS),
                                   spec_grid(spec), args.jobs)
    csv_path, txt_path = _outputs(spec, args, "sweep")
    emit_report(reports, csv_path, txt_path)
    r = reports[0]
    print(f"f_max={r.f_max_hz / 1e6:.6g} MHz latency={r.latency_s * 1e9:.4g} ns "
          f"energy={r.energy_j * 1e12:.4g} pJ {r.note}".rstrip())
    print(f"wrote {csv_path} {txt_path}")
    return EXIT_OK


def cmd_stream(args) -> int:
    spec, _ = _spec(args.spec)
    params = load_params(args.params)
    seed = spec.get("seed", args.seed)
    _banner(seed, params)
    model = ModelKind.parse(spec["model"])
    widths = spec.get("widths", (spec["width"],) if "width" in spec else DYNAMIC_WIDTHS)
    reports = run_dynamic_eval(spec["family"], model, params, spec.get("v_drive", spec.get("vdd")), widths, seed,
                               spec.get("pairs", REPORT_PAIRS), spec.get("search_pairs", SEARCH_PAIRS),
                               spec_grid(spec), args.jobs)
    csv_path, txt_path = _outputs(spec, args, "stream")
    emit_report(reports, csv_path, txt_path)
    ratios = ["-"] + [f"{q:.3f}" for q in energy_ratios(reports)]
    print(f"f_max={reports[0].f_max_hz / 1e6:.6g} MHz")
    print(f"{'width':>5}  {'energy pJ':>10}  {'ratio':>6}")
    for r, q in zip(sorted(reports, key=lambda r: r.width), ratios):
        print(f"{r.width:>5}  {r.energy_j * 1e12:>10.4g}  {q:>6}")
    print(f"wrote {csv_path} {txt_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    groups = []
    for path in args.csv:
        try:
            groups.append(read_reports_csv(path))
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from None
    merged = merge_reports(*groups)
    if args.output:
        stem = Path(args.output)
        emit_report(merged, stem.with_suffix(".csv"), stem.with_suffix(".txt"))
    sys.stdout.write(reports_to_text(merged))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel sweep points")
    common.add_argument("--params", help="device parameter file (default: $MEMOS_PARAMS or built-in)")

    p = _Parser(prog="memosim", description="Carry-free signed-digit adders on simulated MeMOS logic.")
    p.add_argument("--version", action="version", version=f"memosim {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", parents=[common], help="check an adder netlist against integer addition")
    v.add_argument("family", choices=FAMILIES)
    v.add_argument("--width", type=int, required=True)
    g = v.add_mutually_exclusive_group(required=True)
    g.add_argument("--exhaustive", action="store_true")
    g.add_argument("--random", type=int, metavar="COUNT")
    v.set_defaults(func=cmd_verify)

    n = sub.add_parser("netlist", parents=[common], help="dump or load a gate netlist")
    n.add_argument("family", choices=FAMILIES, nargs="?", default="step3")
    n.add_argument("--width", type=int, default=8)
    n.add_argument("--raw", action="store_true", help="keep AND/OR/XOR gates unlowered")
    n.add_argument("-o", "--output")
    n.add_argument("--load", metavar="FILE", help="parse and summarize a dumped netlist")
    n.set_defaults(func=cmd_netlist)

    s = sub.add_parser("simulate", parents=[common], help="add two SD literals on the simulated circuit")
    s.add_argument("family", choices=FAMILIES)
    s.add_argument("--model", type=_model, required=True)
    m = s.add_mutually_exclusive_group()
    m.add_argument("--static", action="store_true", default=True)
    m.add_argument("--dynamic", action="store_true")
    s.add_argument("--freq", type=float, required=True, help="clock frequency in Hz")
    s.add_argument("--vdd", type=float, help="supply/drive voltage (default: preset for model and mode)")
    s.add_argument("--a", required=True, help="SD literal, msb first, T = -1")
    s.add_argument("--b", required=True)
    s.add_argument("--trace", metavar="CSV", help="write per-block waveforms")
    s.set_defaults(func=cmd_simulate)

    for name, func, hlp in (("sweep", cmd_sweep, "cut-off search from a spec file"),
                            ("stream", cmd_stream, "streaming energy over widths from a spec file")):
        c = sub.add_parser(name, parents=[common], help=hlp)
        c.add_argument("spec")
        c.add_argument("-o", "--output", help="report path stem (default from spec or command name)")
        c.set_defaults(func=func)

    r = sub.add_parser("report", parents=[common], help="merge CSV reports")
    r.add_argument("csv", nargs="+")
    r.add_argument("-o", "--output", help="write merged CSV and text with this stem")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help/--version exit 0, argument errors exit 1
        return int(exc.code or 0)
    if getattr(args, "jobs", 1) < 1:
        print("memosim: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except NonFiniteState as exc:
        print(f"memosim: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (UsageError, MemosError, ValueError) as exc:
        print(f"memosim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
