"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import time
from dataclasses import replace

import numpy as np
import pytest

from memosim import experiments as exp
from memosim.circuit import ClockConfig, Mode, build_memos_circuit, run_stream_digits
from memosim.devices import MemristorDevice, ModelKind, dwdt_team, dwdt_vteam
from memosim.experiments import (
    CMOS_MEMRISTOR_REGISTERS, EvalReport, SweepSpec, compare_baseline, default_grid, ed_product, energy_ratios,
    find_cutoff_frequency, reports_to_csv, run_dynamic_eval, run_static_eval, to_ns_pj,
)
from memosim.logic import expr as ex
from memosim.logic.adders import FAMILIES, build_adder, build_step4_stage1, depth_metrics, step3_cell, step4_cell
from memosim.sdarith import SDNumber, digits_value, random_digit_matrix

from oracles import all_words

MODELS = (ModelKind.TEAM, ModelKind.VTEAM, ModelKind.KNOWM)


def test_c1_adder_correctness(criterion):
    t0 = time.perf_counter()
    failures = []
    words = np.array(all_words(4), dtype=np.int8)[:, ::-1]
    a, b = np.repeat(words, 81, axis=0), np.tile(words, (81, 1))
    assert len(a) == 6561
    for family in FAMILIES:
        out = build_adder(family, 4).add_digits(a, b)
        if not np.array_equal(digits_value(out), digits_value(a) + digits_value(b)):
            failures.append(f"{family}/4")
        for w in (8, 16, 32, 64):
            pairs = random_digit_matrix(w, 10_000, w)
            out = build_adder(family, w).add_digits(pairs[:, 0], pairs[:, 1])
            if not np.array_equal(digits_value(out), digits_value(pairs[:, 0]) + digits_value(pairs[:, 1])):
                failures.append(f"{family}/{w}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 10
    criterion("C1 adder correctness", ok, f"6561 exhaustive + 4x10^4 random per family, {elapsed:.1f} s, "
                                          f"failures={failures}")
    assert ok


def test_c2_worked_examples(criterion):
    s1 = build_step4_stage1(4).add(SDNumber.from_msb([1, -1, 1, 1]), SDNumber.from_msb([0, 1, 1, 0]))
    s3 = build_adder("step3", 4).add(SDNumber.from_msb([0, 0, -1, 0]), SDNumber.from_msb([0, 1, -1, 0]))
    ok = s1.value == 13 and str(s1) == "1T11T" and s3.value == 0 and not any(s3.digits)
    criterion("C2 worked examples", ok, f"stage-1 sum {s1} = {s1.value}, step3 sum {s3} = {s3.value}")
    assert ok


def test_c3_lowering_soundness(criterion):
    checked, bad = 0, []
    for cell in (step4_cell(), step3_cell()):
        for outs in cell.values():
            for name, e in outs.items():
                names = sorted(ex.variables(e))
                low = ex.lower_to_nand_nor(e)
                checked += 1
                if len(names) > 6 or not ex.is_lowered(low) or ex.truth_table(low, names) != ex.truth_table(e, names):
                    bad.append(name)
    ok = not bad
    criterion("C3 lowering soundness", ok, f"{checked} cell expressions, mismatches={bad}")
    assert ok


def test_c4_analog_digital_fidelity(params, criterion):
    t0 = time.perf_counter()
    pairs = random_digit_matrix(8, 100, 1)
    rows, bad = [], []
    for model in MODELS:
        for family in FAMILIES:
            for mode in (Mode.STATIC, Mode.DYNAMIC):
                spec = SweepSpec(family, model, mode, width=8)
                f = find_cutoff_frequency(spec, params) / 10
                c = build_memos_circuit(build_adder(family, 8), model, params.for_model(model))
                res = run_stream_digits(c, pairs[:, 0], pairs[:, 1], spec.clock(f))
                rows.append(res.error_count)
                if res.error_count:
                    bad.append(f"{model.value}/{family}/{mode.value}: {res.error_count}")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 300
    criterion("C4 analog-digital fidelity", ok, f"{len(rows)} configurations x 100 pairs at f_max/10, "
                                                f"{elapsed:.0f} s, errors={bad}")
    assert ok


def test_c5_energy_scaling(params, criterion):
    details, ok = [], True
    for model in MODELS:
        reports = run_dynamic_eval("step3", model, params)
        ratios = energy_ratios(reports)
        ok &= all(1.8 <= r <= 2.2 for r in ratios) and all(r.errors == 0 for r in reports)
        details.append(f"{model.value} " + "/".join(f"{r:.3f}" for r in ratios))
    criterion("C5 energy scaling", ok, "; ".join(details))
    assert ok


def test_c6_constant_time(params, criterion):
    detail, ok = [], True
    clk = ClockConfig(1e8)
    for family, steps in (("step3", 3), ("step4", 4)):
        m8, m64 = depth_metrics(build_adder(family, 8)), depth_metrics(build_adder(family, 64))
        lat = []
        for w in (8, 64):
            c = build_memos_circuit(build_adder(family, w), ModelKind.TEAM, params.team)
            pairs = random_digit_matrix(w, 2, 0)
            lat.append(run_stream_digits(c, pairs[:, 0], pairs[:, 1], clk).results[0].latency)
        ok &= m8["block_depth"] == m64["block_depth"] == steps and lat[0] == lat[1] == steps / clk.frequency
        detail.append(f"{family} depth {m8['block_depth']}/{m64['block_depth']} latency {lat[0] * 1e9:g}/"
                      f"{lat[1] * 1e9:g} ns")
    criterion("C6 constant-time", ok, "; ".join(detail))
    assert ok


def test_c7_model_ordering(params, criterion):
    f = {}
    for model in MODELS:
        for family in FAMILIES:
            f[model, family] = find_cutoff_frequency(SweepSpec(family, model, Mode.STATIC, width=exp.STATIC_WIDTH),
                                                     params)
    ok = True
    for family in FAMILIES:
        k = f[ModelKind.KNOWM, family]
        ok &= 1e4 <= k <= 2e5
        ok &= f[ModelKind.TEAM, family] >= 1e3 * k and f[ModelKind.VTEAM, family] >= 1e3 * k
    detail = ", ".join(f"{m.value}/{fam} {v / 1e6:.4g} MHz" for (m, fam), v in f.items())
    criterion("C7 model ordering", ok, detail)
    assert ok


def test_c8_ed_arithmetic(criterion):
    ed = to_ns_pj(ed_product(1.2e-9, 44e-12))
    base = to_ns_pj(ed_product(CMOS_MEMRISTOR_REGISTERS.latency_s, CMOS_MEMRISTOR_REGISTERS.energy_j))
    r = EvalReport("step3", "team", "static", 2.5e9, 1.2e-9, 44e-12, ed_product(1.2e-9, 44e-12), 40, 0, "-")
    cmp = compare_baseline(r, CMOS_MEMRISTOR_REGISTERS)
    ok = (round(ed, 9) == 52.8 and round(base, 9) == 30.0
          and float(f"{cmp.latency_improvement:.2g}") == 0.6
          and float(f"{cmp.ed_ratio:.3g}") == 1.76
          and abs(cmp.ed_degradation - 0.75) <= 0.015)
    criterion("C8 ED arithmetic", ok, f"ED {ed:.6g} ns*pJ vs {base:.6g}, latency {cmp.latency_improvement:+.0%}, "
                                      f"ED {cmp.ed_degradation:+.0%} ({cmp.verdict})")
    assert ok


def test_c9_device_properties(params, criterion):
    rng = np.random.default_rng(0)
    clamp = passive = True
    for model in (ModelKind.TEAM, ModelKind.VTEAM, ModelKind.KNOWM, ModelKind.KNOWM_STOCHASTIC):
        d = MemristorDevice(model, params.for_model(model), seed=2)
        dt = 1e-9 if model is ModelKind.TEAM or model is ModelKind.VTEAM else params.knowm.t_c / 10
        for v in rng.uniform(-8, 8, 2000):
            r = d.euler_step(v, dt)
            clamp &= 0.0 <= d.w <= 1.0
            passive &= r.energy >= 0.0
    t, vt = params.team, params.vteam
    dead = all(dwdt_team(0.5, i, t) == 0.0 for i in np.linspace(t.i_on, t.i_off, 101)) and all(
        dwdt_vteam(0.5, v, vt) == 0.0 for v in np.linspace(vt.v_on, vt.v_off, 101))

    def final(n):
        d = MemristorDevice(ModelKind.TEAM, t)
        for _ in range(n):
            d.euler_step(1.0, 0.3e-9 / n)
        return d.w

    w1, w2, w4 = final(50), final(100), final(200)
    ratio = abs(w1 - w2) / abs(w2 - w4)
    conv = abs(ratio - 2.0) <= 0.5
    ok = clamp and passive and dead and conv
    criterion("C9 device properties", ok, f"clamp={clamp} passive={passive} dead-zone={dead} "
                                          f"Euler ratio {ratio:.3f}")
    assert ok


def test_c10_determinism(params, criterion, tmp_path):
    grid = tuple(default_grid(1e5, 1e10))
    outputs = []
    for run in range(2):
        exp._CIRCUITS.clear()
        reports = [run_static_eval("step3", ModelKind.VTEAM, params, width=8, n_pairs=200, grid=grid)]
        reports += run_dynamic_eval("step4", ModelKind.TEAM, params, widths=(8, 16), n_pairs=200, grid=grid)
        path = tmp_path / f"run{run}.csv"
        exp.emit_report(reports, path)
        outputs.append(path.read_bytes())
    stoch = [run_stream_digits(build_memos_circuit(build_adder("step3", 2), ModelKind.KNOWM_STOCHASTIC,
                                                   params.knowm, seed=9),
                               *random_digit_matrix(2, 3, 9).transpose(1, 0, 2), ClockConfig(2e3)).energy.tobytes()
             for _ in range(2)]
    ok = outputs[0] == outputs[1] and stoch[0] == stoch[1]
    criterion("C10 determinism", ok, f"{len(outputs[0])} CSV bytes identical={outputs[0] == outputs[1]}, "
                                     f"stochastic stream identical={stoch[0] == stoch[1]}")
    assert ok
