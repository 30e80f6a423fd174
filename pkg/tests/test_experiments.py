import math

import numpy as np
import pytest

from memosim import experiments as exp
from memosim.circuit import Mode
from memosim.devices import ModelKind
from memosim.errors import IoFailure, NoPassingFrequency, NonMonotoneSweep, ParseError, WidthMismatch
from memosim.experiments import (
    Baseline, CMOS_MEMRISTOR_REGISTERS, CSV_COLUMNS, EvalReport, SweepSpec, compare_baseline, default_grid,
    ed_product, emit_report, energy_ratios, find_cutoff_frequency, merge_reports, parse_experiment_spec,
    read_reports_csv, reports_to_csv, reports_to_text, run_dynamic_eval, run_static_eval, scale_time, sweep,
    to_ns_pj,
)

GRID = tuple(default_grid(1e5, 1e10))


def test_default_grid():
    g = default_grid()
    assert len(g) == 71
    assert g[0] == pytest.approx(1e3) and g[-1] == pytest.approx(1e10) and g[10] == pytest.approx(1e4)
    assert np.all(np.diff(g) > 0)


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("step3", ModelKind.TEAM, grid=(1e6, 1e5, 1e10))
    with pytest.raises(ValueError):
        SweepSpec("step9", ModelKind.TEAM)
    assert SweepSpec("step3", ModelKind.TEAM, Mode.DYNAMIC).v_drive == 6.0
    assert SweepSpec("step3", ModelKind.VTEAM, Mode.DYNAMIC).v_drive == 4.0
    assert SweepSpec("step3", ModelKind.KNOWM, Mode.DYNAMIC).v_drive == 1.8
    assert SweepSpec("step3", ModelKind.TEAM).v_drive == 1.8


def test_grid_must_span_four_decades(params):
    with pytest.raises(ValueError, match="four decades"):
        sweep(SweepSpec("step3", ModelKind.TEAM, grid=tuple(default_grid(1e6, 1e9))), params)


def test_no_passing_frequency(params):
    with pytest.raises(NoPassingFrequency):
        sweep(SweepSpec("step3", ModelKind.TEAM, grid=tuple(default_grid(1e11, 1e15)), width=4), params)


def test_non_monotone_detected(params, monkeypatch):
    pattern = iter([True, True, False, True] + [False] * 100)
    monkeypatch.setattr(exp, "_passes_at", lambda *a: next(pattern))
    with pytest.raises(NonMonotoneSweep):
        sweep(SweepSpec("step3", ModelKind.TEAM, grid=GRID), params)


def test_capped(params, caplog):
    r = sweep(SweepSpec("step3", ModelKind.TEAM, grid=tuple(default_grid(1e3, 1e8)), width=4), params)
    assert r.capped and r.f_max == pytest.approx(1e8)
    assert "capped" in caplog.text


def test_bisection_precision_and_definition(params):
    spec = SweepSpec("step3", ModelKind.TEAM, grid=GRID, width=6)
    r = sweep(spec, params)
    fails = [f for f, ok in r.bisection if not ok]
    hi = min(fails + [g for g, ok in zip(GRID, r.grid_pass) if not ok])
    assert r.f_max < hi <= r.f_max * exp.BISECTION_PRECISION
    pairs = spec.validation_set()
    assert exp._passes_at(spec, params, pairs, r.f_max)
    assert not exp._passes_at(spec, params, pairs, hi)


def test_validation_size_stability(params):
    f1 = find_cutoff_frequency(SweepSpec("step3", ModelKind.VTEAM, grid=GRID, width=8, n_pairs=100), params)
    f2 = find_cutoff_frequency(SweepSpec("step3", ModelKind.VTEAM, grid=GRID, width=8, n_pairs=200), params)
    assert abs(math.log(f2 / f1)) < math.log(exp.BISECTION_PRECISION)


def test_parallel_sweep_same_result(params):
    spec = SweepSpec("step4", ModelKind.TEAM, grid=GRID, width=4)
    assert sweep(spec, params, jobs=3).f_max == sweep(spec, params, jobs=1).f_max


def test_time_scaling(params):
    spec = SweepSpec("step3", ModelKind.TEAM, grid=GRID, width=4)
    f1 = find_cutoff_frequency(spec, params)
    fast = params.replace(team=scale_time(params.team, 2.0))
    f2 = find_cutoff_frequency(spec, fast)
    assert f2 / f1 == pytest.approx(2.0, rel=0.06)
    assert scale_time(params.knowm, 4.0).t_c == params.knowm.t_c / 4
    with pytest.raises(TypeError):
        scale_time(object(), 2.0)


def test_static_eval_laws(params):
    r3 = run_static_eval("step3", ModelKind.TEAM, params, width=8, n_pairs=50, grid=GRID)
    r4 = run_static_eval("step4", ModelKind.TEAM, params, width=8, n_pairs=50, grid=GRID)
    for r, steps in ((r3, 3), (r4, 4)):
        assert r.latency_s == steps / r.f_max_hz
        assert r.ed_js == r.latency_s * r.energy_j
        assert r.energy_j > 0 and r.errors == 0
        assert r.mode == "static" and r.width == 8 and r.param_hash == params.hash
    assert r3.latency_s < r4.latency_s
    again = run_static_eval("step3", ModelKind.TEAM, params, width=8, n_pairs=50, grid=GRID)
    assert reports_to_csv([again]) == reports_to_csv([r3])


def test_dynamic_eval_common_cutoff(params):
    rs = run_dynamic_eval("step3", ModelKind.TEAM, params, widths=(4, 8), n_pairs=100, grid=GRID)
    assert [r.width for r in rs] == [4, 8]
    assert rs[0].f_max_hz == rs[1].f_max_hz
    assert all(r.errors == 0 and r.mode == "dynamic" and r.note == "" for r in rs)
    assert 1.6 < energy_ratios(rs)[0] < 2.4


def test_knowm_dynamic_labeled(params):
    rs = run_dynamic_eval("step3", ModelKind.KNOWM, params, widths=(2,), n_pairs=20, search_pairs=20,
                          grid=tuple(default_grid(1e3, 1e7)))
    assert "extension" in rs[0].note
    assert "extension" in reports_to_text(rs)


@pytest.mark.parametrize("model", [ModelKind.TEAM, ModelKind.VTEAM, ModelKind.KNOWM])
def test_dynamic_slower_than_static_at_equal_voltage(params, model):
    grid = tuple(default_grid())
    s = find_cutoff_frequency(SweepSpec("step3", model, Mode.STATIC, grid, 1.8, width=6), params)
    d = find_cutoff_frequency(SweepSpec("step3", model, Mode.DYNAMIC, grid, 1.8, width=6), params)
    assert d < s


def test_step4_dynamic_not_slower_than_step3(params):
    s3 = find_cutoff_frequency(SweepSpec("step3", ModelKind.TEAM, Mode.DYNAMIC, GRID, width=8), params)
    s4 = find_cutoff_frequency(SweepSpec("step4", ModelKind.TEAM, Mode.DYNAMIC, GRID, width=8), params)
    assert s4 >= s3


def _report(**kw):
    base = dict(family="step3", model="team", mode="static", f_max_hz=2.5e9, latency_s=1.2e-9, energy_j=44e-12,
                ed_js=ed_product(1.2e-9, 44e-12), width=40, seed=0, param_hash="abc")
    base.update(kw)
    return EvalReport(**base)


def test_ed_product():
    assert to_ns_pj(ed_product(1.2e-9, 44e-12)) == pytest.approx(52.8, rel=1e-12)
    assert round(to_ns_pj(ed_product(1.2e-9, 44e-12)), 6) == 52.8
    assert round(to_ns_pj(ed_product(3e-9, 10e-12)), 6) == 30.0
    assert ed_product(5e-9, 0.0) == 0.0
    with pytest.raises(ValueError):
        ed_product(-1.0, 1.0)


def test_compare_baseline():
    cmp = compare_baseline(_report(), CMOS_MEMRISTOR_REGISTERS)
    assert cmp.latency_ratio == pytest.approx(0.4)
    assert cmp.latency_improvement == pytest.approx(0.6)
    assert cmp.ed_ratio == pytest.approx(1.76)
    assert "prefer CMOS" in cmp.verdict
    assert "+76%" in cmp.table()
    me = Baseline("self", 1.2e-9, 44e-12, 40)
    same = compare_baseline(_report(), me)
    assert (same.latency_ratio, same.energy_ratio) == (1.0, 1.0)
    assert same.ed_ratio == pytest.approx(1.0) and same.verdict in ("break-even", "prefer MeMOS", "prefer self")
    with pytest.raises(WidthMismatch):
        compare_baseline(_report(width=8), CMOS_MEMRISTOR_REGISTERS)
    better = compare_baseline(_report(energy_j=1e-12, ed_js=1.2e-21), CMOS_MEMRISTOR_REGISTERS)
    assert better.verdict == "prefer MeMOS"


def test_csv_and_text(tmp_path):
    rs = [_report(), _report(family="step4", latency_s=1.6e-9, ed_js=1.6e-9 * 44e-12)]
    text = reports_to_csv(rs)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    emit_report(rs, tmp_path / "a.csv", tmp_path / "a.txt")
    first = (tmp_path / "a.csv").read_bytes(), (tmp_path / "a.txt").read_bytes()
    emit_report(rs, tmp_path / "a.csv", tmp_path / "a.txt")
    assert first == ((tmp_path / "a.csv").read_bytes(), (tmp_path / "a.txt").read_bytes())
    table = (tmp_path / "a.txt").read_text().splitlines()
    assert len(table) == 2 + len(rs)
    assert "abc" in table[2] and "52.8" in table[2]
    back = read_reports_csv(tmp_path / "a.csv")
    assert reports_to_csv(back) == text
    with pytest.raises(IoFailure):
        emit_report(rs, tmp_path / "missing" / "x.csv")


def test_merge_reports():
    a = [_report(family="step4"), _report()]
    b = [_report(), _report(model="vteam")]
    merged = merge_reports(a, b)
    assert [(r.family, r.model) for r in merged] == [("step3", "team"), ("step3", "vteam"), ("step4", "team")]


def test_experiment_spec_parser():
    spec = parse_experiment_spec("# comment\nfamily = step3\nmodel=team\nwidths = 8,16\nseed = 4  # x\n")
    assert spec == {"family": "step3", "model": "team", "widths": (8, 16), "seed": 4}
    for text, line in [("family = step3\nmodel\n", 2), ("family = step3\nmodel = team\ncolour = red\n", 3),
                       ("family = step3\nmodel = team\nseed = x\n", 3), ("family = step7\n", 1),
                       ("family = step3\nmodel = team\nmodel = team\n", 3), ("model = foo\n", 1),
                       ("family = step3\nmodel = team\nwidths = 8,a\n", 3)]:
        with pytest.raises(ParseError, match=f"line {line}"):
            parse_experiment_spec(text)
    with pytest.raises(ParseError, match="model"):
        parse_experiment_spec("family = step3\n")
