import copy
import dataclasses

import numpy as np
import pytest

from meso.config import _build
from meso.errors import ConfigError
from meso.scheduler import (
    COST_KEYS, SCENARIOS, ScenarioId, build, comparison_rows, read_costs_csv, read_schedule_csv,
    recompute_costs, run_scenario, validate_schedule, write_report,
)
from meso.thermal_units import UnitKind

S1, S2, S3, S4 = SCENARIOS


def by_scenario(reports):
    return {r.scenario: r for r in reports}


def checks(found):
    return {v.check for v in found}


def test_scenario_parsing_and_gates():
    assert ScenarioId.parse("s3") is S3 and ScenarioId.parse("S4_full") is S4
    assert S1.short == "S1"
    with pytest.raises(ValueError):
        ScenarioId.parse("s5")
    assert [(s.aux_pumps, s.interruptible, s.flexible_thermal) for s in SCENARIOS] == [
        (False, False, False), (True, False, False), (True, True, False), (True, True, True)]


def test_scenario_blocks(config, forecasts):
    names = {s: build(config, forecasts, s).problem.var_names for s in (S1, S2, S4)}
    flex = ("dr[", "shift[")
    assert not any(n.startswith(("IL",) + flex) for n in names[S1])
    assert not any(n.startswith("AP") for n in names[S1])
    assert any(n.startswith("AP") for n in names[S2])
    assert not any(n.startswith(("IL",) + flex) for n in names[S2])
    assert any(n.startswith("IL") for n in names[S4]) and any(n.startswith(flex) for n in names[S4])


def test_assembly_is_deterministic(config, forecasts):
    a, b = build(config, forecasts, S4).problem, build(config, forecasts, S4).problem
    assert a.var_names == b.var_names and a.row_names == b.row_names
    assert (a.A != b.A).nnz == 0
    np.testing.assert_array_equal(a.c, b.c)


def test_empty_fleet_is_a_config_error(bundled_raw, forecasts):
    raw = copy.deepcopy(bundled_raw)
    raw["units"], raw["groups"], raw["tess"] = [], [], []
    with pytest.raises(ConfigError):
        build(_build(raw), forecasts, S1)


def test_every_report_validates(scenario_reports, config, forecasts):
    for r in scenario_reports:
        assert r.x is not None
        assert validate_schedule(r, config, forecasts, r.scenario) == []


def test_breakdown_sums_to_total(scenario_reports):
    for r in scenario_reports:
        assert sum(r.costs[k] for k in COST_KEYS) == pytest.approx(r.total, abs=1e-6)


def test_ucc_matches_peak_import(scenario_reports, config):
    ex = config.exchange
    for r in scenario_reports:
        peak = float(np.max(r.column("grid.peb")))
        assert r.costs["C_UCC"] == pytest.approx(ex.ucc_rate * max(0.0, peak - ex.contracted_capacity), abs=1e-6)
        assert r.costs["C_UCC"] == pytest.approx(ex.ucc_rate * r.column("grid.puc")[0], abs=1e-6)


def test_ucc_example(scenario_reports, config, forecasts):
    cols = dict(by_scenario(scenario_reports)[S1].columns)
    peb = np.zeros(24)
    peb[10] = 30.0
    cols["grid.peb"] = peb
    costs, _ = recompute_costs(cols, config, forecasts, S1)
    assert costs["C_UCC"] == pytest.approx(64_300.0)


def test_pwl_fuel_never_below_quadratic(scenario_reports, config):
    segments = config.solver.segments
    slack = 0.0
    for s in config.units:
        if s.kind is UnitKind.GT:
            slack += 24 * s.fuel_quad * (s.p_e_max / segments) ** 2 / 4
    for r in scenario_reports:
        assert -1e-6 <= r.fuel_pwl_gap <= slack + 1e-6


def test_comparison_rows(scenario_reports):
    rows = comparison_rows(scenario_reports)
    assert [r["scenario"] for r in rows] == [s.value for s in SCENARIOS]
    base = rows[0]["total"]
    assert rows[0]["reduction_pct"] == 0.0
    for r in rows:
        assert r["reduction_pct"] == pytest.approx(100 * (base - r["total"]) / base)


def test_zero_activity_costs(scenario_reports, config, forecasts):
    cols = {k: np.zeros_like(v) for k, v in by_scenario(scenario_reports)[S1].columns.items()}
    cols["hour"] = np.arange(1.0, 25.0)
    gts = [s for s in config.units if s.kind is UnitKind.GT]
    cols[f"{gts[0].id}.x"] = np.ones(24)
    costs, _ = recompute_costs(cols, config, forecasts, S1)
    assert costs["C_Fuel"] == pytest.approx(24 * gts[0].fuel_const)
    assert all(costs[k] == 0.0 for k in COST_KEYS if k != "C_Fuel")


def test_fuel_term_is_the_quadratic(scenario_reports, config, forecasts):
    cols = {k: np.zeros_like(v) for k, v in by_scenario(scenario_reports)[S1].columns.items()}
    gt = next(s for s in config.units if s.kind is UnitKind.GT)
    cols[f"{gt.id}.x"][3] = 1.0
    cols[f"{gt.id}.pe"][3] = 70.0
    costs, _ = recompute_costs(cols, config, forecasts, S1)
    assert costs["C_Fuel"] == pytest.approx(gt.fuel_quad * 4900 + gt.fuel_lin * 70 + gt.fuel_const)


@pytest.mark.parametrize("column", ["bess.soc", "bess.soc_next"])
def test_corrupted_soc_is_flagged(scenario_reports, config, forecasts, column):
    r = by_scenario(scenario_reports)[S4]
    cols = {k: v.copy() for k, v in r.columns.items()}
    cols[column][5] += 0.01
    found = validate_schedule(cols, config, forecasts, S4)
    assert "bess_replay" in checks(found)


def test_corrupted_tess_level_is_flagged(scenario_reports, config, forecasts):
    r = by_scenario(scenario_reports)[S4]
    cols = {k: v.copy() for k, v in r.columns.items()}
    cols["tess_CCPP1.H_next"][3] -= 0.5
    assert "tess_replay" in checks(validate_schedule(cols, config, forecasts, S4))


def test_pump_volume_one_short_is_flagged(scenario_reports, config, forecasts):
    r = by_scenario(scenario_reports)[S2]
    delivered = sum(p.flow_rate * float(np.sum(r.column(f"{p.id}.u"))) for p in config.pumps.pumps)
    assert validate_schedule(r.columns, config, forecasts, S2) == []
    tight = dataclasses.replace(config, pumps=dataclasses.replace(config.pumps, daily_volume=delivered + 1.0))
    found = validate_schedule(r.columns, tight, forecasts, S2)
    assert checks(found) == {"pump_volume"}


def test_early_shutdown_is_flagged(startup_case):
    # GT1 dispatched from hour 1: shutting it at hour 2, 1 h in, breaks the minimum up time
    cfg, fc = startup_case("hot")
    rep = run_scenario(cfg, fc, S4)
    cols = {k: v.copy() for k, v in rep.columns.items()}
    first = int(np.argmax(cols["GT1.x"] > 0.5))
    end = first + 1
    cols["GT1.x"][end:] = 0.0
    cols["GT1.wsd"][:] = 0.0
    cols["GT1.wsd"][end] = 1.0
    cols["GT1.pe"][end:] = 0.0
    for k in [c for c in cols if c.startswith("GT1.") and "wsu" in c]:
        cols[k][end:] = 0.0
    found = validate_schedule(cols, cfg, fc, S4)
    assert "min_up" in checks(found)


def test_wrong_cost_is_flagged(scenario_reports, config, forecasts):
    r = by_scenario(scenario_reports)[S3]
    costs = dict(r.costs)
    costs["C_Grid"] += 1.0
    assert "cost" in checks(validate_schedule(r.columns, config, forecasts, S3, costs=costs))


def test_short_schedule_is_flagged(config, forecasts):
    found = validate_schedule({"hour": np.arange(1.0, 10.0)}, config, forecasts, S1)
    assert checks(found) == {"shape"}


def test_report_files_round_trip(scenario_reports, tmp_path):
    r = by_scenario(scenario_reports)[S1]
    files = write_report(r, tmp_path)
    assert [f.name for f in files] == ["schedule_s1.csv", "costs_s1.csv", "pumps_s1.txt"]
    back = read_schedule_csv(files[0])
    assert list(back) == list(r.columns)
    for k, v in r.columns.items():
        np.testing.assert_array_equal(back[k], v)
    costs = read_costs_csv(files[1])
    for k in COST_KEYS + ("total",):
        assert costs[k] == r.costs[k]
    assert files[2].read_text().splitlines()[0] == "MP1 111" + "0" * 21
