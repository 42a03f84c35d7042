"""Schedule extraction, cost recomputation and report files."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..flexible_loads import pump_strings
from ..mld_core import LinExpr
from ..milp.problem import GAP_LIMIT, OPTIMAL
from ..thermal_units import UnitKind
from .assemble import COST_KEYS, Assembly, ScenarioId


@dataclass
class ScheduleReport:
    scenario: ScenarioId
    status: str
    columns: dict
    costs: dict
    objective: float = math.nan
    bound: float = math.nan
    gap: float = math.nan
    pump_strings: dict = field(default_factory=dict)
    fuel_pwl_gap: float = 0.0
    stats: dict = field(default_factory=dict)
    x: np.ndarray | None = None

    @property
    def total(self) -> float:
        return self.costs["total"]

    @property
    def hours(self):
        return [int(h) for h in self.columns["hour"]]

    def column(self, name):
        return np.asarray(self.columns[name], dtype=float)


def _clean(v: float) -> float:
    v = float(v)
    return 0.0 if v == 0.0 else v


def _vals(x, items):
    return np.array([_clean(LinExpr.of(e).value(x)) for e in items])


def extract_columns(asm: Assembly, x) -> dict:
    """Per-hour values of every decision quantity, in a fixed column order."""
    cfg = asm.config
    cols = {"hour": np.array(list(cfg.grid.hours), dtype=float)}
    for uid, vs in asm.units.items():
        s = vs.spec
        cols[f"{uid}.x"] = _vals(x, vs.x_disp)
        cols[f"{uid}.u"] = _vals(x, vs.u)
        cols[f"{uid}.wsd"] = _vals(x, vs.w_sd)
        for n in vs.w_su:
            cols[f"{uid}.wsu_{n}"] = _vals(x, vs.w_su[n])
        for n in vs.w_synch:
            if s.kind is UnitKind.ST:
                cols[f"{uid}.synch_{n}"] = _vals(x, vs.w_synch[n])
            cols[f"{uid}.soak_{n}"] = _vals(x, vs.w_soak[n])
        if s.desync_duration:
            cols[f"{uid}.desync"] = _vals(x, vs.w_desyn)
        if s.electrical:
            cols[f"{uid}.pe"] = _vals(x, vs.p_e)
            cols[f"{uid}.sr"] = _vals(x, vs.sr)
            cols[f"{uid}.soak_power"] = np.array(
                [sum(s.method(n).soak_power * cols[f"{uid}.soak_{n}"][i] for n in vs.w_soak)
                 for i in range(len(vs.x_disp))]
            )
        else:
            cols[f"{uid}.wbr"] = _vals(x, vs.w_br)
        if s.kind is UnitKind.ST:
            cols[f"{uid}.h"] = _vals(x, vs.h)
        else:
            cols[f"{uid}.ph"] = _vals(x, vs.p_h)
        if uid in asm.fuel:
            cols[f"{uid}.fuel_pwl"] = _vals(x, asm.fuel[uid])
    ex = asm.exchange
    cols["grid.peb"] = _vals(x, ex["p_eb"])
    cols["grid.pes"] = _vals(x, ex["p_es"])
    cols["grid.phb"] = _vals(x, ex["p_hb"])
    cols["grid.puc"] = np.full(len(ex["p_eb"]), _clean(LinExpr.of(ex["p_uc"]).value(x)))
    if asm.bess is not None:
        b = asm.bess
        cols["bess.pbc"] = _vals(x, b.pbc)
        cols["bess.pbd"] = _vals(x, b.pbd)
        if b.mode:
            cols["bess.mode"] = _vals(x, b.mode)
        soc = _vals(x, b.soc)
        cols["bess.soc"] = soc[:-1]
        cols["bess.soc_next"] = soc[1:]
    for g, tv in asm.tess.items():
        cols[f"tess_{g}.qin"] = _vals(x, tv.q_in)
        cols[f"tess_{g}.qout"] = _vals(x, tv.q_out)
        cols[f"tess_{g}.gamma"] = _vals(x, tv.gamma)
        lev = _vals(x, tv.level)
        cols[f"tess_{g}.H"] = lev[:-1]
        cols[f"tess_{g}.H_next"] = lev[1:]
    if asm.pumps is not None:
        for pid in asm.pumps.u:
            cols[f"{pid}.u"] = _vals(x, asm.pumps.u[pid])
            cols[f"{pid}.wsu"] = _vals(x, asm.pumps.w_su[pid])
        cols["pumps.power"] = _vals(x, asm.pumps.power)
    if asm.ils is not None:
        for iid, ps in asm.ils.p.items():
            cols[f"{iid}.p"] = _vals(x, ps)
    if asm.flex is not None:
        cols["flex.dr"] = _vals(x, asm.flex.dr)
        cols["flex.shift"] = _vals(x, asm.flex.shift)
        cols["flex.served"] = _vals(x, asm.flex.served)
    return cols


def recompute_costs(cols: dict, config, forecasts, scenario) -> tuple[dict, float]:
    """Cost breakdown from dispatch values; returns ``(costs, fuel_pwl_gap)``.

    Fuel uses the true quadratic curve of each GT.
    """
    ex = config.exchange
    K = len(cols["hour"])
    c = {k: 0.0 for k in COST_KEYS}
    pwl_total = 0.0
    for s in config.units:
        uid = s.id
        x = cols[f"{uid}.x"]
        if s.kind is UnitKind.GT:
            p = cols[f"{uid}.pe"]
            c["C_Fuel"] += float(np.sum(x * (s.fuel_quad * p * p + s.fuel_lin * p + s.fuel_const)))
            if f"{uid}.fuel_pwl" in cols:
                pwl_total += float(np.sum(cols[f"{uid}.fuel_pwl"]))
        for m in s.methods:
            soak = cols.get(f"{uid}.soak_{m.method}", np.zeros(K))
            c["C_SU"] += m.startup_cost * float(np.sum(soak))
            if m.method != "hot":
                c["C_SU"] += m.startup_cost * float(np.sum(cols.get(f"{uid}.synch_{m.method}", np.zeros(K))))
        sd = cols[f"{uid}.desync"] if s.desync_duration else cols[f"{uid}.wsd"]
        c["C_SD"] += s.shutdown_cost * float(np.sum(sd))
        if s.kind is UnitKind.BR:
            c["C_Boiler"] += ex.boiler_fuel_price * float(np.sum(cols[f"{uid}.wbr"]))
    if config.bess is not None and "bess.pbc" in cols:
        cc, cd = config.bess.cost_per_mwh
        c["C_BESS"] = float(cc * np.sum(cols["bess.pbc"]) + cd * np.sum(cols["bess.pbd"]))
    peb = cols["grid.peb"]
    c["C_UCC"] = ex.ucc_rate * max(0.0, float(np.max(peb)) - ex.contracted_capacity)
    c["C_Grid"] = float(
        np.sum(np.asarray(forecasts.buy_price) * peb - np.asarray(forecasts.sell_price) * cols["grid.pes"])
        + ex.heat_price * np.sum(cols["grid.phb"])
    )
    for il in config.ils:
        key = f"{il.id}.p"
        if key in cols:
            c["C_EIL"] += il.price_multiplier * float(np.sum(np.asarray(forecasts.buy_price) * cols[key]))
    c = {k: _clean(v) for k, v in c.items()}
    c["total"] = float(sum(c[k] for k in COST_KEYS))
    return c, pwl_total - c["C_Fuel"]


def report_costs(solution, asm: Assembly) -> ScheduleReport:
    """Build the schedule report of a solved assembly."""
    stats = {"nodes": solution.nodes, "lp_solves": solution.lp_solves, "runtime_s": solution.runtime}
    if solution.status not in (OPTIMAL, GAP_LIMIT) or solution.x is None:
        return ScheduleReport(asm.scenario, solution.status, {"hour": np.array(list(asm.config.grid.hours), float)},
                              {k: math.nan for k in COST_KEYS + ("total",)}, stats=stats)
    x = solution.x
    cols = extract_columns(asm, x)
    costs, pwl_gap = recompute_costs(cols, asm.config, asm.forecasts, asm.scenario)
    strings = {}
    if asm.pumps is not None:
        strings = pump_strings({pid: cols[f"{pid}.u"] for pid in asm.pumps.u})
    return ScheduleReport(
        scenario=asm.scenario, status=solution.status, columns=cols, costs=costs,
        objective=solution.objective, bound=solution.bound, gap=solution.gap,
        pump_strings=strings, fuel_pwl_gap=pwl_gap, stats=stats, x=x,
    )


def _fmt(v) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def write_schedule_csv(report: ScheduleReport, path):
    names = list(report.columns)
    n = len(report.columns["hour"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            w.writerow([_fmt(report.columns[c][i]) for c in names])


def read_schedule_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {h: np.array([float(r[j]) for r in body]) for j, h in enumerate(header)}


def write_costs_csv(report: ScheduleReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["item", "value"])
        w.writerow(["scenario", report.scenario.value])
        w.writerow(["status", report.status])
        for k in COST_KEYS + ("total",):
            w.writerow([k, _fmt(report.costs[k])])
        w.writerow(["objective", _fmt(report.objective)])
        w.writerow(["bound", _fmt(report.bound)])
        w.writerow(["gap", _fmt(report.gap)])
        w.writerow(["fuel_pwl_gap", _fmt(report.fuel_pwl_gap)])


def read_costs_csv(path) -> dict:
    out = {}
    with open(path, newline="") as fh:
        for row in list(csv.reader(fh))[1:]:
            try:
                out[row[0]] = float(row[1])
            except ValueError:
                out[row[0]] = row[1]
    return out


def write_pump_strings(report: ScheduleReport, path):
    with open(path, "w") as fh:
        for pid, s in report.pump_strings.items():
            fh.write(f"{pid} {s}\n")


def write_report(report: ScheduleReport, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tag = report.scenario.short.lower()
    files = [out / f"schedule_{tag}.csv", out / f"costs_{tag}.csv", out / f"pumps_{tag}.txt"]
    write_schedule_csv(report, files[0])
    write_costs_csv(report, files[1])
    write_pump_strings(report, files[2])
    return files


def comparison_rows(reports) -> list:
    """Table-style rows with percent reduction of each total against the first report."""
    base = reports[0].total if reports else math.nan
    rows = []
    for r in reports:
        red = 100.0 * (base - r.total) / base if base else math.nan
        rows.append({"scenario": r.scenario.value, "status": r.status, **{k: r.costs[k] for k in COST_KEYS},
                     "total": r.total, "reduction_pct": red})
    return rows


def write_comparison(reports, path):
    rows = comparison_rows(reports)
    keys = ["scenario", "status", *COST_KEYS, "total", "reduction_pct"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([r[k] if isinstance(r[k], str) else f"{r[k]:.2f}" for k in keys])
    return rows


def format_comparison(reports) -> str:
    rows = comparison_rows(reports)
    head = f"{'scenario':<16}" + "".join(f"{k:>12}" for k in (*COST_KEYS, "total", "red.%"))
    lines = [head]
    for r in rows:
        vals = [r[k] for k in COST_KEYS] + [r["total"], r["reduction_pct"]]
        lines.append(f"{r['scenario']:<16}" + "".join(f"{v:>12.2f}" for v in vals))
    return "\n".join(lines)
