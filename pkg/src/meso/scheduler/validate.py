"""Independent feasibility check of a reported schedule.

Works only from the per-hour columns and the configuration: the commitment
logic is re-derived from startup and shutdown events by a small state
machine, storage trajectories are replayed through the one-step MLD
templates, and every cost is recomputed.  Nothing here reads the model rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..flexible_loads import PumpClass, count_startups, fixed_pump_schedule_scenario1
from ..storage import replay, storage_mld
from ..thermal_units import UnitKind, unit_history
from .assemble import COST_KEYS, ScenarioId
from .report import recompute_costs

TOL = 1e-6


@dataclass(frozen=True)
class Violation:
    check: str
    hour: int | None
    detail: str

    def __str__(self):
        at = f" h{self.hour}" if self.hour is not None else ""
        return f"{self.check}{at}: {self.detail}"


class _Log:
    def __init__(self, tol):
        self.tol = tol
        self.items = []

    def add(self, check, hour, detail):
        self.items.append(Violation(check, hour, detail))

    def le(self, check, hour, lhs, rhs, what):
        if lhs > rhs + self.tol:
            self.add(check, hour, f"{what}: {lhs:.9g} > {rhs:.9g}")

    def eq(self, check, hour, a, b, what):
        if abs(a - b) > self.tol:
            self.add(check, hour, f"{what}: {a:.9g} != {b:.9g}")


def _binary(log, name, arr):
    for i, v in enumerate(arr):
        if min(abs(v), abs(v - 1)) > log.tol:
            log.add("binary", i + 1, f"{name} = {v:.9g}")


def derive_phases(spec, history, wsd, wsu, K):
    """Phase label per hour from shutdown/startup events (history included).

    Returns ``(labels, methods, sd_times, su_events)``: ``methods`` holds the
    startup method behind each synch/soak hour (None elsewhere) and
    ``su_events`` is a list of ``(time, method)``.
    """
    sd_times = sorted([t for t, v in history["sd"].items() if v > 0.5] +
                      [i + 1 for i, v in enumerate(wsd) if v > 0.5])
    su_events = sorted([(t, n) for n, d in history["su"].items() for t, v in d.items() if v > 0.5] +
                       [(i + 1, n) for n, seq in wsu.items() for i, v in enumerate(seq) if v > 0.5])
    events = sorted([(t, "sd", None) for t in sd_times] + [(t, "su", n) for t, n in su_events])
    td = spec.desync_duration
    labels, methods = [], []
    for k in range(1, K + 1):
        last = None
        for ev in events:
            if ev[0] <= k:
                last = ev
        if last is None:
            labels.append("dispatch" if history["x0"] else "off")
            methods.append(None)
            continue
        t, kind, n = last
        methods.append(None)
        if kind == "sd":
            labels.append("desync" if k < t + td else "off")
        else:
            m = spec.method(n)
            if k < t + m.synch_duration:
                labels.append("synch")
            elif k < t + m.lead_time:
                labels.append("soak")
            else:
                labels.append("dispatch")
            if labels[-1] != "dispatch":
                methods[-1] = n
    return labels, methods, sd_times, su_events


def _check_unit(log, spec, state, cols, K):
    uid = spec.id
    hist = unit_history(spec, state)
    x = cols[f"{uid}.x"]
    wsd = cols[f"{uid}.wsd"]
    wsu = {m.method: cols.get(f"{uid}.wsu_{m.method}", np.zeros(K)) for m in spec.methods}
    _binary(log, f"{uid}.x", x)
    _binary(log, f"{uid}.wsd", wsd)
    for n, seq in wsu.items():
        _binary(log, f"{uid}.wsu_{n}", seq)
    labels, methods, sd_times, su_events = derive_phases(spec, hist, wsd, wsu, K)

    def phase_at(k):
        if k >= 1:
            return labels[k - 1]
        return "dispatch" if hist["x0"] else "off"

    # event legality
    for t in sd_times:
        if t >= 1 and phase_at(t - 1) != "dispatch":
            log.add("shutdown", t, f"{uid} shut down while {phase_at(t - 1)}")
    for t, n in su_events:
        if t < 1:
            continue
        prev = [s for s in sd_times if s < t]
        if not prev:
            log.add("startup", t, f"{uid} started without a prior shutdown")
            continue
        tau = prev[-1]
        if any(t0 > tau and t0 < t for t0, _ in su_events):
            log.add("startup", t, f"{uid} started twice after the shutdown at h{tau}")
        m = spec.method(n)
        down = t - tau
        if not (m.window_lo <= down <= m.window_hi):
            log.add("startup_method", t, f"{uid} {n} start after {down} h down, window [{m.window_lo}, {m.window_hi}]")
        if tau + spec.desync_duration > t:
            log.add("startup", t, f"{uid} started during desynchronization")
    for k in range(1, K + 1):
        if sum(1 for t, _ in su_events if t == k) > 1:
            log.add("startup", k, f"{uid} has two startup pulses")

    # reported phase columns must agree with the derived labels
    derived_x = np.array([1.0 if p == "dispatch" else 0.0 for p in labels])
    for i in range(K):
        log.eq("phase", i + 1, x[i], derived_x[i], f"{uid}.x vs event-derived dispatch")
    for m in spec.methods:
        n = m.method
        lead_label = {"synch": f"{uid}.synch_{n}", "soak": f"{uid}.soak_{n}"}
        for ph, key in lead_label.items():
            if key not in cols:
                continue
            for i in range(K):
                want = 1.0 if labels[i] == ph and methods[i] == n else 0.0
                log.eq("phase", i + 1, cols[key][i], want, key)
    if spec.desync_duration and f"{uid}.desync" in cols:
        for i in range(K):
            log.eq("phase", i + 1, cols[f"{uid}.desync"][i], 1.0 if labels[i] == "desync" else 0.0, f"{uid}.desync")

    # minimum up and down times
    for t, n in su_events:
        d = t + spec.method(n).lead_time
        for k in range(max(d, 1), min(d + spec.ut - 1, K) + 1):
            if labels[k - 1] != "dispatch":
                log.add("min_up", k, f"{uid} dispatched at h{d} but {labels[k - 1]} at h{k}")
    for t in sd_times:
        for k in range(max(t, 1), min(t + spec.dt - 1, K) + 1):
            if labels[k - 1] in ("dispatch", "synch", "soak"):
                log.add("min_down", k, f"{uid} shut down at h{t} but {labels[k - 1]} at h{k}")

    # output range
    tol = log.tol
    sp = np.zeros(K)
    if spec.electrical:
        p = cols[f"{uid}.pe"]
        for i in range(K):
            if x[i] > 0.5:
                if not (spec.p_e_min - tol <= p[i] <= spec.p_e_max + tol):
                    log.add("power", i + 1, f"{uid} at {p[i]:.9g} MW outside [{spec.p_e_min}, {spec.p_e_max}]")
            elif abs(p[i]) > tol:
                log.add("power", i + 1, f"{uid} produces {p[i]:.9g} MW while not dispatched")
        sp = np.array([spec.method(methods[i]).soak_power if labels[i] == "soak" else 0.0 for i in range(K)])
        if f"{uid}.soak_power" in cols:
            for i in range(K):
                log.eq("soak_power", i + 1, cols[f"{uid}.soak_power"][i], sp[i], uid)
        sr = cols.get(f"{uid}.sr")
        if sr is not None:
            cap = 10.0 * spec.msr
            for i in range(K):
                log.le("reserve_unit", i + 1, -sr[i], 0.0, f"{uid}.sr >= 0")
                log.le("reserve_unit", i + 1, sr[i], cap * x[i], f"{uid}.sr <= 10 MSR x")
                log.le("reserve_unit", i + 1, sr[i] + p[i], spec.p_e_max * x[i], f"{uid}.sr + P <= Pmax x")
        if spec.kind is UnitKind.ST:
            band = spec.ramp_fraction * spec.p_e_max
            prev = hist["p0"]
            for i in range(K):
                log.le("ramp", i + 1, abs(p[i] - prev), band, f"{uid} ramp")
                prev = p[i]
            log_heat = spec.steam_b1 * p + spec.steam_b2 * x
            for i in range(K):
                log.eq("heat", i + 1, cols[f"{uid}.h"][i], log_heat[i], f"{uid}.h")
        else:
            ph = spec.heat_a0 * p + spec.heat_a1 * x
            for i in range(K):
                log.eq("heat", i + 1, cols[f"{uid}.ph"][i], ph[i], f"{uid}.ph")
    else:
        f = cols[f"{uid}.wbr"]
        for i in range(K):
            if x[i] > 0.5:
                if not (spec.fuel_min - tol <= f[i] <= spec.fuel_max + tol):
                    log.add("boiler", i + 1, f"{uid} fuel {f[i]:.9g} outside [{spec.fuel_min}, {spec.fuel_max}]")
            elif abs(f[i]) > tol:
                log.add("boiler", i + 1, f"{uid} burns fuel while off")
            log.eq("heat", i + 1, cols[f"{uid}.ph"][i], spec.fuel_to_heat * f[i], f"{uid}.ph")
    return sp


def _check_storage(log, config, cols, K):
    b = config.bess
    if b is not None and "bess.pbc" in cols:
        pbc, pbd = cols["bess.pbc"], cols["bess.pbd"]
        mode = cols.get("bess.mode", (pbc > log.tol).astype(float))
        traj, problems = replay(storage_mld(b), [b.soc_init], np.c_[pbc, pbd], mode[:, None], log.tol)
        for p in problems:
            log.add("bess", None, p)
        for k in range(K):
            log.eq("bess_replay", k + 1, cols["bess.soc"][k], traj[k, 0], "SOC")
            log.eq("bess_replay", k + 2, cols["bess.soc_next"][k], traj[k + 1, 0], "SOC")
        for i in range(K):
            if b.exclusive_modes and pbc[i] > log.tol and pbd[i] > log.tol:
                log.add("bess", i + 1, "charging and discharging at once")
    for t in config.tess:
        key = f"tess_{t.group}"
        if f"{key}.qin" not in cols:
            continue
        u = np.c_[cols[f"{key}.qin"], cols[f"{key}.qout"]]
        traj, problems = replay(storage_mld(t), [t.h_init], u, cols[f"{key}.gamma"][:, None], log.tol)
        for p in problems:
            log.add("tess", None, f"{key} {p}")
        for k in range(K):
            log.eq("tess_replay", k + 1, cols[f"{key}.H"][k], traj[k, 0], f"{key}.H")
            log.eq("tess_replay", k + 2, cols[f"{key}.H_next"][k], traj[k + 1, 0], f"{key}.H")


def _check_system(log, config, forecasts, scenario, cols, K, soak):
    ex = config.exchange
    peb, pes, phb = cols["grid.peb"], cols["grid.pes"], cols["grid.phb"]
    for i in range(K):
        for name, v, hi in (("peb", peb[i], ex.p_eb_max), ("pes", pes[i], ex.p_es_max), ("phb", phb[i], ex.p_hb_max)):
            if not -log.tol <= v <= hi + log.tol:
                log.add("grid", i + 1, f"{name} = {v:.9g} outside [0, {hi}]")
    elec_units = [u for u in config.units if u.electrical]

    # reserve: unit headroom plus unused import capacity
    for i in range(K):
        head = sum(cols[f"{u.id}.sr"][i] for u in elec_units if f"{u.id}.sr" in cols)
        log.le("reserve", i + 1, float(forecasts.spin_reserve_req[i]), head + ex.p_eb_max - peb[i], "SR requirement")

    # pumps
    pump_power = np.zeros(K)
    fleet = config.pumps
    if fleet is not None and fleet.pumps:
        classes = (PumpClass.MAIN, PumpClass.AUXILIARY) if scenario.aux_pumps else (PumpClass.MAIN,)
        volume = 0.0
        for p in fleet.pumps:
            key = f"{p.id}.u"
            if key not in cols:
                if p.pump_class in classes:
                    log.add("pumps", None, f"{p.id} missing from the schedule")
                continue
            u = cols[key]
            _binary(log, key, u)
            if p.pump_class not in classes and np.any(u > 0.5):
                log.add("pumps", None, f"{p.id} runs in a scenario that excludes it")
            n = count_startups(u)
            if n > p.max_startups:
                log.add("pumps", None, f"{p.id} starts {n} times, limit {p.max_startups}")
            volume += p.flow_rate * float(np.sum(u > 0.5))
            pump_power += p.power_mw * (u > 0.5)
        if volume < fleet.daily_volume - log.tol:
            log.add("pump_volume", None, f"{volume:.9g} m3 pumped, {fleet.daily_volume:.9g} m3 required")
        if scenario is ScenarioId.S1_fixed_pumps:
            for pid, seq in fixed_pump_schedule_scenario1(fleet, config.grid).items():
                if f"{pid}.u" in cols and np.any(np.abs(cols[f"{pid}.u"] - np.asarray(seq)) > log.tol):
                    log.add("pump_schedule", None, f"{pid} deviates from the fixed schedule")

    # interruptible loads
    il_total = np.zeros(K)
    for il in config.ils:
        key = f"{il.id}.p"
        if key not in cols:
            continue
        p = cols[key]
        if not scenario.interruptible and np.any(np.abs(p) > log.tol):
            log.add("il", None, f"{il.id} curtails in a scenario without interruptible loads")
        for i in range(K):
            if not -log.tol <= p[i] <= il.hourly_cap + log.tol:
                log.add("il", i + 1, f"{il.id} = {p[i]:.9g} outside [0, {il.hourly_cap}]")
        log.le("il", None, float(np.sum(p)), il.daily_cap, f"{il.id} daily total")
        il_total += p
    for i in range(K):
        log.le("il", i + 1, il_total[i], 0.05 * float(forecasts.elec_demand[i]), "aggregate curtailment")

    # flexible thermal load
    p0 = np.asarray(forecasts.thermal_demand_nominal, float)
    served = p0.copy()
    if "flex.served" in cols:
        if not scenario.flexible_thermal:
            log.add("flex", None, "flexible thermal load used outside its scenario")
        dr, shift = cols["flex.dr"], cols["flex.shift"]
        dr_max = config.flex_thermal.dr_max if config.flex_thermal else 0.0
        for i in range(K):
            if not -log.tol <= dr[i] <= dr_max + log.tol:
                log.add("flex", i + 1, f"DR = {dr[i]:.9g} outside [0, {dr_max}]")
            log.le("flex", i + 1, -shift[i], 0.0, "shift >= 0")
            log.eq("flex", i + 1, cols["flex.served"][i], p0[i] * (1 - dr[i]) + shift[i], "served load")
        served = cols["flex.served"]
        log.eq("flex", None, float(np.sum(served)), float(np.sum(p0)), "day-total thermal energy")

    # balances as printed: demand <= supply
    for i in range(K):
        gen = sum(cols[f"{u.id}.pe"][i] + soak[u.id][i] for u in elec_units)
        supply = gen + peb[i] - pes[i] + float(forecasts.res_generation[i])
        if "bess.pbd" in cols:
            supply += cols["bess.pbd"][i] - cols["bess.pbc"][i]
        demand = float(forecasts.elec_demand[i]) + pump_power[i] - il_total[i]
        log.le("elec_balance", i + 1, demand, supply, "electrical demand vs supply")

        draw = sum(cols[f"{u.id}.h"][i] for u in config.units if u.kind is UnitKind.ST)
        heat = sum(cols[f"{u.id}.ph"][i] for u in config.units if u.kind is not UnitKind.ST)
        heat += phb[i]
        for t in config.tess:
            key = f"tess_{t.group}"
            if f"{key}.qin" in cols:
                heat += cols[f"{key}.qout"][i] - cols[f"{key}.qin"][i]
        log.le("heat_balance", i + 1, served[i] + draw, heat, "thermal demand vs supply")

    # steam header of each group, then the pooled header for extra turbines
    pooled = np.zeros(K)
    extra = np.zeros(K)
    qin_all = np.zeros(K)
    for g in config.groups:
        sur = cols[f"{g.gt}.ph"] + cols[f"{g.boiler}.ph"] - cols[f"{g.st}.h"]
        qin = cols.get(f"tess_{g.id}.qin", np.zeros(K))
        for i in range(K):
            log.le("steam", i + 1, qin[i], sur[i], f"{g.id} TESS charge vs steam surplus")
        pooled += sur
        qin_all += qin
        for e in g.extra_st:
            extra += cols[f"{e}.h"]
    if any(g.extra_st for g in config.groups):
        for i in range(K):
            log.le("steam", i + 1, extra[i] + qin_all[i], pooled[i], "pooled steam for extra turbines")

    # uncontracted capacity variable covers the peak excess
    if "grid.puc" in cols:
        need = max(0.0, float(np.max(peb)) - ex.contracted_capacity)
        log.le("ucc", None, need, float(cols["grid.puc"][0]), "P_UC covers the peak import excess")


def validate_schedule(columns, config, forecasts, scenario, costs=None, tol=TOL) -> list:
    """Every violated condition of a schedule, as :class:`Violation` items.

    ``columns`` is a :class:`~meso.scheduler.report.ScheduleReport` or the
    column dict read from a schedule CSV.  With ``costs`` the reported
    breakdown is compared to an independent recomputation.
    """
    if hasattr(columns, "columns"):
        if costs is None:
            costs = columns.costs
        columns = columns.columns
    scenario = ScenarioId.parse(scenario)
    cols = {k: np.asarray(v, dtype=float) for k, v in columns.items()}
    K = config.grid.num_steps
    log = _Log(tol)
    if len(cols.get("hour", ())) != K:
        log.add("shape", None, f"schedule has {len(cols.get('hour', ()))} rows, horizon is {K}")
        return log.items
    soak = {}
    for spec in config.units:
        needed = [f"{spec.id}.x", f"{spec.id}.wsd"] + ([f"{spec.id}.pe"] if spec.electrical else [f"{spec.id}.wbr"])
        missing = [c for c in needed if c not in cols]
        if missing:
            log.add("shape", None, f"missing columns {', '.join(missing)}")
            return log.items
        soak[spec.id] = _check_unit(log, spec, config.states[spec.id], cols, K)
    _check_storage(log, config, cols, K)
    _check_system(log, config, forecasts, scenario, cols, K, soak)
    if costs is not None:
        mine, _ = recompute_costs(cols, config, forecasts, scenario)
        for k in COST_KEYS + ("total",):
            v = costs.get(k)
            if v is None or (isinstance(v, float) and math.isnan(v)):
                log.add("cost", None, f"{k} missing")
                continue
            if abs(float(v) - mine[k]) > tol * max(1.0, abs(mine[k])):
                log.add("cost", None, f"{k}: reported {float(v):.9g}, recomputed {mine[k]:.9g}")
        s = sum(float(costs[k]) for k in COST_KEYS if k in costs)
        if "total" in costs and abs(s - float(costs["total"])) > tol * max(1.0, abs(s)):
            log.add("cost", None, "breakdown does not sum to the total")
    return log.items
