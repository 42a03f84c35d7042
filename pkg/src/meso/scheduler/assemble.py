"""Day-ahead problem assembly for the four load-management scenarios."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

from ..config import GridExchangeSpec, SystemConfig
from ..errors import ConfigError
from ..flexible_loads import (
    PumpClass, apply_fixed_schedule, build_flex_thermal_block, build_il_block, build_pump_block,
    fixed_pump_schedule_scenario1,
)
from ..milp.pwl import add_epigraph, linearize_convex_quadratic
from ..mld_core import LinExpr, Model, lin_sum
from ..storage import build_bess_block, build_tess_block
from ..thermal_units import (
    UnitKind, build_commitment_block, build_heat_coupling, build_ramp_block, build_reserve_block,
    build_soak_power_terms, shutdown_cost_terms, startup_cost_terms,
)
from ..timegrid_io import ForecastSet

log = logging.getLogger(__name__)

COST_KEYS = ("C_Fuel", "C_BESS", "C_SU", "C_SD", "C_UCC", "C_Boiler", "C_Grid", "C_EIL")


class ScenarioId(str, Enum):
    S1_fixed_pumps = "S1_fixed_pumps"
    S2_pso = "S2_pso"
    S3_pso_il = "S3_pso_il"
    S4_full = "S4_full"

    @classmethod
    def parse(cls, text) -> "ScenarioId":
        if isinstance(text, cls):
            return text
        t = str(text).strip().lower()
        for s in cls:
            if t in (s.value.lower(), s.value[:2].lower()):
                return s
        raise ValueError(f"unknown scenario {text!r}")

    @property
    def short(self):
        return self.value[:2]

    @property
    def aux_pumps(self):
        return self is not ScenarioId.S1_fixed_pumps

    @property
    def interruptible(self):
        return self in (ScenarioId.S3_pso_il, ScenarioId.S4_full)

    @property
    def flexible_thermal(self):
        return self is ScenarioId.S4_full


SCENARIOS = tuple(ScenarioId)


@dataclass
class Assembly:
    """Model plus the handles needed to read a solution back."""

    config: SystemConfig
    forecasts: ForecastSet
    scenario: ScenarioId
    model: Model
    units: dict
    groups: dict
    bess: object
    tess: dict
    pumps: object
    pump_schedule: dict
    ils: object
    flex: object
    exchange: dict
    fuel: dict
    pwl: dict
    costs: dict
    elec_balance: list = field(default_factory=list)
    heat_balance: list = field(default_factory=list)
    problem: object = None


def build(config: SystemConfig, forecasts: ForecastSet, scenario, segments=None) -> Assembly:
    scenario = ScenarioId.parse(scenario)
    grid = config.grid
    if forecasts.num_steps != grid.num_steps:
        raise ConfigError(f"forecasts cover {forecasts.num_steps} h, horizon is {grid.num_steps} h")
    if not any(u.electrical for u in config.units):
        raise ConfigError("the configuration has no electrical generation units")
    if not config.groups:
        raise ConfigError("the configuration defines no CCPP group")
    segments = segments or config.solver.segments
    ex: GridExchangeSpec = config.exchange
    m = Model(f"meso_{scenario.short}")
    K = grid.num_steps
    hours = list(grid.hours)

    units = {}
    for spec in config.units:
        units[spec.id] = build_commitment_block(m, spec, config.states[spec.id], grid)
    for spec in config.units:
        build_ramp_block(m, spec, units[spec.id], config.states[spec.id])

    p_eb = [m.add_var(f"grid.peb[{k}]", 0.0, ex.p_eb_max, role="input") for k in hours]
    p_es = [m.add_var(f"grid.pes[{k}]", 0.0, ex.p_es_max, role="input") for k in hours]
    p_hb = [m.add_var(f"grid.phb[{k}]", 0.0, ex.p_hb_max, role="input") for k in hours]
    p_uc = m.add_var("grid.puc", 0.0, max(0.0, ex.p_eb_max - ex.contracted_capacity))
    for i, k in enumerate(hours):
        m.add(p_uc - p_eb[i], ">=", -ex.contracted_capacity, f"ucc[{k}]")

    build_reserve_block(m, [v for v in units.values() if v.spec.electrical], grid, forecasts, p_eb, ex.p_eb_max)

    tess = {}
    for t in config.tess:
        if t.group not in {g.id for g in config.groups}:
            raise ConfigError(f"TESS attached to unknown group {t.group!r}")
        tess[t.group] = build_tess_block(m, t, grid, name=f"tess_{t.group}")
    surplus = build_heat_coupling(m, config.groups, units, {g: tv.q_in for g, tv in tess.items()})

    bess = build_bess_block(m, config.bess, grid) if config.bess else None

    pumps, schedule = None, {}
    if config.pumps is not None and config.pumps.pumps:
        classes = (PumpClass.MAIN, PumpClass.AUXILIARY) if scenario.aux_pumps else (PumpClass.MAIN,)
        if scenario is ScenarioId.S1_fixed_pumps:
            schedule = fixed_pump_schedule_scenario1(config.pumps, grid)
        pumps = build_pump_block(m, config.pumps, grid, classes)
        if schedule:
            apply_fixed_schedule(m, pumps, schedule)

    ils = build_il_block(m, config.ils, grid, forecasts) if scenario.interruptible and config.ils else None
    flex = None
    if scenario.flexible_thermal and config.flex_thermal is not None:
        flex = build_flex_thermal_block(m, config.flex_thermal, grid, forecasts)

    fuel, pwl = {}, {}
    for uid, vs in units.items():
        s = vs.spec
        if s.kind is not UnitKind.GT:
            continue
        curve = linearize_convex_quadratic(s.fuel_quad, s.fuel_lin, s.fuel_const, s.p_e_max, segments)
        pwl[uid] = curve
        fuel[uid] = [add_epigraph(m, curve, vs.p_e[i], vs.x_disp[i], f"{uid}.fuel[{k}]") for i, k in enumerate(hours)]

    soak = {uid: build_soak_power_terms(vs.spec, vs) for uid, vs in units.items()}
    elec_rows, heat_rows = [], []
    for i, k in enumerate(hours):
        demand = LinExpr(constant=float(forecasts.elec_demand[i]))
        if pumps is not None:
            demand.iadd(pumps.power[i])
        if ils is not None:
            demand.iadd(ils.total[i], -1.0)
        supply = lin_sum(vs.p_e[i] + soak[uid][i] for uid, vs in units.items() if vs.spec.electrical)
        supply.iadd(p_eb[i]).iadd(p_es[i], -1.0)
        if bess is not None:
            supply.iadd(bess.pbd[i]).iadd(bess.pbc[i], -1.0)
        supply.iadd(LinExpr(constant=float(forecasts.res_generation[i])))
        elec_rows.append(m.add(demand - supply, "<=", 0.0, f"elec_balance[{k}]"))

        served = flex.served[i] if flex is not None else LinExpr(constant=float(forecasts.thermal_demand_nominal[i]))
        need = served + lin_sum(vs.h[i] for vs in units.values() if vs.spec.kind is UnitKind.ST)
        have = lin_sum(vs.p_h[i] for vs in units.values() if vs.spec.kind in (UnitKind.GT, UnitKind.BR))
        have.iadd(p_hb[i])
        for tv in tess.values():
            have.iadd(tv.q_out[i]).iadd(tv.q_in[i], -1.0)
        heat_rows.append(m.add(need - have, "<=", 0.0, f"heat_balance[{k}]"))

    costs = {
        "C_Fuel": lin_sum(z for zs in fuel.values() for z in zs),
        "C_BESS": bess.cost if bess is not None else LinExpr(),
        "C_SU": lin_sum(startup_cost_terms(vs.spec, vs) for vs in units.values()),
        "C_SD": lin_sum(shutdown_cost_terms(vs.spec, vs) for vs in units.values()),
        "C_UCC": ex.ucc_rate * p_uc,
        "C_Boiler": lin_sum(ex.boiler_fuel_price * w for vs in units.values() for w in vs.w_br),
        "C_Grid": lin_sum(
            float(forecasts.buy_price[i]) * p_eb[i] - float(forecasts.sell_price[i]) * p_es[i] + ex.heat_price * p_hb[i]
            for i in range(K)
        ),
        "C_EIL": ils.cost if ils is not None else LinExpr(),
    }
    m.objective = lin_sum(costs[c] for c in COST_KEYS)
    asm = Assembly(
        config=config, forecasts=forecasts, scenario=scenario, model=m, units=units, groups=surplus,
        bess=bess, tess=tess, pumps=pumps, pump_schedule=schedule, ils=ils, flex=flex,
        exchange={"p_eb": p_eb, "p_es": p_es, "p_hb": p_hb, "p_uc": p_uc},
        fuel=fuel, pwl=pwl, costs=costs, elec_balance=elec_rows, heat_balance=heat_rows,
    )
    asm.problem = m.to_milp()
    log.info("%s: %d variables (%d integer), %d rows", scenario.value, asm.problem.num_vars,
             asm.problem.num_integer, asm.problem.num_rows)
    return asm


def assemble(config: SystemConfig, forecasts: ForecastSet, scenario, segments=None):
    """The scenario's MILP (see :func:`build` for the full assembly)."""
    return build(config, forecasts, scenario, segments).problem
