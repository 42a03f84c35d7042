"""Flexible electrical pumps, interruptible loads and the reschedulable
thermal load."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import FleetError, SpecError
from .mld_core import LinExpr, Model, lin_sum
from .timegrid_io import TimeGrid


class PumpClass(str, Enum):
    MAIN = "main"
    AUXILIARY = "auxiliary"


@dataclass(frozen=True)
class PumpSpec:
    id: str
    flow_rate: float  # m3/h
    efficiency: float  # kWh/m3
    max_startups: int
    pump_class: PumpClass = PumpClass.MAIN

    def __post_init__(self):
        object.__setattr__(self, "pump_class", PumpClass(self.pump_class))
        if not (self.flow_rate > 0 and self.efficiency > 0):
            raise SpecError(f"pump {self.id}: flow_rate and efficiency must be > 0")
        if self.max_startups < 0:
            raise SpecError(f"pump {self.id}: max_startups must be >= 0")

    @property
    def power_mw(self) -> float:
        """Electrical draw while running: ``beta * Q`` kWh/h converted to MW."""
        return self.efficiency * self.flow_rate / 1000.0


@dataclass(frozen=True)
class PumpFleet:
    pumps: tuple
    daily_volume: float

    def __post_init__(self):
        object.__setattr__(self, "pumps", tuple(self.pumps))
        if self.daily_volume < 0:
            raise SpecError("daily_volume must be >= 0")

    def members(self, classes=(PumpClass.MAIN, PumpClass.AUXILIARY)):
        classes = {PumpClass(c) for c in classes}
        return [p for p in self.pumps if p.pump_class in classes]

    def max_volume(self, grid: TimeGrid, classes=(PumpClass.MAIN, PumpClass.AUXILIARY)) -> float:
        # pumps start off, so a pump with no startup allowance never runs
        return sum(p.flow_rate * grid.num_steps for p in self.members(classes) if p.max_startups >= 1)

    def check(self, grid: TimeGrid, classes=(PumpClass.MAIN, PumpClass.AUXILIARY)):
        cap = self.max_volume(grid, classes)
        if cap < self.daily_volume:
            raise FleetError(f"pumps can deliver at most {cap:g} m3, {self.daily_volume:g} m3 required")


@dataclass
class PumpVars:
    u: dict
    w_su: dict
    power: list  # MW per hour
    specs: dict = field(default_factory=dict)


def build_pump_block(model: Model, fleet: PumpFleet, grid: TimeGrid,
                     classes=(PumpClass.MAIN, PumpClass.AUXILIARY)) -> PumpVars:
    """Commitment, startup counting and daily volume of the selected pumps.

    All pumps are off before hour 1.  The startup indicator ``w_SU`` uses the
    linearization pair ``(u_k - u_{k-1})/2 <= w_SU <= (u_k + 1 - u_{k-1})/2``.
    """
    fleet.check(grid, classes)
    members = fleet.members(classes)
    u, w, specs = {}, {}, {}
    for p in members:
        u[p.id] = [model.add_binary(f"{p.id}.u[{k}]", role="input") for k in grid.hours]
        w[p.id] = [model.add_binary(f"{p.id}.wsu[{k}]") for k in grid.hours]
        specs[p.id] = p
        prev = LinExpr()
        for k, (uk, wk) in enumerate(zip(u[p.id], w[p.id]), grid.start_hour):
            model.add(2 * wk - uk + prev, "<=", 1.0, f"{p.id}.su_hi[{k}]")
            model.add(2 * wk - uk + prev, ">=", 0.0, f"{p.id}.su_lo[{k}]")
            # same set over binaries, but without the half-startup LP points
            model.add(wk - uk + prev, ">=", 0.0, f"{p.id}.su_on[{k}]")
            prev = uk.to_expr()
        model.add(lin_sum(w[p.id]), "<=", p.max_startups, f"{p.id}.su_max")
    # interchangeable pumps: order them by run hours so relabellings of one
    # schedule are not explored separately
    for a, b in zip(members, members[1:]):
        if (a.flow_rate, a.efficiency, a.max_startups, a.pump_class) == (b.flow_rate, b.efficiency, b.max_startups, b.pump_class):
            model.add(lin_sum(u[a.id]) - lin_sum(u[b.id]), ">=", 0.0, f"pump_order[{a.id},{b.id}]")
    if members:
        vol = lin_sum(p.flow_rate * uk for p in members for uk in u[p.id])
        model.add(vol, ">=", volume_target(members, fleet.daily_volume), "pump_volume")
    power = [lin_sum(p.power_mw * u[p.id][i] for p in members) for i in range(grid.num_steps)]
    return PumpVars(u, w, power, specs)


def volume_target(members, daily_volume) -> float:
    """Smallest reachable volume ``>= daily_volume``.

    With integral flow rates the pumped volume is a multiple of their gcd, so
    the requirement can be rounded up to that grid without losing any schedule.
    """
    rates = [p.flow_rate for p in members]
    if not rates or any(r != int(r) for r in rates):
        return daily_volume
    g = math.gcd(*(int(r) for r in rates))
    return g * math.ceil(daily_volume / g - 1e-12)


def fixed_pump_schedule_scenario1(fleet: PumpFleet, grid: TimeGrid) -> dict:
    """Run every main pump from hour 1 until the daily volume is met.

    Returns ``{pump_id: [0/1 per hour]}`` for the main pumps.
    """
    mains = fleet.members((PumpClass.MAIN,))
    if not mains:
        raise FleetError("no main pumps in the fleet")
    q = sum(p.flow_rate for p in mains)
    hours = math.ceil(fleet.daily_volume / q - 1e-12) if fleet.daily_volume > 0 else 0
    if hours > grid.num_steps:
        raise FleetError(f"main pumps need {hours} h to deliver the daily volume")
    if hours and any(p.max_startups < 1 for p in mains):
        raise FleetError("a main pump without a startup allowance cannot run")
    return {p.id: [1 if i < hours else 0 for i in range(grid.num_steps)] for p in mains}


def apply_fixed_schedule(model: Model, pumps: PumpVars, schedule: dict):
    for pid, seq in schedule.items():
        for var, val in zip(pumps.u[pid], seq):
            model.fix(var, float(val))


def pump_strings(u_values: dict) -> dict:
    """Table-style 0/1 strings, one character per hour."""
    return {pid: "".join("1" if v > 0.5 else "0" for v in seq) for pid, seq in u_values.items()}


def count_startups(seq) -> int:
    prev, n = 0, 0
    for v in seq:
        on = 1 if v > 0.5 else 0
        n += on and not prev
        prev = on
    return n


@dataclass(frozen=True)
class IlSpec:
    id: str
    hourly_cap: float = 2.5
    daily_cap: float = 10.0
    price_multiplier: float = 1.5

    def __post_init__(self):
        if not (self.hourly_cap > 0 and self.daily_cap > 0):
            raise SpecError(f"IL {self.id}: caps must be > 0")
        if self.price_multiplier < 0:
            raise SpecError(f"IL {self.id}: price_multiplier must be >= 0")


@dataclass
class IlVars:
    p: dict
    total: list
    cost: LinExpr


def build_il_block(model: Model, ils, grid: TimeGrid, forecasts, aggregate_fraction=0.05) -> IlVars:
    """Curtailment with hourly, aggregate-fraction and daily caps."""
    p = {}
    cost = LinExpr()
    for il in ils:
        p[il.id] = [model.add_var(f"{il.id}.p[{k}]", 0.0, il.hourly_cap, role="input") for k in grid.hours]
        model.add(lin_sum(p[il.id]), "<=", il.daily_cap, f"{il.id}.daily")
        for i, v in enumerate(p[il.id]):
            cost.add_term(v, il.price_multiplier * float(forecasts.buy_price[i]))
    total = []
    for i, k in enumerate(grid.hours):
        t = lin_sum(p[il.id][i] for il in ils)
        if ils:
            model.add(t, "<=", aggregate_fraction * float(forecasts.elec_demand[i]), f"il_aggregate[{k}]")
        total.append(t)
    return IlVars(p, total, cost)


@dataclass(frozen=True)
class FlexThermalSpec:
    dr_max: float = 0.1

    def __post_init__(self):
        if not 0 <= self.dr_max <= 1:
            raise SpecError("dr_max must lie in [0, 1]")


@dataclass
class FlexThermalVars:
    dr: list
    shift: list
    served: list


def build_flex_thermal_block(model: Model, spec: FlexThermalSpec, grid: TimeGrid, forecasts) -> FlexThermalVars:
    """Served thermal demand ``(1 - DR_k) P0_k + Shift_k`` with day-total conservation."""
    p0 = np.asarray(forecasts.thermal_demand_nominal, dtype=float)
    movable = float(spec.dr_max * p0.sum())
    dr, shift, served = [], [], []
    for i, k in enumerate(grid.hours):
        d = model.add_var(f"dr[{k}]", 0.0, spec.dr_max, role="input")
        s = model.add_var(f"shift[{k}]", 0.0, movable, role="input")
        dr.append(d)
        shift.append(s)
        served.append(float(p0[i]) - float(p0[i]) * d + s)
    model.add(lin_sum(served), "==", float(p0.sum()), "thermal_conservation")
    return FlexThermalVars(dr, shift, served)
