"""Horizon definition, forecast CSV ingestion and wind power conversion."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, InputLengthError, ParseError

REQUIRED_COLUMNS = ("hour", "elec_demand_mw", "thermal_demand_mw", "res_mw", "buy_price", "sell_price")
RESERVE_COLUMN = "spin_reserve_mw"
DEFAULT_RESERVE_FRACTION = 0.10


@dataclass(frozen=True)
class TimeGrid:
    start_hour: int = 1
    num_steps: int = 24
    step_hours: float = 1.0

    def __post_init__(self):
        if self.num_steps < 1:
            raise DomainError("num_steps must be >= 1")
        if not self.step_hours > 0:
            raise DomainError("step_hours must be > 0")

    @property
    def hours(self) -> range:
        return range(self.start_hour, self.start_hour + self.num_steps)

    def __len__(self):
        return self.num_steps


@dataclass(frozen=True)
class ForecastSet:
    elec_demand: np.ndarray
    thermal_demand_nominal: np.ndarray
    res_generation: np.ndarray
    buy_price: np.ndarray
    sell_price: np.ndarray
    spin_reserve_req: np.ndarray
    hours: tuple = ()
    reserve_given: bool = True

    def __post_init__(self):
        n = len(self.elec_demand)
        for name in ("thermal_demand_nominal", "res_generation", "buy_price", "sell_price", "spin_reserve_req"):
            if len(getattr(self, name)) != n:
                raise InputLengthError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        for name in ("elec_demand", "thermal_demand_nominal", "res_generation", "spin_reserve_req"):
            arr = np.asarray(getattr(self, name), dtype=float)
            bad = np.nonzero(~(arr >= 0))[0]
            if bad.size:
                raise DomainError(f"{name} must be >= 0 (row {bad[0] + 1})")
        for name in ("buy_price", "sell_price"):
            arr = np.asarray(getattr(self, name), dtype=float)
            bad = np.nonzero(~np.isfinite(arr))[0]
            if bad.size:
                raise DomainError(f"{name} must be finite (row {bad[0] + 1})")

    @property
    def num_steps(self):
        return len(self.elec_demand)

    @classmethod
    def constant(cls, num_steps=24, elec=100.0, thermal=100.0, res=0.0, buy=100.0, sell=80.0, reserve=None):
        f = lambda v: np.full(num_steps, float(v))
        return cls(f(elec), f(thermal), f(res), f(buy), f(sell),
                   f(DEFAULT_RESERVE_FRACTION * elec if reserve is None else reserve),
                   tuple(range(1, num_steps + 1)), reserve is not None)


def load_forecasts(path, grid: TimeGrid, reserve_fraction: float = DEFAULT_RESERVE_FRACTION) -> ForecastSet:
    """Read the hourly forecast CSV.

    When the optional ``spin_reserve_mw`` column is absent the reserve
    requirement is ``reserve_fraction * elec_demand``.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ParseError(f"missing columns {missing} in {path}")
        has_reserve = RESERVE_COLUMN in header
        cols = list(REQUIRED_COLUMNS) + ([RESERVE_COLUMN] if has_reserve else [])
        pos = {c: header.index(c) for c in cols}
        data = {c: [] for c in cols}
        for rowno, row in enumerate(reader, 1):
            if not row or all(not cell.strip() for cell in row):
                continue
            for c in cols:
                try:
                    cell = row[pos[c]].strip()
                    data[c].append(int(cell) if c == "hour" else float(cell))
                except (IndexError, ValueError):
                    raise ParseError("unparseable cell", row=rowno, column=c) from None
    nrows = len(data["hour"])
    if nrows != grid.num_steps:
        raise InputLengthError(f"{path} has {nrows} data rows for a {grid.num_steps}-step grid")
    for c in ("elec_demand_mw", "thermal_demand_mw", "res_mw") + ((RESERVE_COLUMN,) if has_reserve else ()):
        for k, v in enumerate(data[c]):
            if not v >= 0:
                raise DomainError(f"{c} = {v} < 0 (row {k + 1})")
    elec = np.array(data["elec_demand_mw"])
    reserve = np.array(data[RESERVE_COLUMN]) if has_reserve else reserve_fraction * elec
    return ForecastSet(
        elec_demand=elec,
        thermal_demand_nominal=np.array(data["thermal_demand_mw"]),
        res_generation=np.array(data["res_mw"]),
        buy_price=np.array(data["buy_price"]),
        sell_price=np.array(data["sell_price"]),
        spin_reserve_req=reserve,
        hours=tuple(data["hour"]),
        reserve_given=has_reserve,
    )


def write_forecasts(forecasts: ForecastSet, path, include_reserve=None):
    include_reserve = forecasts.reserve_given if include_reserve is None else include_reserve
    header = list(REQUIRED_COLUMNS) + ([RESERVE_COLUMN] if include_reserve else [])
    hours = forecasts.hours or tuple(range(1, forecasts.num_steps + 1))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(forecasts.num_steps):
            row = [hours[k], forecasts.elec_demand[k], forecasts.thermal_demand_nominal[k],
                   forecasts.res_generation[k], forecasts.buy_price[k], forecasts.sell_price[k]]
            if include_reserve:
                row.append(forecasts.spin_reserve_req[k])
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


@dataclass(frozen=True)
class WindTurbineSpec:
    power_coeff: float
    correction: float
    air_density: float
    rotor_area: float

    def __post_init__(self):
        for name in ("power_coeff", "correction", "air_density", "rotor_area"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")
        if self.power_coeff > 16 / 27:
            raise DomainError(f"power coefficient {self.power_coeff} exceeds the Betz limit")


def wind_power(spec: WindTurbineSpec, wind_speed):
    """Turbine output in MW for a wind speed (m/s); scalars or arrays."""
    v = np.asarray(wind_speed, dtype=float)
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise DomainError("wind speed must be finite and >= 0")
    watts = 0.5 * spec.power_coeff * spec.correction * spec.air_density * spec.rotor_area * v**3
    out = watts / 1e6
    return float(out) if out.ndim == 0 else out


def wind_forecast(spec: WindTurbineSpec, speeds, n_turbines: int = 1) -> np.ndarray:
    """Aggregate farm output for an hourly wind-speed series."""
    return n_turbines * np.atleast_1d(wind_power(spec, speeds))


__all__ = [
    "ForecastSet", "TimeGrid", "WindTurbineSpec", "load_forecasts", "wind_forecast",
    "wind_power", "write_forecasts", "DEFAULT_RESERVE_FRACTION",
]
