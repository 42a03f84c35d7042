"""YAML configuration: every unit, storage, load and market spec of a system."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError, MesoError
from .flexible_loads import FlexThermalSpec, IlSpec, PumpFleet, PumpSpec
from .storage import BessSpec, TessSpec
from .thermal_units import CcppGroup, StartupMethodSpec, ThermalUnitSpec, UnitState
from .timegrid_io import DEFAULT_RESERVE_FRACTION, TimeGrid


@dataclass(frozen=True)
class GridExchangeSpec:
    p_eb_max: float = 50.0
    p_es_max: float = 50.0
    p_hb_max: float = 80.0
    contracted_capacity: float = 25.0
    ucc_rate: float = 12_860.0
    heat_price: float = 100.0
    gas_price: float = 3.81  # $ per mcf
    cf_per_mcf: float = 1000.0  # boiler fuel w_br is metered in cf/h

    @property
    def boiler_fuel_price(self) -> float:
        """$ per unit of boiler fuel flow for one hour."""
        return self.gas_price / self.cf_per_mcf

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if not v >= 0:
                raise ConfigError(f"grid.{k} must be >= 0")
        if not self.cf_per_mcf > 0:
            raise ConfigError("grid.cf_per_mcf must be > 0")


@dataclass(frozen=True)
class SolverSettings:
    gap: float = 0.01
    nodes: int = 100_000
    segments: int = 8
    time_limit: float | None = 600.0
    lp_method: str = "auto"


@dataclass
class SystemConfig:
    grid: TimeGrid
    units: list
    states: dict
    groups: list
    exchange: GridExchangeSpec
    bess: BessSpec | None
    tess: list
    pumps: PumpFleet | None
    ils: list
    flex_thermal: FlexThermalSpec | None
    reserve_fraction: float = DEFAULT_RESERVE_FRACTION
    solver: SolverSettings = field(default_factory=SolverSettings)
    source: str = ""

    def unit(self, uid) -> ThermalUnitSpec:
        for u in self.units:
            if u.id == uid:
                return u
        raise KeyError(uid)


def _methods(raw, defaults):
    spec = {**defaults, **(raw or {})}
    out = []
    for name in ("hot", "warm", "cold"):
        if name not in spec:
            raise ConfigError(f"startup method {name!r} missing")
        m = dict(spec[name])
        hi = m.get("window_hi", math.inf)
        m["window_hi"] = math.inf if hi in (None, "inf", ".inf") else float(hi)
        out.append(StartupMethodSpec(method=name, **m))
    return tuple(out)


def _build(raw: dict, source="") -> SystemConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    grid = TimeGrid(**raw.get("horizon", {}))
    method_defaults = raw.get("startup_defaults", {})
    units, states = [], {}
    for u in raw.get("units", []):
        u = dict(u)
        state = u.pop("state", {})
        kind = u.get("kind")
        defaults = method_defaults.get(kind, {}) if isinstance(method_defaults, dict) else {}
        u["methods"] = _methods(u.pop("methods", None), defaults)
        try:
            spec = ThermalUnitSpec(**u)
        except TypeError as exc:
            raise ConfigError(f"unit {u.get('id')}: {exc}") from None
        units.append(spec)
        states[spec.id] = UnitState(**state)
    groups = [CcppGroup(g["id"], g["gt"], g["st"], g["boiler"], tuple(g.get("extra_st", ()))) for g in raw.get("groups", [])]
    bess = BessSpec(**raw["bess"]) if raw.get("bess") else None
    tess = [TessSpec(**t) for t in raw.get("tess", [])]
    pumps = None
    if raw.get("pumps"):
        p = raw["pumps"]
        pumps = PumpFleet(tuple(PumpSpec(**q) for q in p.get("pumps", [])), float(p["daily_volume"]))
    ils = [IlSpec(**i) for i in raw.get("ils", [])]
    flex = FlexThermalSpec(**raw["flex_thermal"]) if raw.get("flex_thermal") else None
    solver = SolverSettings(**raw.get("solver", {}))
    return SystemConfig(
        grid=grid, units=units, states=states, groups=groups,
        exchange=GridExchangeSpec(**raw.get("grid", {})), bess=bess, tess=tess, pumps=pumps,
        ils=ils, flex_thermal=flex,
        reserve_fraction=float(raw.get("reserve_fraction", DEFAULT_RESERVE_FRACTION)),
        solver=solver, source=source,
    )


def load_config(path) -> SystemConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return _build(raw, str(path))
    except MesoError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("meso") / "data" / name))


def default_config_path() -> Path:
    return bundled_path("config.yaml")


def default_forecast_path() -> Path:
    return bundled_path("forecasts.csv")
