"""Day-ahead scheduling of a multi-energy hub with combined cycle plants,
storage and flexible loads, solved by a bundled MILP toolkit."""
from .config import SystemConfig, load_config
from .errors import (
    ConfigError, DomainError, FleetError, InfeasiblePointError, InputLengthError, MesoError, ParseError,
    SpecError, StateError,
)
from .timegrid_io import ForecastSet, TimeGrid, load_forecasts

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "FleetError", "ForecastSet", "InfeasiblePointError", "InputLengthError",
    "MesoError", "ParseError", "SpecError", "StateError", "SystemConfig", "TimeGrid", "load_config",
    "load_forecasts",
]
