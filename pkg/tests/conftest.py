import copy

import numpy as np
import pytest
import yaml

from meso.config import _build, default_config_path, default_forecast_path, load_config
from meso.timegrid_io import ForecastSet, load_forecasts

# downtime before hour 1 that selects each startup method with the bundled windows
DOWNTIME = {"hot": 2, "warm": 20, "cold": 60}


@pytest.fixture(scope="session")
def bundled_raw():
    with open(default_config_path()) as fh:
        return yaml.safe_load(fh)


@pytest.fixture(scope="session")
def config():
    return load_config(default_config_path())


@pytest.fixture(scope="session")
def forecasts(config):
    return load_forecasts(default_forecast_path(), config.grid, config.reserve_fraction)


def single_group_raw(bundled, method=None):
    """One CCPP group (GT1, ST1, BR1) without storage or flexible loads.

    With ``method`` every unit starts the day off, with the downtime that
    selects that startup method.
    """
    raw = copy.deepcopy(bundled)
    raw["units"] = [u for u in raw["units"] if u["id"] in ("GT1", "ST1", "BR1")]
    if method is not None:
        for u in raw["units"]:
            u["state"] = {"phase": "off", "prior_downtime": DOWNTIME[method]}
    raw["groups"] = [{"id": "CCPP1", "gt": "GT1", "st": "ST1", "boiler": "BR1"}]
    for key in ("bess", "pumps", "ils", "flex_thermal"):
        raw.pop(key, None)
    raw["tess"] = []
    return raw


def startup_forecasts(K=24):
    """Light load for nine hours, then more than the grid alone can carry."""
    elec = np.array([20.0] * 9 + [205.0] * (K - 9))
    heat = np.array([30.0] * 9 + [170.0] * (K - 9))
    return ForecastSet(elec, heat, np.zeros(K), np.full(K, 80.0), np.full(K, 50.0), np.zeros(K),
                       tuple(range(1, K + 1)))


@pytest.fixture(scope="session")
def startup_case(bundled_raw):
    def make(method):
        return _build(single_group_raw(bundled_raw, method)), startup_forecasts()
    return make


@pytest.fixture(scope="session")
def scenario_reports(config, forecasts):
    """The four bundled scenarios, solved once per test session."""
    from meso.scheduler import compare
    return compare(config, forecasts, time_limit=300.0)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line; it is printed now and repeated in the session summary."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
