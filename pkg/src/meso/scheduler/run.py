"""Solving single scenarios and the four-scenario comparison."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..errors import ValidationError
from ..milp import solve_milp, write_mps
from ..milp.problem import GAP_LIMIT, Solution, relative_gap
from .assemble import SCENARIOS, Assembly, ScenarioId, build
from .report import ScheduleReport, report_costs
from .validate import validate_schedule

log = logging.getLogger(__name__)


def _settings(config, gap, nodes, time_limit):
    s = config.solver
    return (
        s.gap if gap is None else gap,
        s.nodes if nodes is None else nodes,
        s.time_limit if time_limit is None else time_limit,
    )


def map_solution(x_from, names_from, problem) -> np.ndarray:
    """Carry a solution over to ``problem`` by variable name; absent names are 0."""
    src = dict(zip(names_from, x_from))
    return np.array([src.get(n, 0.0) for n in problem.var_names], dtype=float)


def _checked(rep: ScheduleReport, asm: Assembly) -> ScheduleReport:
    # every solver schedule must pass the independent re-check
    if rep.x is not None:
        found = validate_schedule(rep, asm.config, asm.forecasts, asm.scenario)
        if found:
            raise ValidationError([str(v) for v in found])
    rep.stats["var_names"] = list(asm.problem.var_names)
    return rep


def solve_assembly(asm: Assembly, gap=None, nodes=None, time_limit=None, incumbent=None) -> Solution:
    gap, nodes, time_limit = _settings(asm.config, gap, nodes, time_limit)
    log.info("solving %s (gap %.3g, node limit %d)", asm.scenario.value, gap, nodes)
    sol = solve_milp(asm.problem, gap_tol=gap, node_limit=nodes, time_limit=time_limit,
                     lp_method=asm.config.solver.lp_method, incumbent=incumbent)
    log.info("%s: %s objective %.6g bound %.6g after %d nodes, %.1f s",
             asm.scenario.value, sol.status, sol.objective, sol.bound, sol.nodes, sol.runtime)
    return sol


def run_scenario(config, forecasts, scenario, gap=None, nodes=None, segments=None, time_limit=None,
                 incumbent=None, mps_path=None) -> ScheduleReport:
    """Build, optionally export, solve, validate and report one scenario.

    Raises :class:`~meso.errors.ValidationError` if the schedule fails the
    independent re-check, which would point at a modelling bug.

    ``incumbent`` is a ``(values, names)`` pair from another model; it is
    mapped by variable name and offered to the search as a starting point.
    """
    asm = build(config, forecasts, scenario, segments)
    if mps_path is not None:
        write_mps(asm.problem, mps_path)
    x0 = None
    if incumbent is not None:
        x0 = map_solution(incumbent[0], incumbent[1], asm.problem)
    sol = solve_assembly(asm, gap, nodes, time_limit, x0)
    return _checked(report_costs(sol, asm), asm)


def _worker(args):
    config, forecasts, scenario, gap, nodes, segments, time_limit = args
    return run_scenario(config, forecasts, scenario, gap, nodes, segments, time_limit)


def _threads(threads):
    if threads is None:
        try:
            threads = int(os.environ.get("MESO_THREADS", "0"))
        except ValueError:
            threads = 0
    return max(0, threads)


def compare(config, forecasts, scenarios=SCENARIOS, gap=None, nodes=None, segments=None,
            time_limit=None, threads=None) -> list:
    """Solve the scenarios in order of increasing flexibility.

    Each scenario's feasible set contains the previous one's, so the previous
    schedule (mapped by variable name) is a valid starting point.  Serial runs
    pass it to the search directly; parallel runs (``MESO_THREADS > 1``)
    solve independently and afterwards keep the carried-over schedule when it
    is cheaper than what the search returned.
    """
    scenarios = [ScenarioId.parse(s) for s in scenarios]
    scenarios.sort(key=list(ScenarioId).index)
    n = _threads(threads)
    reports = []
    if n > 1:
        jobs = [(config, forecasts, s, gap, nodes, segments, time_limit) for s in scenarios]
        with ProcessPoolExecutor(max_workers=min(n, len(jobs))) as pool:
            reports = list(pool.map(_worker, jobs))
    else:
        prev = None
        for s in scenarios:
            seed = None
            if prev is not None and prev.x is not None:
                seed = (prev.x, prev.stats["var_names"])
            rep = run_scenario(config, forecasts, s, gap, nodes, segments, time_limit, incumbent=seed)
            reports.append(rep)
            prev = rep if rep.x is not None else prev
    return _repair(config, forecasts, reports, segments)


def _repair(config, forecasts, reports, segments):
    """Replace a schedule by its predecessor's when that one is cheaper.

    The search works on the piecewise-linear fuel cost within a relative gap,
    so the reported (true quadratic) totals of two nested scenarios may come
    out inverted by a small amount; the predecessor's schedule is feasible
    for the larger scenario and then the better answer.
    """
    out = []
    for rep in reports:
        prev = next((r for r in reversed(out) if r.x is not None), None)
        if prev is not None and (rep.x is None or prev.total < rep.total):
            asm = build(config, forecasts, rep.scenario, segments)
            x = map_solution(prev.x, prev.stats["var_names"], asm.problem)
            if asm.problem.max_violation(x) <= 1e-6:
                log.info("%s: keeping the %s schedule (%.6g < %.6g)", rep.scenario.value,
                         prev.scenario.value, prev.total, rep.total)
                obj = asm.problem.objective_value(x)
                bound = min(rep.bound, obj)
                sol = Solution(status=rep.status if rep.x is not None else GAP_LIMIT, x=x, objective=obj,
                               bound=bound, gap=relative_gap(obj, bound), nodes=rep.stats.get("nodes", 0),
                               lp_solves=rep.stats.get("lp_solves", 0), runtime=rep.stats.get("runtime_s", 0.0))
                new = _checked(report_costs(sol, asm), asm)
                new.stats["carried_from"] = prev.scenario.value
                rep = new
        out.append(rep)
    return out
