import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meso.errors import SpecError, StateError
from meso.milp import INFEASIBLE, OPTIMAL, solve_milp
from meso.mld_core import Model
from meso.thermal_units import (
    CcppGroup, Phase, StartupMethodSpec, ThermalUnitSpec, UnitState, build_commitment_block,
    build_heat_coupling, build_ramp_block, build_reserve_block, build_soak_power_terms, method_for_downtime,
    phase_sequence, shutdown_cost_terms, startup_cost_terms, unit_history,
)
from meso.timegrid_io import ForecastSet, TimeGrid


@pytest.fixture(scope="module")
def units(config):
    return {u.id: u for u in config.units}


def val(e, x):
    return e.value(x) if hasattr(e, "value") else x[e.index]


def test_method_lookup_by_downtime(units):
    gt = units["GT1"]
    assert [method_for_downtime(gt, d).method for d in (1, 8, 9, 48, 49, 500)] == [
        "hot", "hot", "warm", "warm", "cold", "cold"]
    with pytest.raises(StateError):
        method_for_downtime(gt, 0)


def test_partition_must_tile(units):
    hot, warm, cold = units["GT1"].methods
    gap = StartupMethodSpec("warm", 10, 48, soak_duration=2)
    with pytest.raises(SpecError):
        ThermalUnitSpec("X", "GT", 40.0, 100.0, methods=(hot, gap, cold), msr=2.0)
    with pytest.raises(SpecError):
        ThermalUnitSpec("X", "GT", 40.0, 100.0, methods=(hot, warm), msr=2.0)


def test_spec_rejections(units):
    gt = units["GT1"]
    with pytest.raises(SpecError):
        ThermalUnitSpec("X", "GT", 50.0, 40.0, methods=gt.methods)
    with pytest.raises(SpecError):
        ThermalUnitSpec("X", "GT", 0.0, 40.0, methods=gt.methods, fuel_quad=-1.0)
    st_hot = StartupMethodSpec("hot", 1, 8, synch_duration=1)
    with pytest.raises(SpecError):
        ThermalUnitSpec("X", "GT", 0.0, 40.0, methods=(st_hot,) + gt.methods[1:])
    with pytest.raises(SpecError):
        StartupMethodSpec("hot", 1, 8, synch_duration=0, soak_duration=0)


def test_state_rejections(units):
    gt = units["GT1"]
    with pytest.raises(StateError):
        unit_history(gt, UnitState(Phase.DISPATCH, 5, initial_power=120.0))
    with pytest.raises(StateError):
        unit_history(gt, UnitState(Phase.OFF, prior_downtime=1))
    with pytest.raises(StateError):
        unit_history(gt, UnitState(Phase.SOAK, hours_in_phase=1, prior_downtime=2))
    with pytest.raises(StateError):
        UnitState(Phase.OFF, hours_in_phase=-1)


def test_hot_start_window_after_short_outage(units):
    m = Model()
    vs = build_commitment_block(m, units["GT1"], UnitState(Phase.OFF, prior_downtime=2), TimeGrid(num_steps=4))
    assert vs.w_su["hot"][0].upper == 1.0
    assert vs.w_su["warm"][0].upper == 0.0
    assert vs.w_su["cold"][0].upper == 0.0
    # the window admits it, but two hours down is inside the minimum down time
    m.fix(vs.w_su["hot"][0], 1.0)
    assert solve_milp(m.to_milp()).status == INFEASIBLE
    m = Model()
    vs = build_commitment_block(m, units["GT1"], UnitState(Phase.OFF, prior_downtime=4), TimeGrid(num_steps=4))
    m.fix(vs.w_su["hot"][0], 1.0)
    sol = solve_milp(m.to_milp())
    assert sol.status == OPTIMAL
    assert val(vs.w_soak["hot"][0], sol.x) == pytest.approx(1.0)
    assert sol.x[vs.x_disp[1].index] == pytest.approx(1.0)


def test_long_dispatch_may_shut_down_at_once(units):
    m = Model()
    vs = build_commitment_block(m, units["GT1"], UnitState(Phase.DISPATCH, 10, initial_power=60.0),
                                TimeGrid(num_steps=6))
    m.fix(vs.w_sd[0], 1.0)
    sol = solve_milp(m.to_milp())
    assert sol.status == OPTIMAL
    assert sol.x[vs.x_disp[0].index] == pytest.approx(0.0)
    assert val(vs.w_desyn[0], sol.x) == pytest.approx(1.0)


def test_recent_dispatch_cannot_shut_down(units):
    m = Model()
    vs = build_commitment_block(m, units["GT1"], UnitState(Phase.DISPATCH, 1, initial_power=60.0),
                                TimeGrid(num_steps=6))
    m.fix(vs.w_sd[0], 1.0)
    assert solve_milp(m.to_milp()).status == INFEASIBLE


def test_dispatch_pulse_holds_for_min_up(units):
    m = Model()
    gt = units["GT1"]
    grid = TimeGrid(num_steps=10)
    vs = build_commitment_block(m, gt, UnitState(Phase.OFF, prior_downtime=30), grid)
    # a warm start at hour 3 puts the first dispatch hour at 5
    m.fix(vs.w_su["warm"][2], 1.0)
    for v in vs.x_disp:
        m.objective.iadd(v, 1.0)  # prefer being off
    sol = solve_milp(m.to_milp())
    assert sol.status == OPTIMAL
    assert val(vs.w_disp[4], sol.x) == pytest.approx(1.0)
    x = [round(sol.x[v.index]) for v in vs.x_disp]
    assert x[4:7] == [1, 1, 1]
    assert sum(x) == 3


def test_soak_power_and_boiler(units):
    m = Model()
    gt = ThermalUnitSpec("G", "GT", 40.0, 100.0, methods=tuple(
        StartupMethodSpec(n, lo, hi, soak_duration=d, soak_power=20.0) for n, lo, hi, d in
        (("hot", 1, 8, 1), ("warm", 9, 48, 2), ("cold", 49, np.inf, 3))), msr=2.0)
    vs = build_commitment_block(m, gt, UnitState(Phase.OFF, prior_downtime=2), TimeGrid(num_steps=3))
    x = np.zeros(m.num_vars)
    x[vs.w_su["hot"][0].index] = 1.0
    assert build_soak_power_terms(gt, vs)[0].value(x) == 20.0
    bvs = build_commitment_block(m, units["BR1"], UnitState(), TimeGrid(num_steps=3))
    assert all(not t.terms and t.constant == 0 for t in build_soak_power_terms(units["BR1"], bvs))


def test_startup_and_shutdown_costs(units):
    m = Model()
    st1 = units["ST1"]
    vs = build_commitment_block(m, st1, UnitState(Phase.OFF, prior_downtime=20), TimeGrid(num_steps=6))
    x = np.zeros(m.num_vars)
    x[vs.w_su["warm"][0].index] = 1.0
    # warm start: one synch hour and two soak hours, each charged
    assert startup_cost_terms(st1, vs).value(x) == pytest.approx(3 * 1200.0)
    x = np.zeros(m.num_vars)
    x[vs.w_su["hot"][0].index] = 1.0
    # hot starts pay for soak hours only
    assert startup_cost_terms(st1, vs).value(x) == pytest.approx(800.0)
    y = np.zeros(m.num_vars)
    y[vs.w_sd[2].index] = 1.0
    assert shutdown_cost_terms(st1, vs).value(y) == pytest.approx(600.0)


def reserve_case(units, msr, req, fix_disp=None):
    m = Model()
    gt = units["GT1"]
    spec = ThermalUnitSpec("G", "GT", 40.0, 100.0, methods=gt.methods, msr=msr)
    grid = TimeGrid(num_steps=1)
    vs = build_commitment_block(m, spec, UnitState(Phase.DISPATCH, 10, initial_power=60.0), grid)
    imp = m.add_var("imp[1]", 0.0, 50.0)
    fc = ForecastSet.constant(1, reserve=req)
    build_reserve_block(m, [vs], grid, fc, [imp])
    if fix_disp is not None:
        m.fix(vs.x_disp[0], fix_disp)
    return m, vs, imp


def test_reserve_cap_from_spinning_rate(units):
    m, vs, imp = reserve_case(units, 2.0, 0.0)
    m.objective.iadd(vs.sr[0], -1.0)
    m.fix(vs.p_e[0], 40.0)
    sol = solve_milp(m.to_milp())
    assert sol.x[vs.sr[0].index] == pytest.approx(20.0)


def test_reserve_needs_dispatch(units):
    m, vs, imp = reserve_case(units, 2.0, 0.0, fix_disp=0.0)
    m.objective.iadd(vs.sr[0], -1.0)
    sol = solve_milp(m.to_milp())
    assert sol.x[vs.sr[0].index] == pytest.approx(0.0)


def test_zero_spinning_rate_is_vacuous(units):
    m, vs, imp = reserve_case(units, 0.0, 0.0)
    assert vs.sr[0].upper == 0.0
    # unused import headroom covers any requirement up to its capacity
    m2, _, _ = reserve_case(units, 0.0, 50.0)
    assert solve_milp(m2.to_milp()).status == OPTIMAL


def test_missing_spinning_rate(units):
    m = Model()
    spec = ThermalUnitSpec("G", "GT", 40.0, 100.0, methods=units["GT1"].methods)
    vs = build_commitment_block(m, spec, UnitState(Phase.DISPATCH, 10, initial_power=60.0), TimeGrid(num_steps=1))
    with pytest.raises(SpecError):
        build_reserve_block(m, [vs], TimeGrid(num_steps=1), ForecastSet.constant(1), [m.add_var("i")])


def ramp_range(units, p0, rated=120.0):
    st1 = units["ST1"]
    spec = ThermalUnitSpec("S", "ST", 0.0, rated, methods=st1.methods, msr=1.5)
    out = []
    for sign in (1.0, -1.0):
        m = Model()
        state = UnitState(Phase.DISPATCH, 10, initial_power=p0)
        vs = build_commitment_block(m, spec, state, TimeGrid(num_steps=2))
        rows = build_ramp_block(m, spec, vs, state)
        m.objective.iadd(vs.p_e[0], sign)
        sol = solve_milp(m.to_milp())
        out.append(sol.x[vs.p_e[0].index])
    return rows, tuple(out)


def test_ramp_band(units):
    rows, (lo, hi) = ramp_range(units, 60.0)
    assert len(rows) == 4
    assert (lo, hi) == pytest.approx((0.0, 120.0))
    _, (lo, hi) = ramp_range(units, 100.0)
    assert (lo, hi) == pytest.approx((40.0, 120.0))


def test_gas_turbines_do_not_ramp(units):
    m = Model()
    gt = units["GT1"]
    state = UnitState(Phase.DISPATCH, 10, initial_power=60.0)
    vs = build_commitment_block(m, gt, state, TimeGrid(num_steps=2))
    assert build_ramp_block(m, gt, vs, state) == []


def coupled(units, k=1):
    m = Model()
    grid = TimeGrid(num_steps=k)
    state = UnitState(Phase.DISPATCH, 10, initial_power=50.0)
    vs = {uid: build_commitment_block(m, units[uid], state if uid != "BR1" else UnitState(), grid)
          for uid in ("GT1", "ST1", "BR1")}
    surplus = build_heat_coupling(m, [CcppGroup("CCPP1", "GT1", "ST1", "BR1")], vs)
    return m, vs, surplus


def test_heat_coupling_examples(units):
    m, vs, surplus = coupled(units)
    x = np.zeros(m.num_vars)
    for v in vs.values():
        x[v.x_disp[0].index] = 1.0
    x[vs["GT1"].p_e[0].index] = 100.0
    x[vs["ST1"].p_e[0].index] = 50.0
    x[vs["BR1"].w_br[0].index] = 100000.0
    assert vs["GT1"].p_h[0].value(x) == pytest.approx(232.09)
    assert vs["ST1"].h[0].value(x) == pytest.approx(159.05)
    assert vs["BR1"].p_h[0].value(x) == pytest.approx(40.0)
    assert surplus["CCPP1"][0].value(x) == pytest.approx(232.09 + 40.0 - 159.05)


def test_heat_coupling_rejects_wrong_member(units):
    m, vs, _ = coupled(units)
    with pytest.raises(SpecError):
        build_heat_coupling(m, [CcppGroup("G", "ST1", "ST1", "BR1")], vs)
    with pytest.raises(SpecError):
        build_heat_coupling(m, [CcppGroup("G", "GT9", "ST1", "BR1")], vs)


def test_steam_balance_is_enforced(units):
    m, vs, surplus = coupled(units)
    m.fix(vs["GT1"].x_disp[0], 0.0)
    m.fix(vs["BR1"].x_disp[0], 0.0)
    m.fix(vs["ST1"].x_disp[0], 1.0)
    assert solve_milp(m.to_milp()).status == INFEASIBLE


def test_phase_sequence_labels():
    vals = {"x": [0, 0, 1, 0, 0], "synch": {"hot": [1, 0, 0, 0, 0]}, "soak": {"hot": [0, 1, 0, 0, 0]},
            "desync": [0, 0, 0, 1, 0]}
    assert phase_sequence(None, vals) == ["synch", "soak", "dispatch", "desync", "off"]


# Independent checker for solved commitment trajectories.  Phases are rebuilt
# from the pulse values alone, then the timing rules are read off them.

def rebuild(spec, hist, x, wsd, wsu, K):
    """Label hours ``1-pad..K`` from pulses, history included."""
    pad = 80
    lab = {k: set() for k in range(1 - pad, K + 1)}
    sd = {k: v for k, v in hist["sd"].items()}
    sd.update({k + 1: wsd[k] for k in range(K)})
    starts = []
    for n, pulses in hist["su"].items():
        for t, v in pulses.items():
            if v:
                starts.append((t, n))
    for n, seq in wsu.items():
        starts.extend((k + 1, n) for k in range(K) if seq[k])
    for t, n in starts:
        m = spec.method(n)
        for k in range(t, t + m.synch_duration):
            lab.get(k, set()).add("synch")
        for k in range(t + m.synch_duration, t + m.lead_time):
            lab.get(k, set()).add("soak")
    for t, v in sd.items():
        if v:
            for k in range(t, t + spec.desync_duration):
                lab.get(k, set()).add("desync")
    for k in range(1, K + 1):
        if x[k - 1]:
            lab[k].add("dispatch")
    return lab, sd, starts


def check_trajectory(spec, state, x, wsd, wsu, K):
    hist = unit_history(spec, state)
    lab, sd, starts = rebuild(spec, hist, x, wsd, wsu, K)
    for k in range(1, K + 1):
        assert len(lab[k]) <= 1, (k, lab[k])
    xs = [hist["x0"]] + list(x)
    for k in range(1, K + 1):
        if xs[k] and not xs[k - 1]:
            # entering dispatch needs a startup that finished just now
            assert any(t + spec.method(n).lead_time == k for t, n in starts)
            run = xs[k:k + spec.ut]
            assert all(run), "minimum up time"
        if wsd[k - 1]:
            assert xs[k - 1] and not xs[k]
            down = [bool(lab.get(j)) and "desync" not in lab[j] for j in range(k, min(k + spec.dt, K + 1))]
            assert not any(down), "minimum down time"
    for t, n in starts:
        if t < 1:
            continue
        prior = [s for s, v in sd.items() if v and s < t]
        assert prior, "startup without a shutdown"
        assert spec.method(n).covers(t - max(prior))


STATES = st.one_of(
    st.builds(lambda h, p: UnitState(Phase.DISPATCH, h, initial_power=p), st.integers(0, 12), st.floats(40, 100)),
    st.builds(lambda d: UnitState(Phase.OFF, prior_downtime=d), st.integers(2, 60)),
    st.just(UnitState(Phase.DESYNC, 0)),
)


@settings(max_examples=25, deadline=None)
@given(STATES, st.lists(st.floats(-60, 60), min_size=10, max_size=10), st.sampled_from(["GT1", "ST1"]))
def test_solved_commitment_obeys_timing(units, state, price, uid):
    spec = units[uid]
    K = len(price)
    if spec.kind.value == "ST" and state.phase is Phase.DISPATCH:
        state = UnitState(Phase.DISPATCH, state.hours_in_phase, initial_power=min(state.initial_power, 60.0))
    m = Model()
    vs = build_commitment_block(m, spec, state, TimeGrid(num_steps=K))
    for i, p in enumerate(price):
        m.objective.iadd(vs.x_disp[i], p)
        m.objective.iadd(vs.p_e[i], -0.1)
    m.objective.iadd(startup_cost_terms(spec, vs), 0.001)
    sol = solve_milp(m.to_milp(), gap_tol=1e-9)
    assert sol.status == OPTIMAL
    r = lambda v: round(val(v, sol.x))
    x = [r(v) for v in vs.x_disp]
    wsd = [r(v) for v in vs.w_sd]
    wsu = {n: [r(v) for v in seq] for n, seq in vs.w_su.items()}
    check_trajectory(spec, state, x, wsd, wsu, K)
    # output is zero whenever the unit is not dispatched
    for xi, p in zip(x, vs.p_e):
        pe = sol.x[p.index]
        assert pe <= 1e-7 if not xi else spec.p_e_min - 1e-7 <= pe <= spec.p_e_max + 1e-7
    # at most one startup method per hour
    for k in range(K):
        assert sum(wsu[n][k] for n in wsu) <= 1
