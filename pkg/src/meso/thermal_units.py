"""Gas turbines, steam turbines and boilers: commitment logic, startup
trajectories, reserve, ramping and heat coupling.

Every unit is described by pulse variables per hour:

* ``w_su[n][k]``  startup of method ``n`` initiated at hour ``k``
* ``w_sd[k]``     shutdown initiated at hour ``k`` (first desynchronization
  hour of a GT/ST, first off hour of a boiler)

and a binary dispatch state ``x[k]``.  Phase indicators are window sums of
the pulses, e.g. a method with ``ts`` synchronization and ``tk`` soak hours
started at ``k0`` is in synchronization on ``k0 .. k0+ts-1``, in soak on
``k0+ts .. k0+ts+tk-1`` and enters dispatch at ``k0+ts+tk``.  Pulses before
hour 1 are constants reconstructed from :class:`UnitState`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import SpecError, StateError
from .mld_core import LinExpr, LinConstraint, Model, VarRef, add_implication, lin_sum
from .timegrid_io import TimeGrid

METHODS = ("hot", "warm", "cold")


class UnitKind(str, Enum):
    GT = "GT"
    ST = "ST"
    BR = "BR"


class Phase(str, Enum):
    OFF = "off"
    SYNCH = "synch"
    SOAK = "soak"
    DISPATCH = "dispatch"
    DESYNC = "desync"


@dataclass(frozen=True)
class StartupMethodSpec:
    method: str
    window_lo: float
    window_hi: float
    synch_duration: int = 0
    soak_duration: int = 1
    soak_power: float = 0.0
    startup_cost: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise SpecError(f"unknown startup method {self.method!r}")
        if not self.window_lo <= self.window_hi:
            raise SpecError(f"{self.method}: window_lo > window_hi")
        if self.synch_duration < 0 or self.soak_duration < 0:
            raise SpecError(f"{self.method}: negative phase duration")
        if self.synch_duration + self.soak_duration < 1:
            raise SpecError(f"{self.method}: startup must take at least one hour")
        if self.soak_power < 0 or self.startup_cost < 0:
            raise SpecError(f"{self.method}: soak power and cost must be >= 0")

    @property
    def lead_time(self) -> int:
        """Hours from startup initiation to the first dispatch hour."""
        return self.synch_duration + self.soak_duration

    def covers(self, downtime) -> bool:
        return self.window_lo <= downtime <= self.window_hi


def check_partition(methods) -> None:
    """Windows must tile ``[1, inf)`` with integer hours and no overlap."""
    names = sorted(m.method for m in methods)
    if names != sorted(METHODS):
        raise SpecError(f"need exactly one hot, warm and cold method, got {names}")
    ordered = sorted(methods, key=lambda m: m.window_lo)
    expect = 1
    for m in ordered:
        if m.window_lo != expect:
            raise SpecError(f"startup windows do not partition [1, inf): gap or overlap at {expect}")
        if math.isinf(m.window_hi):
            expect = math.inf
            continue
        expect = m.window_hi + 1
    if not math.isinf(expect):
        raise SpecError("startup windows do not extend to infinity")


def method_for_downtime(spec: "ThermalUnitSpec", downtime) -> StartupMethodSpec:
    for m in spec.methods:
        if m.covers(downtime):
            return m
    raise StateError(f"{spec.id}: no startup method covers a downtime of {downtime} h")


@dataclass(frozen=True)
class ThermalUnitSpec:
    id: str
    kind: UnitKind
    p_e_min: float = 0.0
    p_e_max: float = 0.0
    ut: int = 3
    dt: int = 3
    methods: tuple = ()
    desync_duration: int = 1
    shutdown_cost: float = 0.0
    msr: float | None = None
    fuel_quad: float = 0.0
    fuel_lin: float = 0.0
    fuel_const: float = 0.0
    heat_a0: float = 0.0
    heat_a1: float = 0.0
    fuel_to_heat: float = 0.0
    steam_b1: float = 0.0
    steam_b2: float = 0.0
    # boiler fuel range in cf per hour while dispatched
    fuel_min: float = 0.0
    fuel_max: float = 0.0
    ramp_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", UnitKind(self.kind))
        object.__setattr__(self, "methods", tuple(self.methods))
        check_partition(self.methods)
        if not 0 <= self.p_e_min <= self.p_e_max:
            raise SpecError(f"{self.id}: need 0 <= p_e_min <= p_e_max")
        if self.fuel_quad < 0:
            raise SpecError(f"{self.id}: fuel_quad < 0 makes the fuel curve nonconvex")
        if self.ut < 1 or self.dt < 1:
            raise SpecError(f"{self.id}: ut and dt must be >= 1")
        if self.kind is UnitKind.BR:
            if self.desync_duration:
                raise SpecError(f"{self.id}: boilers have no desynchronization phase")
            if not 0 <= self.fuel_min <= self.fuel_max or self.fuel_max <= 0:
                raise SpecError(f"{self.id}: need 0 <= fuel_min <= fuel_max, fuel_max > 0")
            if self.fuel_to_heat <= 0:
                raise SpecError(f"{self.id}: fuel_to_heat must be > 0")
        elif self.desync_duration < 0:
            raise SpecError(f"{self.id}: negative desync duration")
        if self.kind is not UnitKind.ST and any(m.synch_duration for m in self.methods):
            raise SpecError(f"{self.id}: only steam turbines have a synchronization phase")

    def method(self, name) -> StartupMethodSpec:
        for m in self.methods:
            if m.method == name:
                return m
        raise KeyError(name)

    @property
    def electrical(self) -> bool:
        return self.kind is not UnitKind.BR


@dataclass(frozen=True)
class UnitState:
    """Condition at hour 0, the last hour before the horizon.

    ``hours_in_phase`` counts the hours spent in ``phase`` before hour 0, so
    the phase began at hour ``-hours_in_phase``.  ``prior_downtime`` is the
    time from shutdown initiation to startup initiation for units in
    synch/soak and the downtime a startup at hour 1 would see for units off.
    """

    phase: Phase = Phase.DISPATCH
    hours_in_phase: int = 10
    prior_downtime: int = 0
    initial_power: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phase", Phase(self.phase))
        if self.hours_in_phase < 0 or self.prior_downtime < 0:
            raise StateError("hours_in_phase and prior_downtime must be >= 0")


@dataclass
class UnitVarSet:
    """Per-hour handles for one unit; index 0 is hour 1.

    Pulses and states are binary variables.  Phase indicators, ``u`` and the
    thermal quantities are affine expressions of them and of history
    constants, which keeps the model small without losing integrality.
    """

    spec: ThermalUnitSpec
    x_disp: list
    w_sd: list
    w_su: dict
    u: list
    w_disp: list
    w_off: list
    w_synch: dict
    w_soak: dict
    w_desyn: list
    p_e: list = field(default_factory=list)
    w_br: list = field(default_factory=list)
    sr: list = field(default_factory=list)
    p_h: list = field(default_factory=list)
    h: list = field(default_factory=list)
    history: dict = field(default_factory=dict)


class _Pulses:
    """Pulse train combining in-horizon variables with constant history."""

    def __init__(self, vars_, hist, horizon):
        self.vars = vars_
        self.hist = dict(hist)
        self.K = horizon

    def at(self, k) -> LinExpr:
        if 1 <= k <= self.K:
            return self.vars[k - 1].to_expr()
        return LinExpr(constant=self.hist.get(k, 0.0))

    def window(self, lo, hi) -> LinExpr:
        """Sum over hours ``lo..hi`` inclusive (``lo`` may be ``-inf``)."""
        out = LinExpr()
        if hi < lo:
            return out
        for t, v in self.hist.items():
            if lo <= t <= hi and not 1 <= t <= self.K:
                out.constant += v
        first = max(1, lo)
        last = min(self.K, hi)
        for t in range(int(first), int(last) + 1):
            out.add_term(self.vars[t - 1], 1.0)
        return out


def unit_history(spec: ThermalUnitSpec, state: UnitState) -> dict:
    """Constant pulses before hour 1 implied by ``state``.

    Returns ``{"sd": {hour: 1}, "su": {method: {hour: 1}}, "x0": 0|1, "p0": MW}``.
    """
    h = state.hours_in_phase
    td = spec.desync_duration
    sd, su = {}, {m: {} for m in METHODS}
    x0, p0 = 0, 0.0
    ph = state.phase
    if ph is Phase.DISPATCH:
        if spec.electrical and not spec.p_e_min - 1e-9 <= state.initial_power <= spec.p_e_max + 1e-9:
            raise StateError(
                f"{spec.id}: initial power {state.initial_power} outside [{spec.p_e_min}, {spec.p_e_max}]"
            )
        x0, p0 = 1, float(state.initial_power) if spec.electrical else 0.0
        # dispatch began at -h; its startup is far enough back to be irrelevant
        # except for the dispatch pulse used by the minimum-up rows
        m = spec.methods[0]
        su[m.method][-h - m.lead_time] = 1.0
    elif ph is Phase.OFF:
        if state.initial_power:
            raise StateError(f"{spec.id}: initial_power must be 0 when off")
        d = state.prior_downtime
        if d < td + 1:
            raise StateError(f"{spec.id}: off with prior_downtime {d} < desync duration + 1")
        sd[1 - d] = 1.0
    elif ph in (Phase.SYNCH, Phase.SOAK):
        if state.initial_power:
            raise StateError(f"{spec.id}: initial_power must be 0 during startup")
        d = state.prior_downtime
        if d < 1:
            raise StateError(f"{spec.id}: startup phase needs prior_downtime >= 1")
        m = method_for_downtime(spec, d)
        if ph is Phase.SYNCH:
            if h >= m.synch_duration:
                raise StateError(f"{spec.id}: {h} h into a {m.synch_duration} h synchronization")
            start = -h
        else:
            if h >= m.soak_duration:
                raise StateError(f"{spec.id}: {h} h into a {m.soak_duration} h soak")
            start = -h - m.synch_duration
        su[m.method][start] = 1.0
        sd[start - d] = 1.0
    elif ph is Phase.DESYNC:
        if state.initial_power:
            raise StateError(f"{spec.id}: initial_power must be 0 during desynchronization")
        if h >= td:
            raise StateError(f"{spec.id}: {h} h into a {td} h desynchronization")
        sd[-h] = 1.0
    return {"sd": sd, "su": su, "x0": x0, "p0": p0}


def build_commitment_block(model: Model, spec: ThermalUnitSpec, state: UnitState, grid: TimeGrid) -> UnitVarSet:
    """Declare the unit's variables and emit its commitment logic.

    Rows: state update, phase exclusivity, minimum up/down time (windows
    truncated at the horizon end), startup-method windows and the
    semicontinuous output range.
    """
    K = grid.num_steps
    uid = spec.id
    hist = unit_history(spec, state)
    x = [model.add_binary(f"{uid}.x[{k}]", role="state") for k in grid.hours]
    w_sd_v = [model.add_binary(f"{uid}.wsd[{k}]") for k in grid.hours]
    sd = _Pulses(w_sd_v, hist["sd"], K)
    su_vars, su = {}, {}
    for m in spec.methods:
        su_vars[m.method] = [model.add_binary(f"{uid}.wsu_{m.method}[{k}]") for k in grid.hours]
        su[m.method] = _Pulses(su_vars[m.method], hist["su"][m.method], K)

    def x_at(k):
        if k >= 1:
            return x[k - 1].to_expr()
        return LinExpr(constant=hist["x0"] if k == 0 else 0.0)

    def disp_pulse(k):
        return lin_sum(su[m.method].at(k - m.lead_time) for m in spec.methods)

    synch = {m.method: [] for m in spec.methods}
    soak = {m.method: [] for m in spec.methods}
    desyn, off, w_disp, u = [], [], [], []
    td = spec.desync_duration
    for k in range(1, K + 1):
        for m in spec.methods:
            p = su[m.method]
            synch[m.method].append(p.window(k - m.synch_duration + 1, k))
            soak[m.method].append(p.window(k - m.lead_time + 1, k - m.synch_duration))
        # desync_k = sum_{tau=k+1}^{k+td} w_off_tau with w_off_tau = w_sd_{tau-td}
        desyn.append(sd.window(k - td + 1, k) if td else LinExpr())
        off.append(sd.at(k - td))
        w_disp.append(disp_pulse(k))
        u.append(x[k - 1] + lin_sum(synch[m][-1] + soak[m][-1] for m in synch))

    for k in range(1, K + 1):
        i = k - 1
        model.add(x[i] - x_at(k - 1) - w_disp[i] + sd.at(k), "==", 0.0, f"{uid}.state[{k}]")
        model.add(sd.at(k) - x_at(k - 1), "<=", 0.0, f"{uid}.sdfrom[{k}]")
        busy = x[i] + lin_sum(synch[m][i] + soak[m][i] for m in synch) + desyn[i]
        model.add(busy, "<=", 1.0, f"{uid}.excl[{k}]")

    # minimum up time: a dispatch pulse at t keeps x on for t..t+UT-1
    for t in range(2 - spec.ut, K + 1):
        lo, hi = max(t, 1), min(t + spec.ut - 1, K)
        if hi < lo:
            continue
        pulse = disp_pulse(t)
        if not pulse.terms and not pulse.constant:
            continue
        span = lin_sum(x[k - 1] for k in range(lo, hi + 1))
        model.add(span - (hi - lo + 1) * pulse, ">=", 0.0, f"{uid}.minup[{t}]")
    # minimum down time: a shutdown pulse at t keeps u off for t..t+DT-1
    for t in range(2 - spec.dt, K + 1):
        lo, hi = max(t, 1), min(t + spec.dt - 1, K)
        if hi < lo:
            continue
        pulse = sd.at(t)
        if not pulse.terms and not pulse.constant:
            continue
        span = lin_sum(u[k - 1] for k in range(lo, hi + 1))
        n = hi - lo + 1
        model.add(span + n * pulse, "<=", n, f"{uid}.mindn[{t}]")

    # startup method selection: the most recent shutdown lies in [k-t_u, k-t_l]
    for m in spec.methods:
        for k in range(1, K + 1):
            var = su_vars[m.method][k - 1]
            window = sd.window(k - m.window_hi, k - m.window_lo)
            if not window.terms and window.constant < 1:
                var.upper = 0.0
                continue
            if window.constant < 1:
                model.add(var - window, "<=", 0.0, f"{uid}.suwin_{m.method}[{k}]")
            recent = sd.window(k - m.window_lo + 1, k - 1)
            if recent.constant >= 1:
                var.upper = 0.0
            elif recent.terms:
                model.add(var + recent, "<=", 1.0, f"{uid}.surecent_{m.method}[{k}]")

    vs = UnitVarSet(
        spec=spec, x_disp=x, w_sd=w_sd_v, w_su=su_vars, u=u, w_disp=w_disp, w_off=off,
        w_synch=synch, w_soak=soak, w_desyn=desyn, history=hist,
    )
    if spec.electrical:
        for k in grid.hours:
            p = model.add_var(f"{uid}.pe[{k}]", 0.0, spec.p_e_max, role="input")
            xi = x[k - 1]
            add_implication(model, xi, LinConstraint.make(p, "<=", 0.0, f"{uid}.pmax[{k}]"), negate=True)
            add_implication(model, xi, LinConstraint.make(p, ">=", spec.p_e_min, f"{uid}.pmin[{k}]"))
            vs.p_e.append(p)
    else:
        for k in grid.hours:
            f = model.add_var(f"{uid}.wbr[{k}]", 0.0, spec.fuel_max, role="input")
            xi = x[k - 1]
            add_implication(model, xi, LinConstraint.make(f, "<=", 0.0, f"{uid}.fmax[{k}]"), negate=True)
            add_implication(model, xi, LinConstraint.make(f, ">=", spec.fuel_min, f"{uid}.fmin[{k}]"))
            vs.w_br.append(f)
    return vs


def build_soak_power_terms(spec: ThermalUnitSpec, vs: UnitVarSet) -> list:
    """Per-hour electrical output of the unit while soaking (empty for boilers)."""
    if not spec.electrical:
        return [LinExpr() for _ in vs.x_disp]
    out = []
    for i in range(len(vs.x_disp)):
        out.append(lin_sum(spec.method(n).soak_power * vs.w_soak[n][i] for n in vs.w_soak))
    return out


def startup_cost_terms(spec: ThermalUnitSpec, vs: UnitVarSet) -> LinExpr:
    """Startup cost charged per startup-phase hour.

    Cold and warm starts pay on synchronization and soak hours, hot starts on
    soak hours only.
    """
    out = LinExpr()
    for i in range(len(vs.x_disp)):
        for n in vs.w_soak:
            c = spec.method(n).startup_cost
            out.iadd(vs.w_soak[n][i], c)
            if n != "hot":
                out.iadd(vs.w_synch[n][i], c)
    return out


def shutdown_cost_terms(spec: ThermalUnitSpec, vs: UnitVarSet) -> LinExpr:
    """Shutdown cost per desynchronization hour (per shutdown for boilers)."""
    src = vs.w_desyn if spec.desync_duration else vs.w_sd
    return lin_sum(spec.shutdown_cost * s for s in src)


def build_reserve_block(model: Model, units, grid: TimeGrid, forecasts, grid_import, p_eb_max=50.0):
    """Spinning reserve: unit headroom plus unused import capacity covers SR_k.

    ``units`` is a sequence of :class:`UnitVarSet` for GTs and STs.
    Because ``P_e`` is forced to zero when ``x_disp`` is zero, the products
    ``SR*x_disp`` and ``P_e*x_disp`` reduce to the variables themselves once
    ``SR`` is likewise gated by ``x_disp``.
    """
    for vs in units:
        spec = vs.spec
        if not spec.electrical:
            continue
        if spec.msr is None:
            raise SpecError(f"{spec.id}: missing maximum spinning rate")
        cap = 10.0 * spec.msr
        for k in grid.hours:
            i = k - 1
            sr = model.add_var(f"{spec.id}.sr[{k}]", 0.0, min(cap, spec.p_e_max), role="aux")
            model.add(sr - cap * vs.x_disp[i], "<=", 0.0, f"{spec.id}.srcap[{k}]")
            model.add(sr + vs.p_e[i] - spec.p_e_max * vs.x_disp[i], "<=", 0.0, f"{spec.id}.srhead[{k}]")
            vs.sr.append(sr)
    for k in grid.hours:
        i = k - 1
        req = float(forecasts.spin_reserve_req[i])
        head = lin_sum(vs.sr[i] for vs in units if vs.sr)
        model.add(head - grid_import[i], ">=", req - p_eb_max, f"reserve[{k}]")


def build_ramp_block(model: Model, spec: ThermalUnitSpec, vs: UnitVarSet, state: UnitState):
    """Steam turbine ramp band ``|P_k - P_{k-1}| <= ramp_fraction * P_max``.

    Hour 1 is anchored to the initial power.  GTs and boilers are exempt.
    """
    if spec.kind is not UnitKind.ST:
        return []
    band = spec.ramp_fraction * spec.p_e_max
    p0 = vs.history.get("p0", state.initial_power if state.phase is Phase.DISPATCH else 0.0)
    rows = []
    prev = LinExpr(constant=p0)
    for k, p in enumerate(vs.p_e, 1):
        d = p - prev
        rows.append(model.add(d, "<=", band, f"{spec.id}.rampup[{k}]"))
        rows.append(model.add(d, ">=", -band, f"{spec.id}.rampdn[{k}]"))
        prev = p.to_expr()
    return rows


@dataclass(frozen=True)
class CcppGroup:
    """One GT, one ST and one boiler feeding a shared steam header and TESS.

    ``extra_st`` lists further steam turbines attached to this group that
    draw on the pooled surplus of every group.
    """

    id: str
    gt: str
    st: str
    boiler: str
    extra_st: tuple = ()


def build_heat_coupling(model: Model, groups, unit_vars: dict, tess_in: dict | None = None) -> dict:
    """Heat production, steam draw and the per-group steam balance.

    Fills ``p_h`` (GT, boiler) and ``h`` (ST) on the unit var sets and returns
    ``{group_id: surplus}`` where ``surplus = P_h^GT + P_h^BR - h^ST``.
    ``tess_in`` maps group ids to per-hour TESS charging variables.
    """
    for vs in unit_vars.values():
        s, n = vs.spec, len(vs.x_disp)
        if s.kind is UnitKind.GT:
            vs.p_h = [s.heat_a0 * vs.p_e[i] + s.heat_a1 * vs.x_disp[i] for i in range(n)]
        elif s.kind is UnitKind.BR:
            vs.p_h = [s.fuel_to_heat * vs.w_br[i] for i in range(n)]
        else:
            vs.h = [s.steam_b1 * vs.p_e[i] + s.steam_b2 * vs.x_disp[i] for i in range(n)]

    def member(uid, kind, gid):
        vs = unit_vars.get(uid)
        if vs is None:
            raise SpecError(f"group {gid}: unit {uid!r} is not defined")
        if vs.spec.kind is not kind:
            raise SpecError(f"group {gid}: {uid} is a {vs.spec.kind.value}, expected {kind.value}")
        return vs

    surplus = {}
    extras = []
    for g in groups:
        gt = member(g.gt, UnitKind.GT, g.id)
        st = member(g.st, UnitKind.ST, g.id)
        br = member(g.boiler, UnitKind.BR, g.id)
        extras.extend(member(e, UnitKind.ST, g.id) for e in g.extra_st)
        n = len(gt.x_disp)
        surplus[g.id] = [gt.p_h[i] + br.p_h[i] - st.h[i] for i in range(n)]
        for i in range(n):
            rhs = LinExpr() if tess_in is None or g.id not in tess_in else tess_in[g.id][i]
            model.add(surplus[g.id][i] - rhs, ">=", 0.0, f"{g.id}.steam[{i + 1}]")
    if extras and surplus:
        n = len(extras[0].x_disp)
        for i in range(n):
            pooled = lin_sum(s[i] for s in surplus.values()) - lin_sum(e.h[i] for e in extras)
            if tess_in:
                pooled = pooled - lin_sum(tess_in[g][i] for g in tess_in)
            model.add(pooled, ">=", 0.0, f"pooled_steam[{i + 1}]")
    return surplus


def phase_sequence(spec: ThermalUnitSpec, values: dict) -> list:
    """Phase label per hour from solved pulse values (validator helper).

    ``values`` holds 0/1 arrays ``x``, ``synch`` and ``soak`` (dicts by
    method) and ``desync``.
    """
    out = []
    for i, xv in enumerate(values["x"]):
        if xv > 0.5:
            out.append("dispatch")
        elif any(values["synch"][n][i] > 0.5 for n in values["synch"]):
            out.append("synch")
        elif any(values["soak"][n][i] > 0.5 for n in values["soak"]):
            out.append("soak")
        elif values["desync"][i] > 0.5:
            out.append("desync")
        else:
            out.append("off")
    return out
