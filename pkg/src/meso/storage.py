"""Battery and thermal storage: dynamics, bounds and degradation cost."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePointError, SpecError
from .mld_core import LinExpr, Model, MldModel, assemble_mld, simulate_step
from .timegrid_io import TimeGrid


@dataclass(frozen=True)
class BessSpec:
    eta_c: float = 0.97
    eta_d: float = 0.97
    p1c: float = 55.965
    soc_min: float = 0.2
    soc_max: float = 0.8
    pbc_max: float = 7.386645
    pbd_max: float = 7.615095
    capital_cost: float = 450.0
    capacity_kwh: float = 55_965.0
    lifetime_hours: float = 6000.0
    t_bc: float = 4.0
    t_bd: float = 4.0
    soc_init: float = 0.6
    exclusive_modes: bool = True

    def __post_init__(self):
        if not (0 < self.eta_c <= 1 and 0 < self.eta_d <= 1):
            raise SpecError("BESS efficiencies must lie in (0, 1]")
        if not 0 <= self.soc_min < self.soc_max <= 1:
            raise SpecError("need 0 <= soc_min < soc_max <= 1")
        if not self.soc_min <= self.soc_init <= self.soc_max:
            raise SpecError("soc_init outside [soc_min, soc_max]")
        for name in ("p1c", "pbc_max", "pbd_max", "capital_cost", "capacity_kwh", "lifetime_hours", "t_bc", "t_bd"):
            if not getattr(self, name) > 0:
                raise SpecError(f"BESS {name} must be > 0")

    @property
    def cost_per_mwh(self) -> tuple[float, float]:
        """Degradation cost in $ per MW of charge and discharge for one hour.

        ``I / (2 B_cap N) * P / T`` with ``P`` converted from MW to kW.
        """
        base = self.capital_cost / (2.0 * self.capacity_kwh * self.lifetime_hours) * 1000.0
        return base / self.t_bc, base / self.t_bd

    def next_soc(self, soc, pbc, pbd):
        return soc + (self.eta_c * pbc - pbd / self.eta_d) / self.p1c


@dataclass(frozen=True)
class TessSpec:
    h_min: float = 90.0
    h_max: float = 200.0
    gamma_max: float = 20.0
    h_init: float = 171.643
    group: str = ""
    q_max: float = 200.0

    def __post_init__(self):
        if not self.h_min <= self.h_init <= self.h_max:
            raise SpecError("TESS h_init outside [h_min, h_max]")
        if self.gamma_max < 0 or self.q_max < 0:
            raise SpecError("TESS gamma_max and q_max must be >= 0")

    @staticmethod
    def next_level(h, q_in, q_out, gamma):
        return h + q_in - q_out - gamma


@dataclass
class BessVars:
    soc: list  # SOC_1 .. SOC_{K+1}
    pbc: list
    pbd: list
    mode: list = field(default_factory=list)
    cost: LinExpr = field(default_factory=LinExpr)


@dataclass
class TessVars:
    level: list  # H_1 .. H_{K+1}
    q_in: list
    q_out: list
    gamma: list
    spec: TessSpec | None = None


def build_bess_block(model: Model, spec: BessSpec, grid: TimeGrid, name="bess") -> BessVars:
    K = grid.num_steps
    soc = [model.add_var(f"{name}.soc[1]", spec.soc_init, spec.soc_init, role="state")]
    for k in range(2, K + 2):
        soc.append(model.add_var(f"{name}.soc[{k}]", spec.soc_min, spec.soc_max, role="state"))
    pbc, pbd, mode = [], [], []
    cc, cd = spec.cost_per_mwh
    cost = LinExpr()
    for k in grid.hours:
        c = model.add_var(f"{name}.pbc[{k}]", 0.0, spec.pbc_max, role="input")
        d = model.add_var(f"{name}.pbd[{k}]", 0.0, spec.pbd_max, role="input")
        i = k - grid.start_hour
        model.add(
            soc[i + 1] - soc[i] - (spec.eta_c / spec.p1c) * c + (1.0 / (spec.eta_d * spec.p1c)) * d,
            "==", 0.0, f"{name}.soc_dyn[{k}]",
        )
        if spec.exclusive_modes:
            m = model.add_binary(f"{name}.mode[{k}]")
            model.add(c - spec.pbc_max * m, "<=", 0.0, f"{name}.chg[{k}]")
            model.add(d + spec.pbd_max * m, "<=", spec.pbd_max, f"{name}.dis[{k}]")
            mode.append(m)
        cost.add_term(c, cc).add_term(d, cd)
        pbc.append(c)
        pbd.append(d)
    return BessVars(soc, pbc, pbd, mode, cost)


def build_tess_block(model: Model, spec: TessSpec, grid: TimeGrid, group_surplus=None, name=None) -> TessVars:
    """Accumulator tank ``H_{k+1} = H_k + Q_in - Q_out - gamma``.

    With ``group_surplus`` (per-hour expressions) the charge is capped by the
    steam surplus of the associated CCPP group.
    """
    name = name or f"tess_{spec.group or 'p'}"
    K = grid.num_steps
    level = [model.add_var(f"{name}.H[1]", spec.h_init, spec.h_init, role="state")]
    for k in range(2, K + 2):
        level.append(model.add_var(f"{name}.H[{k}]", spec.h_min, spec.h_max, role="state"))
    q_in, q_out, gamma = [], [], []
    for k in grid.hours:
        i = k - grid.start_hour
        qi = model.add_var(f"{name}.qin[{k}]", 0.0, spec.q_max, role="input")
        qo = model.add_var(f"{name}.qout[{k}]", 0.0, spec.q_max, role="input")
        g = model.add_var(f"{name}.gamma[{k}]", 0.0, spec.gamma_max, role="aux")
        model.add(level[i + 1] - level[i] - qi + qo + g, "==", 0.0, f"{name}.dyn[{k}]")
        if group_surplus is not None:
            model.add(qi - group_surplus[i], "<=", 0.0, f"{name}.qin_cap[{k}]")
        q_in.append(qi)
        q_out.append(qo)
        gamma.append(g)
    return TessVars(level, q_in, q_out, gamma, spec)


def storage_mld(spec) -> MldModel:
    """One-step MLD template of a BESS or TESS for trajectory replay.

    BESS: state ``[soc]``, inputs ``[pbc, pbd]``, aux ``[mode]``.
    TESS: state ``[H]``, inputs ``[qin, qout]``, aux ``[gamma]``.
    Constraint rows bound the current state and the step's inputs.
    """
    m = Model("storage_step")
    if isinstance(spec, BessSpec):
        s = m.add_var("soc", spec.soc_min, spec.soc_max, role="state")
        c = m.add_var("pbc", 0.0, spec.pbc_max, role="input")
        d = m.add_var("pbd", 0.0, spec.pbd_max, role="input")
        mode = m.add_var("mode", 0.0, 1.0, role="aux")
        if spec.exclusive_modes:
            m.add(c - spec.pbc_max * mode, "<=", 0.0, "chg")
            m.add(d + spec.pbd_max * mode, "<=", spec.pbd_max, "dis")
        nxt = s + (spec.eta_c / spec.p1c) * c - (1.0 / (spec.eta_d * spec.p1c)) * d
        return assemble_mld(m, [(s, nxt)])
    if isinstance(spec, TessSpec):
        h = m.add_var("H", spec.h_min, spec.h_max, role="state")
        qi = m.add_var("qin", 0.0, spec.q_max, role="input")
        qo = m.add_var("qout", 0.0, spec.q_max, role="input")
        g = m.add_var("gamma", 0.0, spec.gamma_max, role="aux")
        return assemble_mld(m, [(h, h + qi - qo - g)])
    raise TypeError(f"no storage template for {type(spec).__name__}")


def replay(template: MldModel, x1, inputs, aux, tol=1e-6):
    """Roll ``template`` forward; returns the state trajectory and violations.

    ``inputs`` and ``aux`` are ``(K, n)`` arrays.  The final state is checked
    against the state bounds as well.
    """
    traj = [np.atleast_1d(np.asarray(x1, dtype=float))]
    problems = []
    for k in range(len(inputs)):
        x, u, w = traj[-1], np.asarray(inputs[k], float), np.asarray(aux[k], float)
        try:
            traj.append(simulate_step(template, x, u, w, tol))
        except InfeasiblePointError as exc:
            problems.append(f"hour {k + 1}: {exc}")
            traj.append(template.A @ x + template.B_u @ u + template.B_aux @ w + template.B_aff)
    # final-state bounds: rows that involve only the state
    ex = template.E_x.toarray()
    only_state = (np.abs(template.E_u.toarray()).sum(1) == 0) & (np.abs(template.E_aux.toarray()).sum(1) == 0)
    last = ex[only_state] @ traj[-1]
    lim = template.E_aff[only_state]
    for r in np.nonzero(last > lim + tol)[0]:
        problems.append(f"final state: {np.asarray(template.row_names)[only_state][r]}")
    return np.array(traj), problems


def bess_cost(spec: BessSpec, pbc, pbd) -> float:
    cc, cd = spec.cost_per_mwh
    return float(cc * np.sum(pbc) + cd * np.sum(pbd))


__all__ = [
    "BessSpec", "BessVars", "TessSpec", "TessVars", "bess_cost", "build_bess_block",
    "build_tess_block", "replay", "storage_mld",
]
