"""Variable registry, linear expressions and mixed logical dynamical assembly.

The optimizer consumes the flat constraint list of a :class:`Model` directly
(via :meth:`Model.to_milp`).  The canonical MLD matrices

    x(k+1) = A x(k) + B_u u(k) + B_aux w(k) + B_aff
    E_x x(k) + E_u u(k) + E_aux w(k) <= E_aff

are produced from one-step template models (see ``storage.storage_mld``) and
are used by the schedule validator to replay state trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from numbers import Real

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, BigMError, InfeasiblePointError


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    INTEGER = "integer"


ROLES = ("state", "input", "aux")
SENSES = ("<=", "==", ">=")


class VarRef:
    """Handle to a decision variable held by a :class:`Model`."""

    __slots__ = ("index", "kind", "lower", "upper", "name", "role")

    def __init__(self, index, kind, lower, upper, name, role="aux"):
        self.index = index
        self.kind = VarKind(kind)
        self.lower = float(lower)
        self.upper = float(upper)
        self.name = name
        self.role = role

    def __repr__(self):
        return f"VarRef({self.name!r}, [{self.lower:g}, {self.upper:g}], {self.kind.value})"

    def __hash__(self):
        return hash(self.index)

    @property
    def is_integer(self):
        return self.kind is not VarKind.CONTINUOUS

    def to_expr(self) -> "LinExpr":
        return LinExpr({self: 1.0})

    def __add__(self, other):
        return self.to_expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self.to_expr() - other

    def __rsub__(self, other):
        return other - self.to_expr()

    def __mul__(self, k):
        return self.to_expr() * k

    __rmul__ = __mul__

    def __neg__(self):
        return self.to_expr() * -1.0


class LinExpr:
    """Sparse affine expression ``sum(coef * var) + constant``.

    Terms are kept in insertion order, which makes row assembly deterministic.
    """

    __slots__ = ("terms", "constant")

    def __init__(self, terms=None, constant=0.0):
        self.terms: dict[VarRef, float] = dict(terms) if terms else {}
        self.constant = float(constant)

    @classmethod
    def of(cls, value) -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, VarRef):
            return value.to_expr()
        if isinstance(value, Real):
            return cls(constant=float(value))
        raise TypeError(f"cannot build a linear expression from {type(value).__name__}")

    def copy(self):
        return LinExpr(self.terms, self.constant)

    def add_term(self, var: VarRef, coef: float):
        """In-place accumulation; the workhorse of the model builders."""
        if coef:
            self.terms[var] = self.terms.get(var, 0.0) + coef
        return self

    def iadd(self, other, scale=1.0):
        other = LinExpr.of(other)
        for v, a in other.terms.items():
            self.terms[v] = self.terms.get(v, 0.0) + scale * a
        self.constant += scale * other.constant
        return self

    def __add__(self, other):
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().iadd(other, -1.0)

    def __rsub__(self, other):
        return LinExpr.of(other).copy().iadd(self, -1.0)

    def __mul__(self, k):
        if not isinstance(k, Real):
            raise TypeError("linear expressions only scale by numbers")
        k = float(k)
        return LinExpr({v: a * k for v, a in self.terms.items()}, self.constant * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1.0 / k)

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        parts = [f"{a:+g}*{v.name}" for v, a in self.terms.items()]
        if self.constant or not parts:
            parts.append(f"{self.constant:+g}")
        return " ".join(parts)

    def value(self, x) -> float:
        return self.constant + sum(a * x[v.index] for v, a in self.terms.items())

    def bounds(self) -> tuple[float, float]:
        """Interval of the expression implied by the variable bounds."""
        lo = hi = self.constant
        for v, a in self.terms.items():
            if a > 0:
                lo += a * v.lower
                hi += a * v.upper
            elif a < 0:
                lo += a * v.upper
                hi += a * v.lower
        return lo, hi


def lin_sum(items, constant=0.0) -> LinExpr:
    out = LinExpr(constant=constant)
    for it in items:
        out.iadd(it)
    return out


@dataclass
class LinConstraint:
    """``terms sense rhs`` with the expression constant folded into ``rhs``."""

    expr: LinExpr
    sense: str
    rhs: float
    name: str = ""
    big_m: float = 0.0

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        if self.expr.constant:
            self.rhs -= self.expr.constant
            self.expr = LinExpr(self.expr.terms)
        for a in self.expr.terms.values():
            if not math.isfinite(a):
                raise AssemblyError(f"non-finite coefficient in constraint {self.name!r}")

    @classmethod
    def make(cls, lhs, sense, rhs=0.0, name=""):
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        return cls(LinExpr(expr.terms), sense, -expr.constant, name)

    def activity(self, x) -> float:
        return sum(a * x[v.index] for v, a in self.expr.terms.items())

    def violation(self, x) -> float:
        act = self.activity(x)
        if self.sense == "<=":
            return max(0.0, act - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - act)
        return abs(act - self.rhs)


class Model:
    """Registry of variables and linear constraints.

    Variables carry an MLD role (``state``, ``input`` or ``aux``) so a
    one-step template can be turned into canonical matrices.
    """

    def __init__(self, name="meso"):
        self.name = name
        self.vars: list[VarRef] = []
        self.constraints: list[LinConstraint] = []
        self.objective = LinExpr()
        self._names: set[str] = set()

    @property
    def num_vars(self):
        return len(self.vars)

    def add_var(self, name, lower=0.0, upper=math.inf, kind=VarKind.CONTINUOUS, role="aux") -> VarRef:
        kind = VarKind(kind)
        if kind is VarKind.BINARY:
            lower, upper = max(0.0, lower), min(1.0, upper)
        if lower > upper:
            raise AssemblyError(f"variable {name!r} has empty bounds [{lower}, {upper}]")
        if role not in ROLES:
            raise AssemblyError(f"unknown role {role!r}")
        if name in self._names:
            raise AssemblyError(f"duplicate variable name {name!r}")
        self._names.add(name)
        v = VarRef(len(self.vars), kind, lower, upper, name, role)
        self.vars.append(v)
        return v

    def add_binary(self, name, role="aux") -> VarRef:
        return self.add_var(name, 0.0, 1.0, VarKind.BINARY, role)

    def add(self, lhs, sense, rhs=0.0, name="") -> LinConstraint:
        cons = LinConstraint.make(lhs, sense, rhs, name)
        self.constraints.append(cons)
        return cons

    def add_constraint(self, cons: LinConstraint) -> LinConstraint:
        self.constraints.append(cons)
        return cons

    def fix(self, var: VarRef, value: float):
        if not var.lower - 1e-9 <= value <= var.upper + 1e-9:
            raise AssemblyError(f"cannot fix {var.name} to {value} outside its bounds")
        var.lower = var.upper = float(value)

    def var_by_name(self, name) -> VarRef:
        for v in self.vars:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_milp(self):
        from .milp.problem import MilpProblem

        n = len(self.vars)
        rows, cols, vals = [], [], []
        lo = np.empty(len(self.constraints))
        hi = np.empty(len(self.constraints))
        for i, cons in enumerate(self.constraints):
            for v, a in cons.expr.terms.items():
                if a:
                    rows.append(i)
                    cols.append(v.index)
                    vals.append(a)
            lo[i] = cons.rhs if cons.sense in ("==", ">=") else -math.inf
            hi[i] = cons.rhs if cons.sense in ("==", "<=") else math.inf
        A = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), n))
        A.sum_duplicates()
        c = np.zeros(n)
        for v, a in self.objective.terms.items():
            c[v.index] += a
        return MilpProblem(
            c=c,
            A=A,
            row_lower=lo,
            row_upper=hi,
            lb=np.array([v.lower for v in self.vars]),
            ub=np.array([v.upper for v in self.vars]),
            integrality=np.array([v.is_integer for v in self.vars], dtype=bool),
            var_names=[v.name for v in self.vars],
            row_names=[c.name or f"r{i}" for i, c in enumerate(self.constraints)],
            obj_offset=self.objective.constant,
            name=self.name,
        )


def add_implication(model: Model, flag: VarRef, cons: LinConstraint, negate=False) -> list[LinConstraint]:
    """Emit ``flag = 1 => cons`` (or ``flag = 0 => cons`` with ``negate``).

    The big-M of each emitted row is the exact range the row can violate by,
    computed from the variable bounds.  Rows that are already implied by the
    bounds are not emitted.
    """
    if flag.kind is not VarKind.BINARY:
        raise BigMError(f"{flag.name} is not binary")
    if flag in cons.expr.terms:
        raise BigMError(f"{flag.name} appears inside the implied constraint")
    lo, hi = cons.expr.bounds()
    pieces = []
    if cons.sense in ("<=", "=="):
        pieces.append(("<=", hi - cons.rhs))
    if cons.sense in (">=", "=="):
        pieces.append((">=", cons.rhs - lo))
    out = []
    for sense, m in pieces:
        if not math.isfinite(m):
            raise BigMError(f"unbounded variable in implication {cons.name or cons.expr!r}")
        if m <= 0.0:
            continue
        expr = cons.expr.copy()
        sign = 1.0 if sense == "<=" else -1.0
        # <= : expr <= rhs + M(1-flag)      (negate: expr <= rhs + M*flag)
        # >= : expr >= rhs - M(1-flag)      (negate: expr >= rhs - M*flag)
        if negate:
            expr.add_term(flag, -sign * m)
            rhs = cons.rhs
        else:
            expr.add_term(flag, sign * m)
            rhs = cons.rhs + sign * m
        row = LinConstraint(expr, sense, rhs, cons.name, big_m=m)
        model.add_constraint(row)
        out.append(row)
    return out


def add_product(model: Model, flag: VarRef, x: VarRef, name=None) -> VarRef:
    """Fresh variable ``y`` with ``y = flag * x`` enforced by four linear rows."""
    if flag.kind is not VarKind.BINARY:
        raise BigMError(f"{flag.name} is not binary")
    L, U = x.lower, x.upper
    if not (math.isfinite(L) and math.isfinite(U)):
        raise BigMError(f"product with unbounded variable {x.name}")
    name = name or f"{flag.name}*{x.name}"
    y = model.add_var(name, min(0.0, L), max(0.0, U), role=x.role if x.role != "state" else "aux")
    model.add(y - U * flag, "<=", 0.0, f"{name}.ub")
    model.add(y - L * flag, ">=", 0.0, f"{name}.lb")
    model.add(y - x - L * flag, "<=", -L, f"{name}.xl")
    model.add(y - x - U * flag, ">=", -U, f"{name}.xu")
    return y


@dataclass(frozen=True)
class MldModel:
    A: sp.csr_matrix
    B_u: sp.csr_matrix
    B_aux: sp.csr_matrix
    B_aff: np.ndarray
    E_x: sp.csr_matrix
    E_u: sp.csr_matrix
    E_aux: sp.csr_matrix
    E_aff: np.ndarray
    state_names: tuple = ()
    input_names: tuple = ()
    aux_names: tuple = ()
    row_names: tuple = field(default=())

    @property
    def sizes(self):
        return len(self.state_names), len(self.input_names), len(self.aux_names)

    def violations(self, x, u, w, tol=1e-6) -> list[str]:
        x, u, w = (np.asarray(v, dtype=float).reshape(-1) for v in (x, u, w))
        nx, nu, nw = self.sizes
        if x.size != nx or u.size != nu or w.size != nw:
            raise AssemblyError(f"vector sizes {x.size, u.size, w.size} do not match partition {nx, nu, nw}")
        lhs = self.E_x @ x + self.E_u @ u + self.E_aux @ w
        bad = np.nonzero(lhs > self.E_aff + tol)[0]
        return [f"{self.row_names[i]}: {lhs[i]:.9g} > {self.E_aff[i]:.9g}" for i in bad]


def assemble_mld(model: Model, dynamics, constraints=None, include_bounds=True) -> MldModel:
    """Build canonical matrices from a one-step template model.

    ``dynamics`` is a sequence of ``(state_var, next_state_expr)`` pairs; every
    state declared in ``model`` needs exactly one row.  ``constraints``
    defaults to all constraints registered on ``model``.
    """
    states = [v for v in model.vars if v.role == "state"]
    inputs = [v for v in model.vars if v.role == "input"]
    auxs = [v for v in model.vars if v.role == "aux"]
    pos = {}
    for group in (states, inputs, auxs):
        for i, v in enumerate(group):
            pos[v] = (v.role, i)
    nx, nu, nw = len(states), len(inputs), len(auxs)

    dyn = {}
    for sv, expr in dynamics:
        if sv.role != "state" or sv not in pos:
            raise AssemblyError(f"dynamics row for undeclared state {sv.name}")
        if sv in dyn:
            raise AssemblyError(f"duplicate dynamics row for {sv.name}")
        dyn[sv] = LinExpr.of(expr)
    if len(dyn) != nx:
        missing = [v.name for v in states if v not in dyn]
        raise AssemblyError(f"states without dynamics: {missing}")

    def split(exprs, nrows):
        trip = {"state": ([], [], []), "input": ([], [], []), "aux": ([], [], [])}
        aff = np.zeros(nrows)
        for r, expr in enumerate(exprs):
            aff[r] = expr.constant
            for v, a in expr.terms.items():
                if v not in pos:
                    raise AssemblyError(f"row {r} references unknown variable {v.name}")
                role, c = pos[v]
                t = trip[role]
                t[0].append(r)
                t[1].append(c)
                t[2].append(a)
        shape = {"state": nx, "input": nu, "aux": nw}
        mats = {
            k: sp.csr_matrix((t[2], (t[0], t[1])), shape=(nrows, shape[k])) for k, t in trip.items()
        }
        return mats, aff

    dmats, daff = split([dyn[v] for v in states], nx)

    rows, names = [], []
    for cons in model.constraints if constraints is None else constraints:
        e = LinExpr(cons.expr.terms, -cons.rhs)
        if cons.sense in ("<=", "=="):
            rows.append(e)
            names.append(cons.name or "row")
        if cons.sense in (">=", "=="):
            rows.append(-e)
            names.append((cons.name or "row") + ".ge")
    if include_bounds:
        for v in states + inputs + auxs:
            if math.isfinite(v.upper):
                rows.append(LinExpr({v: 1.0}, -v.upper))
                names.append(f"{v.name}.ub")
            if math.isfinite(v.lower):
                rows.append(LinExpr({v: -1.0}, v.lower))
                names.append(f"{v.name}.lb")
    cmats, caff = split(rows, len(rows))
    return MldModel(
        A=dmats["state"],
        B_u=dmats["input"],
        B_aux=dmats["aux"],
        B_aff=daff,
        E_x=cmats["state"],
        E_u=cmats["input"],
        E_aux=cmats["aux"],
        E_aff=-caff,
        state_names=tuple(v.name for v in states),
        input_names=tuple(v.name for v in inputs),
        aux_names=tuple(v.name for v in auxs),
        row_names=tuple(names),
    )


def simulate_step(model: MldModel, x, u, w, tol=1e-6) -> np.ndarray:
    bad = model.violations(x, u, w, tol)
    if bad:
        raise InfeasiblePointError("; ".join(bad))
    x, u, w = (np.asarray(v, dtype=float).reshape(-1) for v in (x, u, w))
    return model.A @ x + model.B_u @ u + model.B_aux @ w + model.B_aff


_MATRICES = ("A", "B_u", "B_aux", "B_aff", "E_x", "E_u", "E_aux", "E_aff")


def dump_mld(model: MldModel, path):
    """Write the matrices as sparse triplets.

    Format: a header line ``%matrix <name> <rows> <cols>`` per matrix followed
    by ``<row> <col> <value>`` lines (0-based, ``repr`` floats).  Vectors are
    written as ``<rows> x 1`` matrices.
    """
    with open(path, "w") as fh:
        fh.write(f"%states {' '.join(model.state_names)}\n")
        fh.write(f"%inputs {' '.join(model.input_names)}\n")
        fh.write(f"%aux {' '.join(model.aux_names)}\n")
        for key in _MATRICES:
            m = getattr(model, key)
            if isinstance(m, np.ndarray):
                m = sp.csr_matrix(m.reshape(-1, 1))
            coo = sp.coo_matrix(m)
            fh.write(f"%matrix {key} {m.shape[0]} {m.shape[1]}\n")
            order = np.lexsort((coo.col, coo.row))
            for i in order:
                fh.write(f"{coo.row[i]} {coo.col[i]} {float(coo.data[i])!r}\n")


def load_mld_dump(path) -> dict:
    """Parse a :func:`dump_mld` file back into dense arrays keyed by matrix name."""
    out, cur = {}, None
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "%matrix":
                cur = parts[1]
                out[cur] = np.zeros((int(parts[2]), int(parts[3])))
            elif parts[0].startswith("%"):
                continue
            else:
                out[cur][int(parts[0]), int(parts[1])] = float(parts[2])
    return out
