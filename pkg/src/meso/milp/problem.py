"""Exchange types between the model builders and the solvers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from ..errors import AssemblyError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
GAP_LIMIT = "gap_limit"

INT_TOL = 1e-6


@dataclass
class MilpProblem:
    """``min c.x + obj_offset`` s.t. ``row_lower <= A x <= row_upper``, ``lb <= x <= ub``."""

    c: np.ndarray
    A: sp.csr_matrix
    row_lower: np.ndarray
    row_upper: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray
    var_names: list = field(default_factory=list)
    row_names: list = field(default_factory=list)
    obj_offset: float = 0.0
    name: str = "MESO"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = sp.csr_matrix(self.A, dtype=float)
        m = self.A.shape[0]
        if self.A.shape[1] != n:
            raise AssemblyError(f"matrix has {self.A.shape[1]} columns for {n} variables")
        self.row_lower = np.asarray(self.row_lower, dtype=float).reshape(m)
        self.row_upper = np.asarray(self.row_upper, dtype=float).reshape(m)
        self.lb = np.asarray(self.lb, dtype=float).reshape(n)
        self.ub = np.asarray(self.ub, dtype=float).reshape(n)
        self.integrality = np.asarray(self.integrality, dtype=bool).reshape(n)
        if not self.var_names:
            self.var_names = [f"x{j}" for j in range(n)]
        if not self.row_names:
            self.row_names = [f"r{i}" for i in range(m)]
        if len(self.var_names) != n or len(self.row_names) != m:
            raise AssemblyError("name lists do not match problem dimensions")
        if not np.all(np.isfinite(self.c)) or not math.isfinite(self.obj_offset):
            raise AssemblyError("objective must be finite")
        if not np.all(np.isfinite(self.A.data)):
            raise AssemblyError("constraint matrix has non-finite entries")
        if np.any(self.lb > self.ub) or np.any(self.row_lower > self.row_upper):
            raise AssemblyError("empty bound interval")

    @classmethod
    def from_dense(cls, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None, integrality=None):
        """Convenience constructor mirroring the ``linprog`` argument style."""
        c = np.asarray(c, dtype=float)
        n = c.size
        blocks, lo, hi = [], [], []
        if A_ub is not None and len(A_ub):
            blocks.append(np.atleast_2d(A_ub))
            lo.append(np.full(len(b_ub), -np.inf))
            hi.append(np.asarray(b_ub, dtype=float))
        if A_eq is not None and len(A_eq):
            blocks.append(np.atleast_2d(A_eq))
            lo.append(np.asarray(b_eq, dtype=float))
            hi.append(np.asarray(b_eq, dtype=float))
        A = sp.csr_matrix(np.vstack(blocks)) if blocks else sp.csr_matrix((0, n))
        return cls(
            c=c,
            A=A,
            row_lower=np.concatenate(lo) if lo else np.zeros(0),
            row_upper=np.concatenate(hi) if hi else np.zeros(0),
            lb=np.zeros(n) if lb is None else lb,
            ub=np.full(n, np.inf) if ub is None else ub,
            integrality=np.zeros(n, bool) if integrality is None else integrality,
        )

    @property
    def num_vars(self):
        return self.c.size

    @property
    def num_rows(self):
        return self.A.shape[0]

    @property
    def num_integer(self):
        return int(self.integrality.sum())

    def relaxed(self) -> "MilpProblem":
        return replace(self, integrality=np.zeros_like(self.integrality))

    def objective_value(self, x) -> float:
        return float(self.c @ x) + self.obj_offset

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        ax = self.A @ x if self.num_rows else np.zeros(0)
        parts = [
            np.maximum(self.row_lower - ax, 0.0),
            np.maximum(ax - self.row_upper, 0.0),
            np.maximum(self.lb - x, 0.0),
            np.maximum(x - self.ub, 0.0),
        ]
        return float(max((p.max() for p in parts if p.size), default=0.0))

    def max_integrality_violation(self, x) -> float:
        xi = np.asarray(x)[self.integrality]
        return float(np.abs(xi - np.round(xi)).max()) if xi.size else 0.0

    def index(self, name) -> int:
        try:
            return self._index[name]
        except AttributeError:
            self._index = {nm: j for j, nm in enumerate(self.var_names)}
            return self._index[name]


@dataclass
class Solution:
    status: str
    x: np.ndarray | None = None
    objective: float = math.inf
    bound: float = -math.inf
    gap: float = math.inf
    nodes: int = 0
    lp_solves: int = 0
    runtime: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def has_values(self):
        return self.x is not None

    def values(self, problem: MilpProblem) -> dict:
        if self.x is None:
            return {}
        return dict(zip(problem.var_names, map(float, self.x)))


def relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    if not math.isfinite(bound):
        return math.inf
    return max(0.0, incumbent - bound) / max(abs(incumbent), 1e-10)
