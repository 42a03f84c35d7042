"""LP relaxation solvers.

``simplex`` is a bounded-variable two-phase primal simplex on a dense
tableau (kernels in :mod:`meso.milp.kernels`).  It is exact enough for
oracle-sized problems and is the default below ``AUTO_DENSE_LIMIT`` tableau
entries.  Larger relaxations go to HiGHS through ``highspy``.
"""
from __future__ import annotations

import math
import time

import numpy as np

from ..errors import NumericsError
from . import kernels
from .kernels import AT_LOWER, AT_UPPER, BASIC
from .problem import INFEASIBLE, OPTIMAL, UNBOUNDED, MilpProblem, Solution

AUTO_DENSE_LIMIT = 400_000
FEAS_TOL = 1e-7
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_LIMIT = 50


class _StandardForm:
    """``min c.z  s.t.  M z = b,  0 <= z <= u`` built from a :class:`MilpProblem`."""

    def __init__(self, c, A, row_lo, row_hi, lb, ub):
        n = c.size
        cols = []  # (source column, sign)
        offset = np.zeros(n)
        upper = []
        cost = []
        for j in range(n):
            lo_j, hi_j = lb[j], ub[j]
            if math.isfinite(lo_j):
                offset[j] = lo_j
                cols.append((j, 1.0))
                upper.append(hi_j - lo_j)
                cost.append(c[j])
            elif math.isfinite(hi_j):
                offset[j] = hi_j
                cols.append((j, -1.0))
                upper.append(math.inf)
                cost.append(-c[j])
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
                upper += [math.inf, math.inf]
                cost += [c[j], -c[j]]
        self.n = n
        self.cols = cols
        self.offset = offset

        Ad = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
        shift = Ad @ offset if n else np.zeros(Ad.shape[0])
        src = np.array([s for s, _ in cols], dtype=np.int64)
        sgn = np.array([g for _, g in cols])
        base = Ad[:, src] * sgn if len(cols) else np.zeros((Ad.shape[0], 0))

        rows, rhs, slacks = [], [], []
        for i in range(Ad.shape[0]):
            lo_i, hi_i = row_lo[i] - shift[i], row_hi[i] - shift[i]
            if not math.isfinite(lo_i) and not math.isfinite(hi_i):
                continue
            if math.isfinite(lo_i) and math.isfinite(hi_i) and hi_i - lo_i <= 1e-12 * max(1.0, abs(lo_i)):
                rows.append(i)
                rhs.append(lo_i)
                slacks.append(None)
            elif math.isfinite(hi_i) and not math.isfinite(lo_i):
                rows.append(i)
                rhs.append(hi_i)
                slacks.append((1.0, math.inf))
            else:
                rows.append(i)
                rhs.append(lo_i)
                slacks.append((-1.0, hi_i - lo_i))
        m = len(rows)
        ns = sum(s is not None for s in slacks)
        nz = len(cols)
        M = np.zeros((m, nz + ns))
        M[:, :nz] = base[rows, :] if m else np.zeros((0, nz))
        b = np.array(rhs, dtype=float)
        ub_all = list(upper)
        cost_all = list(cost)
        slack_col = [-1] * m
        k = nz
        for r, s in enumerate(slacks):
            if s is None:
                continue
            M[r, k] = s[0]
            ub_all.append(s[1])
            cost_all.append(0.0)
            slack_col[r] = k
            k += 1
        neg = b < 0
        M[neg] *= -1.0
        b[neg] *= -1.0
        self.M = M
        self.b = b
        self.u = np.array(ub_all, dtype=float)
        self.cost = np.array(cost_all, dtype=float)
        self.slack_col = slack_col
        self.m = m
        self.nz = nz

    def recover(self, z):
        x = self.offset.copy()
        for p, (j, g) in enumerate(self.cols):
            x[j] += g * z[p]
        return x


def _run_simplex(T, beta, basis, status, u, allowed, max_iter):
    """Iterate until optimal; returns ``'optimal'`` or ``'unbounded'`` and the pivot count."""
    m = T.shape[0] - 1
    degenerate = 0
    it = 0
    while True:
        if it >= max_iter:
            raise NumericsError(f"simplex iteration limit {max_iter} reached (m={m}, n={T.shape[1]})")
        bland = degenerate >= DEGENERATE_LIMIT
        j = kernels.price(T[m], status, allowed, DUAL_TOL, bland)
        if j < 0:
            return OPTIMAL, it
        it += 1
        direction = 1 if status[j] == AT_LOWER else -1
        col = np.ascontiguousarray(T[:m, j])
        r, step, to_upper = kernels.ratio_test(col, beta, u[basis], basis, direction, PIVOT_TOL, bland)
        flip = u[j]
        if flip <= step:
            if not math.isfinite(flip):
                return UNBOUNDED, it
            beta -= direction * flip * col
            status[j] = AT_UPPER if status[j] == AT_LOWER else AT_LOWER
            degenerate = 0
            continue
        if r < 0:
            return UNBOUNDED, it
        piv = T[r, j]
        if abs(piv) < PIVOT_TOL:
            raise NumericsError(f"near-singular pivot {piv:.3e} at row {r}, column {j}")
        entering_value = step if direction > 0 else u[j] - step
        beta -= direction * step * col
        leaving = basis[r]
        status[leaving] = AT_UPPER if to_upper else AT_LOWER
        kernels.pivot(T, r, j)
        basis[r] = j
        status[j] = BASIC
        beta[r] = entering_value
        degenerate = degenerate + 1 if step <= 1e-12 else 0


def _nonbasic_values(status, u):
    z = np.where(status == AT_UPPER, u, 0.0)
    z[status == BASIC] = 0.0
    return z


def simplex_lp(c, A, row_lo, row_hi, lb, ub, max_iter=None):
    """Solve ``min c.x`` over the box/row constraints; returns ``(status, x, pivots)``."""
    sf = _StandardForm(np.asarray(c, float), A, row_lo, row_hi, lb, ub)
    m, N = sf.M.shape
    if np.any(sf.u < -FEAS_TOL):
        return INFEASIBLE, None, 0
    # initial basis: a +1 slack when it can carry the rhs, an artificial otherwise
    basis = np.empty(m, dtype=np.int64)
    art_rows = []
    for r in range(m):
        k = sf.slack_col[r]
        if k >= 0 and sf.M[r, k] > 0 and sf.b[r] <= sf.u[k]:
            basis[r] = k
        else:
            art_rows.append(r)
    na = len(art_rows)
    T = np.zeros((m + 1, N + na))
    T[:m, :N] = sf.M
    for a, r in enumerate(art_rows):
        T[r, N + a] = 1.0
        basis[r] = N + a
    u = np.concatenate([sf.u, np.zeros(na)]) if na else sf.u.copy()
    u_art = np.concatenate([sf.u, np.full(na, math.inf)]) if na else sf.u.copy()
    status = np.full(N + na, AT_LOWER, dtype=np.int8)
    status[basis] = BASIC
    beta = sf.b.copy()
    allowed = np.ones(N + na, dtype=np.uint8)
    max_iter = max_iter or 50 * (m + N + na) + 1000
    pivots = 0

    if na:
        c1 = np.zeros(N + na)
        c1[N:] = 1.0
        T[m] = c1 - c1[basis] @ T[:m]
        st, it = _run_simplex(T, beta, basis, status, u_art, allowed, max_iter)
        pivots += it
        infeas = float(beta[basis >= N].sum())
        if infeas > FEAS_TOL * max(1.0, np.abs(sf.b).max(initial=0.0)):
            return INFEASIBLE, None, pivots
        # drive zero-valued artificials out of the basis where possible
        for r in range(m):
            if basis[r] < N:
                continue
            row = T[r, :N].copy()
            row[status[:N] == BASIC] = 0.0
            cand = np.nonzero(np.abs(row) > 1e-7)[0]
            if cand.size == 0:
                continue
            j = int(cand[np.argmax(np.abs(row[cand]))])
            value = u[j] if status[j] == AT_UPPER else 0.0
            status[basis[r]] = AT_LOWER
            kernels.pivot(T, r, j)
            basis[r] = j
            status[j] = BASIC
            beta[r] = value
            pivots += 1
        allowed[N:] = 0

    c2 = np.concatenate([sf.cost, np.zeros(na)])
    T[m] = c2 - c2[basis] @ T[:m]
    st, it = _run_simplex(T, beta, basis, status, u, allowed, max_iter)
    pivots += it
    if st == UNBOUNDED:
        return UNBOUNDED, None, pivots

    z = _nonbasic_values(status, u)
    real = basis < N
    z_b = beta.copy()
    # clean accumulated drift by re-solving B z_B = b - N z_N
    if m and real.all():
        B = sf.M[:, basis]
        try:
            z_b = np.linalg.solve(B, sf.b - sf.M @ z[:N])
        except np.linalg.LinAlgError:
            pass
    for r in range(m):
        if basis[r] < N:
            z[basis[r]] = min(max(z_b[r], 0.0), u[basis[r]])
    return OPTIMAL, sf.recover(z[: sf.nz]), pivots


class NativeLp:
    """Re-solvable LP relaxation of a problem using the built-in simplex."""

    name = "simplex"

    def __init__(self, problem: MilpProblem):
        self.problem = problem
        self.pivots = 0

    def solve(self, lb, ub):
        p = self.problem
        st, x, piv = simplex_lp(p.c, p.A, p.row_lower, p.row_upper, lb, ub)
        self.pivots += piv
        if st != OPTIMAL:
            return st, None, math.inf if st == INFEASIBLE else -math.inf
        return st, x, p.objective_value(x)


class HighsLp:
    """Persistent HiGHS LP; bound changes re-solve from the previous basis."""

    name = "highs"

    def __init__(self, problem: MilpProblem):
        import highspy

        self._hs = highspy
        self.problem = problem
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", 1)
        h.setOptionValue("random_seed", 0)
        # presolve can misreport unbounded LPs as infeasible, and defeats warm starts
        h.setOptionValue("presolve", "off")
        inf = highspy.kHighsInf
        lp = highspy.HighsLp()
        lp.num_col_ = problem.num_vars
        lp.num_row_ = problem.num_rows
        lp.col_cost_ = problem.c
        lp.offset_ = problem.obj_offset
        lp.col_lower_ = np.where(np.isfinite(problem.lb), problem.lb, -inf)
        lp.col_upper_ = np.where(np.isfinite(problem.ub), problem.ub, inf)
        lp.row_lower_ = np.where(np.isfinite(problem.row_lower), problem.row_lower, -inf)
        lp.row_upper_ = np.where(np.isfinite(problem.row_upper), problem.row_upper, inf)
        csc = problem.A.tocsc()
        csc.sort_indices()
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = csc.indptr
        lp.a_matrix_.index_ = csc.indices
        lp.a_matrix_.value_ = csc.data
        h.passModel(lp)
        self.h = h
        self._inf = inf
        self._idx = np.arange(problem.num_vars, dtype=np.int32)
        self.pivots = 0

    def solve(self, lb, ub):
        h, inf = self.h, self._inf
        h.changeColsBounds(
            len(self._idx),
            self._idx,
            np.where(np.isfinite(lb), lb, -inf),
            np.where(np.isfinite(ub), ub, inf),
        )
        h.run()
        ms = h.getModelStatus()
        self.pivots += int(h.getInfo().simplex_iteration_count)
        MS = self._hs.HighsModelStatus
        if ms == MS.kOptimal:
            x = np.array(h.getSolution().col_value)
            return OPTIMAL, x, self.problem.objective_value(x)
        if ms == MS.kInfeasible:
            return INFEASIBLE, None, math.inf
        if ms in (MS.kUnbounded, MS.kUnboundedOrInfeasible):
            # disambiguate with a fresh solve without the previous basis
            h.clearSolver()
            h.run()
            if h.getModelStatus() == MS.kInfeasible:
                return INFEASIBLE, None, math.inf
            return UNBOUNDED, None, -math.inf
        raise NumericsError(f"HiGHS returned model status {h.modelStatusToString(ms)}")


def make_lp(problem: MilpProblem, method="auto"):
    if method == "auto":
        size = (problem.num_rows + 1) * (problem.num_vars + 2 * problem.num_rows + 1)
        method = "simplex" if size <= AUTO_DENSE_LIMIT else "highs"
    if method == "simplex":
        return NativeLp(problem)
    if method == "highs":
        return HighsLp(problem)
    raise ValueError(f"unknown LP method {method!r}")


def solve_lp(problem: MilpProblem, method="auto") -> Solution:
    """Solve the LP relaxation (integrality flags are ignored)."""
    t0 = time.perf_counter()
    lp = make_lp(problem, method)
    st, x, obj = lp.solve(problem.lb, problem.ub)
    sol = Solution(status=st, x=x, objective=obj, lp_solves=1, runtime=time.perf_counter() - t0)
    if st == OPTIMAL:
        sol.bound, sol.gap = obj, 0.0
    return sol
