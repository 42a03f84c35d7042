"""Best-bound branch-and-bound over LP relaxations."""
from __future__ import annotations

import heapq
import logging
import math
import time

import numpy as np

from .problem import GAP_LIMIT, INFEASIBLE, INT_TOL, OPTIMAL, UNBOUNDED, MilpProblem, Solution, relative_gap
from .simplex import make_lp

log = logging.getLogger(__name__)


def _most_fractional(x, int_idx):
    """Index of the most fractional integer variable (lowest index on ties), or -1."""
    if int_idx.size == 0:
        return -1
    v = x[int_idx]
    frac = np.abs(v - np.round(v))
    k = int(np.argmax(frac))  # argmax returns the first maximum
    if frac[k] <= INT_TOL:
        return -1
    return int(int_idx[k])


def _bounds_of(changes, lb0, ub0):
    lb, ub = lb0.copy(), ub0.copy()
    seen = set()
    while changes is not None:
        changes, j, lo, hi = changes
        if j not in seen:  # the newest change to a column wins
            lb[j], ub[j] = lo, hi
            seen.add(j)
    return lb, ub


class _Search:
    def __init__(self, problem, gap_tol, node_limit, lp_method, time_limit, heuristics):
        self.p = problem
        self.gap_tol = gap_tol
        self.node_limit = node_limit
        self.time_limit = time_limit
        self.heuristics = heuristics
        self.lp = make_lp(problem.relaxed(), lp_method)
        self.int_idx = np.nonzero(problem.integrality)[0]
        self.A = problem.A.tocsc()
        self.free_int = self.int_idx[problem.c[self.int_idx] == 0.0]
        self.best_x = None
        self.best_obj = math.inf
        self.lp_solves = 0
        self.history = []
        self.t0 = time.perf_counter()

    def solve_lp(self, lb, ub):
        self.lp_solves += 1
        st, x, obj = self.lp.solve(lb, ub)
        if st == OPTIMAL and self.free_int.size:
            x = self.tidy(x, lb, ub)
        return st, x, obj

    def tidy(self, x, lb, ub, tol=1e-9):
        """Round cost-free integer columns whose rounding keeps every row feasible.

        The result is another optimum of the same node LP; it keeps branching
        off columns (idle storage mode flags, say) that no row or cost cares
        about at this node.
        """
        v = x[self.free_int]
        fr = self.free_int[np.abs(v - np.round(v)) > INT_TOL]
        if fr.size == 0:
            return x
        x = x.copy()
        act = self.p.A @ x
        lo, hi = self.p.row_lower, self.p.row_upper
        A = self.A
        for j in fr:
            rows = A.indices[A.indptr[j]:A.indptr[j + 1]]
            vals = A.data[A.indptr[j]:A.indptr[j + 1]]
            near = float(np.round(x[j]))
            for t in (near, math.floor(x[j]) if near > x[j] else math.ceil(x[j])):
                if not lb[j] <= t <= ub[j]:
                    continue
                new = act[rows] + vals * (t - x[j])
                old_lo = np.maximum(lo[rows] - act[rows], 0.0)
                old_hi = np.maximum(act[rows] - hi[rows], 0.0)
                if np.all(new >= lo[rows] - old_lo - tol) and np.all(new <= hi[rows] + old_hi + tol):
                    act[rows] = new
                    x[j] = t
                    break
        return x

    def abs_tol(self):
        return 1e-9 * max(1.0, abs(self.best_obj)) if math.isfinite(self.best_obj) else 0.0

    def offer(self, x, lb, ub):
        """Polish an integral LP point (exact integers, re-solved continuous part)."""
        if self.int_idx.size == 0:
            # pure LP: the relaxation point is already the answer
            obj = self.p.objective_value(x)
            if obj < self.best_obj - self.abs_tol():
                self.best_obj, self.best_x = obj, x
                return True
            return False
        xi = np.round(x[self.int_idx])
        plb, pub = lb.copy(), ub.copy()
        plb[self.int_idx] = xi
        pub[self.int_idx] = xi
        st, xp, obj = self.solve_lp(plb, pub)
        if st != OPTIMAL:
            xp = x.copy()
            xp[self.int_idx] = xi
            if self.p.max_violation(xp) > 1e-6:
                return False
            obj = self.p.objective_value(xp)
        else:
            xp[self.int_idx] = xi
        if obj < self.best_obj - self.abs_tol():
            self.best_obj, self.best_x = obj, xp
            log.debug("incumbent %.6f", obj)
            return True
        return False

    def dive(self, x, lb, ub, max_steps=None):
        """Fractional diving: repeatedly round the least fractional variables."""
        lb, ub = lb.copy(), ub.copy()
        n_frac0 = None
        steps = 0
        while True:
            v = x[self.int_idx]
            frac = np.abs(v - np.round(v))
            fr = np.nonzero(frac > INT_TOL)[0]
            if fr.size == 0:
                return self.offer(x, lb, ub)
            if n_frac0 is None:
                n_frac0 = fr.size
                max_steps = max_steps or 2 * n_frac0 + 20
            steps += 1
            if steps > max_steps:
                return False
            order = fr[np.argsort(frac[fr], kind="stable")]
            batch = order[: max(1, fr.size // 8)]
            cols = self.int_idx[batch]
            target = np.round(x[cols])
            nlb, nub = lb.copy(), ub.copy()
            nlb[cols] = np.maximum(lb[cols], target)
            nub[cols] = np.minimum(ub[cols], target)
            st, xn, obj = self.solve_lp(nlb, nub)
            if st != OPTIMAL and batch.size > 1:
                cols = cols[:1]
                target = target[:1]
                nlb, nub = lb.copy(), ub.copy()
                nlb[cols], nub[cols] = target, target
                st, xn, obj = self.solve_lp(nlb, nub)
            if st != OPTIMAL:
                # flip the single most-decided rounding once
                j = cols[0]
                alt = np.floor(x[j]) if target[0] > x[j] else np.ceil(x[j])
                nlb, nub = lb.copy(), ub.copy()
                nlb[j] = nub[j] = alt
                st, xn, obj = self.solve_lp(nlb, nub)
                if st != OPTIMAL:
                    return False
            if obj >= self.best_obj - self.abs_tol():
                return False
            lb, ub, x = nlb, nub, xn

    def elapsed(self):
        return time.perf_counter() - self.t0


def solve_milp(
    problem: MilpProblem,
    gap_tol: float = 1e-4,
    node_limit: int = 100_000,
    lp_method: str = "auto",
    time_limit: float | None = None,
    incumbent=None,
    heuristics: bool = True,
    dive_every: int = 200,
) -> Solution:
    """Minimize ``problem`` by best-bound branch-and-bound.

    Branching takes the most fractional integer variable (lowest index on
    ties), so serial runs are deterministic.  ``incumbent`` may supply a
    known feasible point (e.g. the optimum of a more constrained scenario).
    Stops with ``optimal`` once the relative gap is at most ``gap_tol`` and
    with ``gap_limit`` when ``node_limit`` or ``time_limit`` is reached first.
    """
    s = _Search(problem, gap_tol, node_limit, lp_method, time_limit, heuristics)
    lb0, ub0 = problem.lb.copy(), problem.ub.copy()
    # integer bounds can be tightened to integers up front
    ii = s.int_idx
    lb0[ii] = np.ceil(lb0[ii] - INT_TOL)
    ub0[ii] = np.floor(ub0[ii] + INT_TOL)
    int_ok = True
    if np.any(lb0 > ub0):
        int_ok = False

    def result(status, bound, nodes):
        bound = min(bound, s.best_obj) if s.best_x is not None else bound
        gap = relative_gap(s.best_obj, bound) if s.best_x is not None else math.inf
        return Solution(
            status=status,
            x=s.best_x,
            objective=s.best_obj,
            bound=bound,
            gap=gap,
            nodes=nodes,
            lp_solves=s.lp_solves,
            runtime=s.elapsed(),
            history=s.history,
        )

    if not int_ok:
        return result(INFEASIBLE, math.inf, 0)

    if incumbent is not None:
        x0 = np.asarray(incumbent, dtype=float)
        if problem.max_violation(x0) <= 1e-6 and problem.max_integrality_violation(x0) <= INT_TOL:
            s.offer(x0, lb0, ub0)

    st, x, obj = s.solve_lp(lb0, ub0)
    if st == INFEASIBLE:
        return result(INFEASIBLE, math.inf, 1)
    if st == UNBOUNDED:
        return Solution(status=UNBOUNDED, objective=-math.inf, lp_solves=s.lp_solves, runtime=s.elapsed())
    nodes = 1
    j = _most_fractional(x, ii)
    if j < 0:
        s.offer(x, lb0, ub0)
        s.history.append((nodes, s.best_obj, obj))
        return result(OPTIMAL, obj, nodes)
    if heuristics:
        s.dive(x, lb0, ub0)

    heap = [(obj, 0, None, j, float(x[j]))]
    seq = 1
    pruned_bound = math.inf  # best bound among subtrees dropped within the gap
    status = None
    last_bound = -math.inf
    while heap:
        bound = min(heap[0][0], pruned_bound)
        bound = max(bound, last_bound)
        last_bound = bound
        s.history.append((nodes, s.best_obj, min(bound, s.best_obj)))
        if s.best_x is not None and relative_gap(s.best_obj, bound) <= gap_tol:
            status = OPTIMAL
            break
        if nodes >= node_limit or (time_limit is not None and s.elapsed() >= time_limit):
            status = GAP_LIMIT
            break
        node_obj, _, changes, j, v = heapq.heappop(heap)
        if s.best_x is not None:
            if node_obj >= s.best_obj - s.abs_tol():
                continue
            if relative_gap(s.best_obj, node_obj) <= gap_tol:
                pruned_bound = min(pruned_bound, node_obj)
                continue
        lb, ub = _bounds_of(changes, lb0, ub0)
        for lo, hi in ((lb[j], math.floor(v)), (math.ceil(v), ub[j])):
            if lo > hi:
                continue
            clb, cub = lb.copy(), ub.copy()
            clb[j], cub[j] = lo, hi
            st, xc, oc = s.solve_lp(clb, cub)
            nodes += 1
            if st != OPTIMAL or oc >= s.best_obj - s.abs_tol():
                continue
            jc = _most_fractional(xc, ii)
            if jc < 0:
                s.offer(xc, clb, cub)
                continue
            heapq.heappush(heap, (oc, seq, (changes, j, lo, hi), jc, float(xc[jc])))
            seq += 1
            if heuristics and dive_every and seq % dive_every == 0:
                s.dive(xc, clb, cub)
        if nodes % 500 < 2:
            log.info("nodes %d open %d incumbent %.6g bound %.6g", nodes, len(heap), s.best_obj, bound)

    if status is None:
        # tree exhausted
        if s.best_x is None:
            return result(INFEASIBLE, math.inf, nodes)
        final = min(pruned_bound, s.best_obj)
        s.history.append((nodes, s.best_obj, final))
        return result(OPTIMAL, final, nodes)
    bound = min(heap[0][0] if heap else math.inf, pruned_bound)
    bound = max(bound, last_bound)
    if status == GAP_LIMIT and s.best_x is None:
        return result(GAP_LIMIT, bound, nodes)
    return result(status, bound, nodes)
