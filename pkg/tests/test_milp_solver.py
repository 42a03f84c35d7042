from pathlib import Path

import highspy
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from meso.errors import NonconvexError, ParseError
from meso.milp import (
    GAP_LIMIT, INFEASIBLE, OPTIMAL, UNBOUNDED, MilpProblem, add_epigraph, import_solution, linearize_convex_quadratic,
    read_mps, solve_lp, solve_milp, write_mps, write_solution,
)
from meso.milp.mps import fmt_num, mps_names, read_name_map
from meso.mld_core import Model
from oracle import enumerate_optimum, random_milp

DATA = Path(__file__).parent / "data"


def tiny():
    p = MilpProblem.from_dense([2.0], A_ub=[[-3.0]], b_ub=[-1.5], lb=[0.0], ub=[4.0])
    p.var_names, p.row_names, p.name = ["x"], ["lim"], "TINY"
    return p


# piecewise-linear fuel curves

def test_two_segment_example():
    pwl = linearize_convex_quadratic(0.01, 10.0, 5.0, 100.0, segments=2)
    np.testing.assert_allclose(pwl.breakpoints, [0.0, 50.0, 100.0])
    np.testing.assert_allclose(pwl(pwl.breakpoints), [5.0, 530.0, 1105.0])
    assert float(pwl(25.0)) == pytest.approx(267.5)
    assert float(pwl.quadratic(25.0)) == pytest.approx(261.25)
    assert pwl.error_bound == pytest.approx(6.25)


def test_linear_cost_is_exact():
    pwl = linearize_convex_quadratic(0.0, 30.0, 600.0, 100.0, segments=8)
    assert pwl.segments == 1
    p = np.linspace(0, 100, 101)
    np.testing.assert_allclose(pwl(p), pwl.quadratic(p))


def test_nonconvex_rejected():
    with pytest.raises(NonconvexError):
        linearize_convex_quadratic(-0.1, 1.0, 0.0, 10.0)
    with pytest.raises(ValueError):
        linearize_convex_quadratic(0.1, 1.0, 0.0, 10.0, segments=0)


@given(st.floats(1e-4, 1.0), st.floats(-50, 50), st.floats(-100, 100), st.floats(1.0, 500.0),
       st.integers(1, 32))
def test_pwl_overestimates_within_bound(c2, c1, c0, p_max, segments):
    pwl = linearize_convex_quadratic(c2, c1, c0, p_max, segments)
    p = np.linspace(0, p_max, 1000)
    err = pwl(p) - pwl.quadratic(p)
    scale = 1e-9 * max(1.0, abs(c2) * p_max ** 2 + abs(c1) * p_max + abs(c0))
    assert err.min() >= -scale
    assert err.max() <= c2 * (p_max / segments) ** 2 / 4 + scale
    np.testing.assert_allclose(pwl(pwl.breakpoints), pwl.quadratic(pwl.breakpoints), atol=scale)
    doubled = linearize_convex_quadratic(c2, c1, c0, p_max, 2 * segments)
    assert doubled.error_bound == pytest.approx(pwl.error_bound / 4)


def test_epigraph_gated_by_flag():
    m = Model()
    pwl = linearize_convex_quadratic(0.01, 10.0, 5.0, 100.0, segments=4)
    u = m.add_binary("u")
    p = m.add_var("p", 0.0, 100.0)
    m.add(p - 100.0 * u, "<=", 0.0)
    z = add_epigraph(m, pwl, p, flag=u)
    m.objective.iadd(z)
    m.fix(p, 30.0)
    sol = solve_milp(m.to_milp())
    assert sol.objective == pytest.approx(float(pwl(30.0)))
    m2 = Model()
    u2, p2 = m2.add_binary("u"), m2.add_var("p", 0.0, 100.0)
    m2.add(p2 - 100.0 * u2, "<=", 0.0)
    m2.objective.iadd(add_epigraph(m2, pwl, p2, flag=u2))
    assert solve_milp(m2.to_milp()).objective == pytest.approx(0.0)


# LP

def test_lp_examples():
    p = MilpProblem.from_dense([-1.0, -1.0], A_ub=[[1.0, 1.0]], b_ub=[1.0])
    assert solve_lp(p).objective == pytest.approx(-1.0)
    p = MilpProblem.from_dense([1.0], A_ub=[[-1.0], [1.0]], b_ub=[-2.0, 1.0])
    assert solve_lp(p).status == INFEASIBLE
    p = MilpProblem.from_dense([-1.0], ub=[1e6])
    sol = solve_lp(p)
    assert sol.status == OPTIMAL and sol.x[0] == pytest.approx(1e6)


def test_lp_unbounded():
    assert solve_lp(MilpProblem.from_dense([-1.0])).status == UNBOUNDED


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_lp_equalities_and_free_vars(method):
    # min x + 2y  s.t.  x + y = 3,  x - y >= -5,  x free, 0 <= y <= 10
    p = MilpProblem.from_dense([1.0, 2.0], A_ub=[[-1.0, 1.0]], b_ub=[5.0], A_eq=[[1.0, 1.0]], b_eq=[3.0],
                               lb=[-np.inf, 0.0], ub=[np.inf, 10.0])
    sol = solve_lp(p, method)
    np.testing.assert_allclose(sol.x, [3.0, 0.0], atol=1e-9)


def dual_objective(c, A, b):
    """``max -b.y`` s.t. ``A^T y >= -c``, ``y >= 0``: the dual of ``min c.x, A x <= b, x >= 0``."""
    r = linprog(b, A_ub=-A.T, b_ub=c, bounds=[(0, None)] * len(b), method="highs")
    return -r.fun if r.status == 0 else None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8), st.integers(2, 8))
def test_lp_strong_duality(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 3, (m, n))
    b = rng.uniform(1, 10, m)
    c = rng.uniform(-5, 2, n)
    A[0] = np.abs(A[0]) + 0.1  # keeps the primal bounded
    p = MilpProblem.from_dense(c, A_ub=A, b_ub=b)
    sol = solve_lp(p, "simplex")
    assert sol.status == OPTIMAL
    assert p.max_violation(sol.x) <= 1e-7
    assert sol.objective == pytest.approx(dual_objective(c, A, b), abs=1e-6)


# branch and bound

def test_milp_rounds_down():
    p = MilpProblem.from_dense([-1.0], lb=[0.0], ub=[2.5], integrality=[True])
    sol = solve_milp(p)
    assert sol.x[0] == 2.0 and sol.objective == -2.0


def test_continuous_milp_is_one_lp():
    p = MilpProblem.from_dense([-1.0, -2.0], A_ub=[[1.0, 3.0], [2.0, 1.0]], b_ub=[6.0, 5.0])
    sol = solve_milp(p)
    lp = solve_lp(p)
    assert sol.nodes == 1 and sol.lp_solves == 1
    np.testing.assert_allclose(sol.x, lp.x)
    assert sol.objective == lp.objective


def test_integer_infeasible():
    # 2x = 1 has no integer solution
    p = MilpProblem.from_dense([1.0], A_eq=[[2.0]], b_eq=[1.0], ub=[5.0], integrality=[True])
    assert solve_milp(p).status == INFEASIBLE


def test_node_limit_keeps_incumbent():
    rng = np.random.default_rng(3)
    p = random_milp(rng, 12, 6)
    sol = solve_milp(p, gap_tol=0.0, node_limit=2)
    assert sol.status == GAP_LIMIT and sol.has_values
    assert p.max_violation(sol.x) <= 1e-6
    assert sol.bound <= enumerate_optimum(p) <= sol.objective
    assert sol.gap > 0


def test_bad_incumbent_is_ignored():
    p = MilpProblem.from_dense([-1.0], lb=[0.0], ub=[2.5], integrality=[True])
    assert solve_milp(p, incumbent=[3.0]).objective == -2.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 9), st.integers(0, 6))
def test_milp_matches_enumeration(seed, n_bin, n_cont):
    p = random_milp(np.random.default_rng(seed), n_bin, n_cont)
    sol = solve_milp(p, gap_tol=1e-9)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(enumerate_optimum(p), abs=1e-6)
    assert p.max_violation(sol.x) <= 1e-6
    assert p.max_integrality_violation(sol.x) <= 1e-6


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_history_is_monotone(seed):
    p = random_milp(np.random.default_rng(seed), 10, 5)
    sol = solve_milp(p, gap_tol=1e-3)
    inc = [h[1] for h in sol.history]
    bnd = [h[2] for h in sol.history]
    assert all(a >= b - 1e-9 for a, b in zip(inc, inc[1:]))
    assert all(a <= b + 1e-9 for a, b in zip(bnd, bnd[1:]))
    assert sol.gap <= 1e-3


def test_solve_is_deterministic():
    p = random_milp(np.random.default_rng(11), 12, 8)
    a, b = solve_milp(p), solve_milp(p)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.nodes == b.nodes


# MPS

def test_tiny_golden_file(tmp_path):
    out = write_mps(tiny(), tmp_path / "tiny.mps")
    assert out.read_bytes() == (DATA / "tiny.mps").read_bytes()
    assert not (tmp_path / "tiny.mps.names").exists()


def test_fixed_columns():
    line = (DATA / "tiny.mps").read_text().splitlines()[5]
    assert line[4:5] == "x" and line[14:18] == "COST" and line[24:25] == "2"
    assert line[39:42] == "lim" and line[49:51] == "-3"


def triplets(p):
    A = p.A.tocoo()
    return sorted(zip(A.row.tolist(), A.col.tolist(), A.data.tolist()))


def same_problem(a, b):
    assert triplets(a) == triplets(b)
    for key in ("c", "row_lower", "row_upper", "lb", "ub", "integrality"):
        np.testing.assert_array_equal(getattr(a, key), getattr(b, key))
    assert a.obj_offset == b.obj_offset


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 8), st.integers(1, 8))
def test_round_trip_random(tmp_path_factory, seed, n_bin, n_cont):
    rng = np.random.default_rng(seed)
    p = random_milp(rng, n_bin, n_cont)
    p.c = p.c + rng.normal(size=p.num_vars) / 7.0  # values that need full precision
    p.A.data = p.A.data * np.pi
    p.obj_offset = 1.0 / 3.0
    path = tmp_path_factory.mktemp("mps") / "p.mps"
    write_mps(p, path)
    same_problem(p, read_mps(path))


def test_round_trip_all_row_and_bound_kinds(tmp_path):
    m = Model()
    a = m.add_var("a", -np.inf, np.inf)
    b = m.add_var("b", -np.inf, 5.0)
    c = m.add_var("c", 2.0, 2.0)
    d = m.add_var("d", -3.0, 7.0)
    e = m.add_binary("e")
    m.add(a + b, "<=", 4.0, "le")
    m.add(a - c, ">=", -1.0, "ge")
    m.add(b + d + e, "==", 2.5, "eq")
    ranged = m.add(a + d, ">=", 1.0, "rg")
    m.objective.iadd(a, 1.0).iadd(e, -2.0)
    m.objective.constant = 7.5
    p = m.to_milp()
    p.row_upper[3] = 6.0  # make "rg" a ranged row
    path = write_mps(p, tmp_path / "k.mps")
    text = path.read_text()
    assert "RANGES" in text and " FR BND" in text and " MI BND" in text and " FX BND" in text
    same_problem(p, read_mps(path))
    assert ranged.name == "rg"


def test_binaries_wrapped_in_markers(tmp_path):
    p = MilpProblem.from_dense([1.0, -1.0, 2.0], A_ub=[[1.0, 1.0, 1.0]], b_ub=[2.0], ub=[1.0, 1.0, 9.0],
                               integrality=[False, True, True])
    p.var_names = ["y", "b", "n"]
    lines = write_mps(p, tmp_path / "b.mps").read_text().splitlines()
    start = next(i for i, s in enumerate(lines) if "'INTORG'" in s)
    end = next(i for i, s in enumerate(lines) if "'INTEND'" in s)
    inside = {s.split()[0] for s in lines[start + 1:end]}
    assert inside == {"b", "n"}
    assert " BV BND       b" in lines
    assert " UP BND       n         9" in lines
    assert not any(s.split()[-1] == "y" for s in lines if s.startswith(" BV"))


def test_long_names_are_mangled(tmp_path):
    m = Model()
    x = m.add_binary("GT1.wsu_cold[12]")
    y = m.add_var("a b", 0, 3)
    m.add(x + y, "<=", 2.0, "CCPP1.steam[4]")
    m.objective.iadd(y, -1.0)
    p = m.to_milp()
    path = write_mps(p, tmp_path / "m.mps")
    cols, rows = mps_names(p)
    assert cols == ["C0000001", "C0000002"] and rows == ["R0000001"]
    names = read_name_map(str(path) + ".names")
    assert names["C0000001"] == "GT1.wsu_cold[12]" and names["R0000001"] == "CCPP1.steam[4]"
    back = read_mps(path, names)
    assert back.var_names == p.var_names and back.row_names == p.row_names


def test_duplicate_names_fall_back_to_mangling():
    p = MilpProblem.from_dense([1.0, 1.0])
    p.var_names = ["COST", "COST"]
    p.row_names = []
    assert mps_names(p)[0] == ["C0000001", "C0000002"]
    big = MilpProblem.from_dense(np.zeros(3))
    big.var_names = ["x"] * 3
    assert len(set(mps_names(big)[0])) == 3


def test_highs_reads_our_files(tmp_path):
    p = random_milp(np.random.default_rng(5), 6, 6)
    path = write_mps(p, tmp_path / "r.mps")
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    ours = solve_milp(p, gap_tol=1e-9)
    assert h.getInfo().objective_function_value == pytest.approx(ours.objective, abs=1e-6)


def test_number_format():
    assert [fmt_num(v) for v in (0.0, -0.0, 3.0, -1.5, 0.1, 1e20)] == ["0", "0", "3", "-1.5", "0.1", "1e+20"]
    for v in (np.pi, 1 / 3, -2.5e-12, 123456789.123):
        assert float(fmt_num(v)) == v


def test_solution_files(tmp_path):
    p = random_milp(np.random.default_rng(2), 4, 3)
    sol = solve_milp(p)
    write_solution(tmp_path / "s.txt", p, sol)
    back = import_solution(tmp_path / "s.txt", p)
    np.testing.assert_array_equal(back.x, sol.x)
    assert back.objective == pytest.approx(sol.objective)
    (tmp_path / "part.txt").write_text("# external solver output\nx1 1\n")
    part = import_solution(tmp_path / "part.txt", p)
    assert part.x[1] == 1.0 and part.x.sum() == 1.0
    (tmp_path / "bad.txt").write_text("nope 1\n")
    with pytest.raises(ParseError):
        import_solution(tmp_path / "bad.txt", p)
    (tmp_path / "bad2.txt").write_text("x0 = 1\n")
    with pytest.raises(ParseError):
        import_solution(tmp_path / "bad2.txt", p)


def test_reader_errors(tmp_path):
    f = tmp_path / "e.mps"
    f.write_text("NAME X\nROWS\n N  COST\nCOLUMNS\n    x  R9  1\nENDATA\n")
    with pytest.raises(ParseError):
        read_mps(f)
    f.write_text("NAME X\nROWS\n N  COST\nCOLUMNS\n    x  COST  one\nENDATA\n")
    with pytest.raises(ParseError):
        read_mps(f)
