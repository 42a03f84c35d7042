"""Self-contained MILP toolkit: PWL costs, LP simplex, branch-and-bound, MPS."""
from .bnb import solve_milp
from .kernels import BACKEND as KERNEL_BACKEND
from .mps import export_mps, import_solution, read_mps, write_mps, write_solution
from .problem import GAP_LIMIT, INFEASIBLE, OPTIMAL, UNBOUNDED, MilpProblem, Solution
from .pwl import PiecewiseLinear, add_epigraph, linearize_convex_quadratic
from .simplex import solve_lp

__all__ = [
    "GAP_LIMIT", "INFEASIBLE", "KERNEL_BACKEND", "OPTIMAL", "UNBOUNDED",
    "MilpProblem", "PiecewiseLinear", "Solution",
    "add_epigraph", "export_mps", "import_solution", "linearize_convex_quadratic",
    "read_mps", "solve_lp", "solve_milp", "write_mps", "write_solution",
]
