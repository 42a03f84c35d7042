"""Fixed-format MPS writer/reader and ``name value`` solution files.

Field layout follows the classic fixed columns (2-3, 5-12, 15-22, 25-36,
40-47, 50-61).  Numbers are written with the shortest representation that
round-trips a double; when that needs more than 12 characters the field
overflows to the right, which whitespace-tokenizing readers accept.  The
objective constant is stored as minus the RHS of the objective row.

Names longer than 8 characters (or containing whitespace) are replaced by
``C0000001``/``R0000001`` style names; the mapping is written next to the
MPS file as ``<file>.names`` with one ``<mps name> <original name>`` line
per variable and row.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..errors import ExportError, ParseError
from .problem import OPTIMAL, MilpProblem, Solution

OBJ_ROW = "COST"


def fmt_num(v: float) -> str:
    v = float(v)
    if v == 0:
        return "0"
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _legal(names):
    return (
        all(0 < len(n) <= 8 and not any(ch.isspace() for ch in n) for n in names)
        and len(set(names)) == len(names)
        and OBJ_ROW not in names
    )


def mps_names(problem: MilpProblem):
    """``(column names, row names)`` as they appear in the MPS file."""
    cols = list(problem.var_names)
    rows = list(problem.row_names)
    if not _legal(cols):
        cols = [f"C{j + 1:07d}" for j in range(problem.num_vars)]
    if not _legal(rows):
        rows = [f"R{i + 1:07d}" for i in range(problem.num_rows)]
    if problem.num_vars > 9_999_999 or problem.num_rows > 9_999_999:
        raise ExportError("too many names for 8-character mangling")
    if len(set(cols)) != len(cols) or len(set(rows)) != len(rows):
        raise ExportError("name collision after mangling")
    return cols, rows


def _field_line(f1="", f2="", f3="", f4="", f5="", f6=""):
    line = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:<12}"
    if f5 or f6:
        line += f"   {f5:<8}  {f6:<12}"
    return line.rstrip()


def write_mps(problem: MilpProblem, path, write_names=True) -> Path:
    path = Path(path)
    cols, rows = mps_names(problem)
    lo, hi = problem.row_lower, problem.row_upper
    out = [f"NAME          {problem.name[:8] or 'MESO'}", "ROWS", _field_line("N", OBJ_ROW)]
    kinds = []
    for i, r in enumerate(rows):
        if lo[i] == hi[i]:
            k = "E"
        elif math.isfinite(hi[i]) and not math.isfinite(lo[i]):
            k = "L"
        elif math.isfinite(lo[i]):
            k = "G"
        else:
            k = "N"
        kinds.append(k)
        out.append(_field_line(k, r))

    out.append("COLUMNS")
    A = problem.A.tocsc()
    A.sort_indices()
    in_int = False
    marker = 0
    for j, cname in enumerate(cols):
        is_int = bool(problem.integrality[j])
        if is_int != in_int:
            tag = "'INTORG'" if is_int else "'INTEND'"
            out.append(_field_line("", f"MARKER{marker:02d}"[:8], "'MARKER'", "", tag))
            marker += 1
            in_int = is_int
        entries = []
        if problem.c[j] != 0:
            entries.append((OBJ_ROW, problem.c[j]))
        for k in range(A.indptr[j], A.indptr[j + 1]):
            entries.append((rows[A.indices[k]], A.data[k]))
        if not entries:
            # keep the column declared
            entries.append((OBJ_ROW, 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k : k + 2]
            if len(pair) == 2:
                out.append(_field_line("", cname, pair[0][0], fmt_num(pair[0][1]), pair[1][0], fmt_num(pair[1][1])))
            else:
                out.append(_field_line("", cname, pair[0][0], fmt_num(pair[0][1])))
    if in_int:
        out.append(_field_line("", f"MARKER{marker:02d}"[:8], "'MARKER'", "", "'INTEND'"))

    out.append("RHS")
    if problem.obj_offset != 0:
        out.append(_field_line("", "RHS", OBJ_ROW, fmt_num(-problem.obj_offset)))
    for i, r in enumerate(rows):
        k = kinds[i]
        v = hi[i] if k == "L" else lo[i] if k in ("G", "E") else 0.0
        if k != "N" and v != 0:
            out.append(_field_line("", "RHS", r, fmt_num(v)))

    ranged = [i for i, k in enumerate(kinds) if k == "G" and math.isfinite(hi[i])]
    if ranged:
        out.append("RANGES")
        for i in ranged:
            out.append(_field_line("", "RNG", rows[i], fmt_num(hi[i] - lo[i])))

    blines = []
    for j, cname in enumerate(cols):
        l, u = problem.lb[j], problem.ub[j]
        is_int = bool(problem.integrality[j])
        if is_int and l == 0 and u == 1:
            blines.append(_field_line("BV", "BND", cname))
        elif l == u:
            blines.append(_field_line("FX", "BND", cname, fmt_num(l)))
        elif not math.isfinite(l) and not math.isfinite(u):
            blines.append(_field_line("FR", "BND", cname))
        else:
            if not math.isfinite(l):
                blines.append(_field_line("MI", "BND", cname))
            elif l != 0:
                blines.append(_field_line("LO", "BND", cname, fmt_num(l)))
            if math.isfinite(u):
                blines.append(_field_line("UP", "BND", cname, fmt_num(u)))
            elif is_int:
                blines.append(_field_line("PL", "BND", cname))
    if blines:
        out.append("BOUNDS")
        out += blines
    out.append("ENDATA")
    path.write_text("\n".join(out) + "\n")

    if write_names and (cols != list(problem.var_names) or rows != list(problem.row_names)):
        with open(str(path) + ".names", "w") as fh:
            for a, b in zip(cols, problem.var_names):
                fh.write(f"{a} {b}\n")
            for a, b in zip(rows, problem.row_names):
                fh.write(f"{a} {b}\n")
    return path


export_mps = write_mps


def _num(tok, lineno):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"bad number {tok!r}", row=lineno) from None


def read_mps(path, name_map=None) -> MilpProblem:
    """Parse an MPS file written by :func:`write_mps` (free spacing tolerated)."""
    section = None
    name = "MESO"
    obj_row = None
    row_kind, row_order = {}, []
    col_order, col_index = [], {}
    trip_r, trip_c, trip_v = [], [], []
    cost = {}
    rhs, ranges = {}, {}
    bounds = {}
    ints = set()
    in_int = False
    obj_rhs = 0.0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip() or raw.startswith("*"):
                continue
            tok = raw.split()
            if not raw[0].isspace():
                section = tok[0]
                if section == "NAME" and len(tok) > 1:
                    name = tok[1]
                if section == "ENDATA":
                    break
                continue
            if section == "ROWS":
                kind, r = tok[0], tok[1]
                if kind == "N" and obj_row is None:
                    obj_row = r
                    continue
                row_kind[r] = kind
                row_order.append(r)
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    in_int = tok[2] == "'INTORG'"
                    continue
                c = tok[0]
                if c not in col_index:
                    col_index[c] = len(col_order)
                    col_order.append(c)
                    if in_int:
                        ints.add(c)
                for r, v in zip(tok[1::2], tok[2::2]):
                    v = _num(v, lineno)
                    if r == obj_row:
                        cost[c] = cost.get(c, 0.0) + v
                    elif r in row_kind:
                        trip_r.append(r)
                        trip_c.append(c)
                        trip_v.append(v)
                    else:
                        raise ParseError(f"unknown row {r!r}", row=lineno)
            elif section == "RHS":
                body = tok[1:] if len(tok) % 2 == 1 else tok
                for r, v in zip(body[0::2], body[1::2]):
                    if r == obj_row:
                        obj_rhs = _num(v, lineno)
                    else:
                        rhs[r] = _num(v, lineno)
            elif section == "RANGES":
                body = tok[1:] if len(tok) % 2 == 1 else tok
                for r, v in zip(body[0::2], body[1::2]):
                    ranges[r] = _num(v, lineno)
            elif section == "BOUNDS":
                kind, c = tok[0], tok[2]
                val = _num(tok[3], lineno) if len(tok) > 3 else None
                bounds.setdefault(c, []).append((kind, val))
            else:
                raise ParseError(f"data outside a known section: {section!r}", row=lineno)

    ridx = {r: i for i, r in enumerate(row_order)}
    n, m = len(col_order), len(row_order)
    A = sp.csr_matrix(
        (trip_v, ([ridx[r] for r in trip_r], [col_index[c] for c in trip_c])), shape=(m, n)
    )
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    for r, i in ridx.items():
        k, b = row_kind[r], rhs.get(r, 0.0)
        if k == "E":
            rg = ranges.get(r)
            if rg is None:
                lo[i] = hi[i] = b
            elif rg > 0:
                lo[i], hi[i] = b, b + rg
            else:
                lo[i], hi[i] = b + rg, b
        elif k == "L":
            hi[i] = b
            if r in ranges:
                lo[i] = b - abs(ranges[r])
        elif k == "G":
            lo[i] = b
            if r in ranges:
                hi[i] = b + abs(ranges[r])
    lb, ub = np.zeros(n), np.full(n, np.inf)
    integ = np.array([c in ints for c in col_order], dtype=bool)
    for c, items in bounds.items():
        j = col_index[c]
        for kind, val in items:
            if kind == "UP":
                ub[j] = val
            elif kind == "LO":
                lb[j] = val
            elif kind == "FX":
                lb[j] = ub[j] = val
            elif kind == "FR":
                lb[j], ub[j] = -np.inf, np.inf
            elif kind == "MI":
                lb[j] = -np.inf
            elif kind == "PL":
                ub[j] = np.inf
            elif kind == "BV":
                lb[j], ub[j] = 0.0, 1.0
                integ[j] = True
            elif kind in ("LI", "UI"):
                integ[j] = True
                if kind == "LI":
                    lb[j] = val
                else:
                    ub[j] = val
            else:
                raise ParseError(f"unknown bound type {kind!r}")
    c = np.array([cost.get(cn, 0.0) for cn in col_order])
    var_names, row_names = list(col_order), list(row_order)
    if name_map:
        var_names = [name_map.get(v, v) for v in var_names]
        row_names = [name_map.get(r, r) for r in row_names]
    return MilpProblem(
        c=c, A=A, row_lower=lo, row_upper=hi, lb=lb, ub=ub, integrality=integ,
        var_names=var_names, row_names=row_names, obj_offset=-obj_rhs, name=name,
    )


def read_name_map(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            parts = line.split(maxsplit=1)
            if len(parts) == 2:
                out[parts[0]] = parts[1].strip()
    return out


def write_solution(path, problem: MilpProblem, solution: Solution):
    with open(path, "w") as fh:
        for nm, v in zip(problem.var_names, solution.x):
            fh.write(f"{nm} {fmt_num(v)}\n")


def import_solution(path, problem: MilpProblem, name_map=None) -> Solution:
    """Read ``name value`` lines (original or mangled names) into a Solution.

    Variables missing from the file are taken as zero, as external solvers
    commonly omit them.
    """
    name_map = dict(name_map or {})
    x = np.zeros(problem.num_vars)
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise ParseError("expected '<name> <value>'", row=lineno)
            nm = name_map.get(parts[0], parts[0])
            try:
                j = problem.index(nm)
            except KeyError:
                raise ParseError(f"unknown variable {parts[0]!r}", row=lineno) from None
            x[j] = _num(parts[1], lineno)
    obj = problem.objective_value(x)
    return Solution(status=OPTIMAL, x=x, objective=obj, bound=-math.inf, gap=math.inf)
