"""Pure numpy simplex kernels; reference for the compiled ``_kernel`` module."""
import numpy as np

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2


def pivot(T, r, j):
    """Gauss-Jordan pivot of the dense tableau ``T`` on element ``(r, j)``, in place."""
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])


def price(d, status, allowed, tol, bland):
    """Entering column index, or -1 when the basis is optimal."""
    gain = np.where(status == AT_LOWER, -d, np.where(status == AT_UPPER, d, 0.0))
    gain[~allowed.astype(bool)] = 0.0
    cand = np.nonzero(gain > tol)[0]
    if cand.size == 0:
        return -1
    if bland:
        return int(cand[0])
    return int(cand[np.argmax(gain[cand])])


def ratio_test(col, beta, ub_basic, basis, direction, tol, bland):
    """Limiting row for moving the entering variable in ``direction`` (+1/-1).

    Returns ``(row, step, leaves_at_upper)``; ``row`` is -1 when no basic
    variable limits the step.
    """
    a = col * direction
    step = np.full(a.shape, np.inf)
    dec = a > tol
    step[dec] = np.maximum(beta[dec], 0.0) / a[dec]
    inc = (a < -tol) & np.isfinite(ub_basic)
    step[inc] = np.maximum(ub_basic[inc] - beta[inc], 0.0) / -a[inc]
    best = step.min() if step.size else np.inf
    if not np.isfinite(best):
        return -1, np.inf, False
    ties = np.nonzero(step <= best + 1e-12)[0]
    if bland:
        r = int(ties[np.argmin(basis[ties])])
    else:
        r = int(ties[np.argmax(np.abs(a[ties]))])
    return r, float(step[r]), bool(a[r] < 0)
