"""Vectorised bracketed scalar minimisation.

Many independent 1-D problems are solved at once: a dense scan locates the
basin of the global minimum, then golden-section search refines it.  The
objectives here are continuous but have kinks, so no derivatives are used.
"""

import numpy as np

INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


class SolverError(RuntimeError):
    pass


def bracketed_min(fun, lo, hi, n_coarse=1024, margin=0.1, xtol=1e-10, maxiter=200):
    """Minimise ``fun`` row-wise over [lo, hi] widened by ``margin``.

    ``fun`` maps an (n, k) array of candidates to an (n, k) array of values,
    each row being one problem.  Returns (argmin, min) arrays of shape (n,).
    Raises SolverError when the scan's minimum sits on the widened edge,
    which means the true minimiser lies outside the expected bracket.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    width = hi - lo
    a0 = lo - margin * width
    b0 = hi + margin * width
    flat = width <= 1e-300

    grid = a0[:, None] + (b0 - a0)[:, None] * np.linspace(0.0, 1.0, n_coarse)[None, :]
    vals = fun(grid)
    idx = np.argmin(vals, axis=1)
    rows = np.arange(lo.size)
    edge = ((idx == 0) | (idx == n_coarse - 1)) & ~flat
    if np.any(edge):
        # an edge "minimum" that only wins by rounding is a flat objective, not a bad bracket
        inner = 1 + np.argmin(vals[:, 1:-1], axis=1)
        f_in = vals[rows, inner]
        tie = vals[rows, idx] >= f_in - 1e-12 * (np.abs(f_in) + 1e-300)
        idx = np.where(edge & tie, inner, idx)
        edge &= ~tie
    if np.any(edge):
        k = int(np.flatnonzero(edge)[0])
        raise SolverError(
            f"minimiser on the bracket edge for problem {k}: "
            f"bracket [{lo[k]:.6g}, {hi[k]:.6g}], scan argmin {grid[k, idx[k]]:.6g}")

    step = (b0 - a0) / (n_coarse - 1)
    best_x = grid[rows, idx]
    best_f = vals[rows, idx]
    a = np.where(flat, lo, best_x - step)
    b = np.where(flat, lo, best_x + step)

    def f1(x):
        return fun(x[:, None])[:, 0]

    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f1(c), f1(d)
    for _ in range(maxiter):
        if np.all(b - a <= xtol * (1.0 + np.abs(a) + np.abs(b))):
            break
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        x_new = np.where(left, b - INVPHI * (b - a), a + INVPHI * (b - a))
        f_new = f1(x_new)
        c, d, fc, fd = (np.where(left, x_new, d), np.where(left, c, x_new),
                        np.where(left, f_new, fd), np.where(left, fc, f_new))
    else:
        raise SolverError("golden-section search did not converge")

    x = np.where(fc < fd, c, d)
    fx = np.minimum(fc, fd)
    keep = best_f < fx
    x = np.where(keep, best_x, x)
    fx = np.where(keep, best_f, fx)
    return np.where(flat, lo, x), np.where(flat, f1(lo), fx)
