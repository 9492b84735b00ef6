"""Finite-difference solvers for the HJB equations with a general energy value.

All equations are written in time-to-go tau = T - t as

    v_tau = F(tau, x, v_x, v_xx),   v(tau=0) = 0,

and stepped with implicit Euler.  Each step is a fixed-point iteration: the
Hamiltonian is evaluated at the current iterate together with its
sensitivities D = dF/dv_xx (half the optimal variance rate) and C = dF/dv_x,
these are frozen, and the banded system for v - dt*(D v_xx + C v_x) is
solved.  At convergence the step is fully implicit.  The end nodes are
linear extrapolations of their neighbours (zero second derivative).
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.linalg import solve_banded

from . import core_model as cm
from .contracts import PaymentSchedule, q_of, sb_bracket, sb_objective
from .scalar_min import SolverError, bracketed_min

LINEAR = "linear"
EXP_CONCAVE = "exp"


def energy_value(x, kind, kappa, k1=None):
    x = np.asarray(x, dtype=float)
    if kind == LINEAR:
        return kappa * x
    if kind == EXP_CONCAVE:
        if k1 is None or k1 <= 0:
            raise ValueError("k1 must be positive for the concave energy value")
        return -kappa * np.expm1(-k1 * x) / k1
    raise ValueError(f"unknown energy value kind {kind!r}")


@dataclass(frozen=True)
class PdeGrid:
    x_min: float
    x_max: float
    nx: int
    nt: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        if self.nx < 3 or self.nt < 1:
            raise ValueError("need nx >= 3 and nt >= 1")

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.nx - 1)

    def dt(self, T):
        return T / self.nt


def default_grid(params, nx=401, nt=2000, width=6.0):
    half = width * params.sigma_norm * math.sqrt(params.T)
    return PdeGrid(params.x0 - half, params.x0 + half, nx, nt)


@dataclass(frozen=True)
class PdeSolution:
    regime: str
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    z_field: np.ndarray
    gamma_field: np.ndarray
    growth_constant: float
    a_max_binding: bool = False

    def value_at(self, x0, it=0):
        return float(np.interp(x0, self.x, self.v[it]))

    def rates_at(self, it, x):
        return np.interp(x, self.x, self.z_field[it]), np.interp(x, self.x, self.gamma_field[it])


def _derivatives(v, dx):
    vx = np.empty_like(v)
    vxx = np.zeros_like(v)
    vx[1:-1] = (v[2:] - v[:-2]) / (2 * dx)
    vx[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * dx)
    vx[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * dx)
    vxx[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / dx ** 2
    return vx, vxx


def march(params, grid, rhs, regime, tol=1e-8, maxiter=200):
    """Backward implicit-Euler sweep.

    ``rhs(n, tau, vx, vxx)`` returns (F, D, C, z, gamma) on the grid, where n
    indexes the new time level (t = T - tau), D = dF/dv_xx >= 0 and
    C = dF/dv_x.  Both sensitivities are frozen at the current iterate.
    """
    x, dx = grid.x, grid.dx
    nt, nx = grid.nt, grid.nx
    dt = grid.dt(params.T)
    t = np.linspace(0.0, params.T, nt + 1)
    V = np.zeros((nt + 1, nx))
    Z = np.zeros((nt + 1, nx))
    G = np.zeros((nt + 1, nx))
    vx, vxx = _derivatives(V[nt], dx)
    Z[nt], G[nt] = rhs(nt, 0.0, vx, vxx)[3:]
    v = V[nt].copy()
    ab = np.zeros((5, nx))
    # rows 0 and nx-1: v_0 - 2 v_1 + v_2 = 0 (and the mirror image)
    ab[2, 0], ab[1, 1], ab[0, 2] = 1.0, -2.0, 1.0
    ab[4, nx - 3], ab[3, nx - 2], ab[2, nx - 1] = 1.0, -2.0, 1.0
    for step in range(nt):
        n = nt - step - 1
        tau = params.T - t[n]
        w = v.copy()
        for k in range(maxiter):
            vx, vxx = _derivatives(w, dx)
            F, D, C, z, g = rhs(n, tau, vx, vxx)
            diff = dt * D[1:-1] / dx ** 2
            conv = dt * C[1:-1] / (2 * dx)
            ab[3, :nx - 2] = -(diff - conv)          # sub-diagonal of rows 1..nx-2
            ab[2, 1:-1] = 1 + 2 * diff
            ab[1, 2:] = -(diff + conv)               # super-diagonal of rows 1..nx-2
            b = np.zeros(nx)
            b[1:-1] = v[1:-1] + dt * (F - D * vxx - C * vx)[1:-1]
            new = solve_banded((2, 2), ab, b)
            change = np.max(np.abs(new - w))
            w = new
            if not np.isfinite(change):
                raise SolverError(f"{regime}: non-finite iterate at t={t[n]:.6g}")
            if change <= tol * (1 + np.max(np.abs(w))):
                break
        else:
            raise SolverError(f"{regime}: inner iteration stalled at t={t[n]:.6g}, residual {change:.3g}")
        v = w
        V[n] = v
        vx, vxx = _derivatives(v, dx)
        Z[n], G[n] = rhs(n, tau, vx, vxx)[3:]
    tt = (params.T - t[:-1])[:, None]
    growth = float(np.max(np.abs(V[:-1]) / (tt * (1 + np.abs(x))[None, :])))
    return PdeSolution(regime, t, x, V, Z, G, growth)


def _fg(params, kind, k1, x):
    return energy_value(x, kind, params.kappa, k1) - params.theta * x


def solve_reservation(params, kind=LINEAR, grid=None, k1=None, **kw):
    """Consumer alone: v_tau = f + H_v(v_xx - r v_x^2)."""
    grid = grid or default_grid(params)
    f = energy_value(grid.x, kind, params.kappa, k1)

    def rhs(n, tau, vx, vxx):
        g = vxx - params.r * vx * vx
        b = cm.best_response_vol(params, g)
        s2 = cm.vol_sq(params, b)
        H = -0.5 * (cm.cost_vol(params, b) - g * s2)
        return f + H, 0.5 * s2, -params.r * vx * s2, vx, g

    return march(params, grid, rhs, "none", **kw)


def solve_first_best(params, kind=LINEAR, grid=None, k1=None, **kw):
    grid = grid or default_grid(params)
    fg = _fg(params, kind, k1, grid.x)

    def rhs(n, tau, vx, vxx):
        g = vxx - params.rho * vx * vx - params.h
        b = cm.best_response_vol(params, g)
        s2 = cm.vol_sq(params, b)
        H = -0.5 * (cm.cost_vol(params, b) - g * s2)
        C = -cm.best_response_drift(params, vx).sum(axis=-1) - params.rho * vx * s2
        return fg + cm.hamiltonian_mean(params, vx) + H, 0.5 * s2, C, vx, g

    return march(params, grid, rhs, "fb", **kw)


def solve_second_best(params, kind=LINEAR, grid=None, k1=None, n_coarse=64, **kw):
    grid = grid or default_grid(params)
    fg = _fg(params, kind, k1, grid.x)
    binding = []

    def rhs(n, tau, vx, vxx):
        lo, hi = sb_bracket(params, vx)
        z, obj = bracketed_min(lambda c: sb_objective(params, c, vx[:, None], vxx[:, None]),
                               lo, hi, n_coarse=n_coarse)
        if np.any(cm.eta_a(params, z, vx) != 0):
            binding.append(n)
        g = -q_of(params, z, vx, vxx)
        b = cm.best_response_vol(params, g)
        s2 = cm.vol_sq(params, b)
        F = fg + 0.5 * params.mu_bar * vx * vx - 0.5 * obj
        C = -cm.best_response_drift(params, z).sum(axis=-1) + params.p * (z - vx) * s2
        return F, 0.5 * s2, C, z, g

    sol = march(params, grid, rhs, "sb", **kw)
    if binding:
        warnings.warn("drift-effort bound A_max binds in the second-best PDE", RuntimeWarning)
        object.__setattr__(sol, "a_max_binding", True)
    return sol


# evaluation of a given deterministic contract

def _schedule_at(schedule, t):
    z, g = schedule.rates(t)
    return float(z), float(g)


def solve_consumer_response(params, schedule, kind=LINEAR, grid=None, k1=None, **kw):
    """Consumer's extra certainty equivalent u under a linear-rate contract.

    The contract is y0 + int Z dX + 1/2 int (G + r Z^2) d<X> - int (H(Z,G) + kappa X) dt,
    written for the linear energy value.  With the true energy value f the
    consumer solves

        u_tau = f - kappa x - H(Z,G) + H_m(Z + u_x) + H_v(G + u_xx - 2 r Z u_x - r u_x^2).

    The returned fields are the effective rates the consumer responds to.
    """
    grid = grid or default_grid(params)
    gap = energy_value(grid.x, kind, params.kappa, k1) - params.kappa * grid.x
    t = np.linspace(0.0, params.T, grid.nt + 1)

    def rhs(n, tau, ux, uxx):
        Z, G = _schedule_at(schedule, t[n])
        H0 = float(cm.hamiltonian_mean(params, Z) + cm.hamiltonian_vol(params, G))
        zeff = Z + ux
        geff = G + uxx - 2 * params.r * Z * ux - params.r * ux * ux
        b = cm.best_response_vol(params, geff)
        s2 = cm.vol_sq(params, b)
        Hv = -0.5 * (cm.cost_vol(params, b) - geff * s2)
        F = gap - H0 + cm.hamiltonian_mean(params, zeff) + Hv
        C = -cm.best_response_drift(params, zeff).sum(axis=-1) - params.r * zeff * s2
        return F, 0.5 * s2, C, zeff, geff

    return march(params, grid, rhs, "consumer", **kw)


def evaluate_producer(params, schedule, response, grid=None, **kw):
    """Producer's certainty equivalent P of -xi - int theta X dt - h/2 <X> (without y0).

    ``response`` carries the consumer's effective rate fields, from which the
    efforts follow by the best-response maps.
    """
    grid = grid or default_grid(params)
    x = grid.x
    t = np.linspace(0.0, params.T, grid.nt + 1)
    d, h, r, p = params.delta, params.h, params.r, params.p

    def rhs(n, tau, vx, vxx):
        Z, G = _schedule_at(schedule, t[n])
        H0 = float(cm.hamiltonian_mean(params, Z) + cm.hamiltonian_vol(params, G))
        A = cm.best_response_drift(params, response.z_field[n]).sum(axis=-1)
        s2 = cm.vol_sq(params, cm.best_response_vol(params, response.gamma_field[n]))
        F = (Z * A - 0.5 * (G + r * Z * Z + h) * s2 + H0 + d * x
             - A * vx + 0.5 * s2 * vxx - 0.5 * p * s2 * (vx - Z) ** 2)
        C = -A - p * s2 * (vx - Z)
        return F, 0.5 * s2, C, response.z_field[n], response.gamma_field[n]

    return march(params, grid, rhs, "producer", **kw)


def mean_path_volatility(params, sol):
    """Time average of |sigma(b)| along the mean consumption path."""
    t = sol.t
    xbar = params.x0
    vols = np.empty(t.size)
    for n in range(t.size):
        z, g = sol.rates_at(n, xbar)
        vols[n] = math.sqrt(float(cm.vol_sq(params, cm.best_response_vol(params, g))))
        if n + 1 < t.size:
            xbar -= float(cm.best_response_drift(params, z).sum()) * (t[n + 1] - t[n])
    return float(np.trapezoid(vols, t) / params.T)


def schedule_from(sol):
    return sol.schedule if hasattr(sol, "schedule") else sol


def linear_contract_benefit(params, schedule, kind=LINEAR, k1=None, grid=None, l0=None, **kw):
    """Producer benefit when a fixed linear-rate contract meets the consumer's true f.

    The fixed payment is set so the consumer's participation binds at ``l0``
    (the model's reservation level ``params.l0`` when None).
    """
    grid = grid or default_grid(params)
    l0 = params.l0 if l0 is None else l0
    u = solve_consumer_response(params, schedule, kind, grid, k1, **kw)
    P = evaluate_producer(params, schedule, u, grid, **kw)
    return {
        "benefit": P.value_at(params.x0) + u.value_at(params.x0) - l0,
        "volatility": mean_path_volatility(params, u),
        "l0": l0,
    }


def nonlinear_benefit(params, kind=EXP_CONCAVE, k1=None, grid=None, l0=None, **kw):
    grid = grid or default_grid(params)
    l0 = params.l0 if l0 is None else l0
    sb = solve_second_best(params, kind, grid, k1, **kw)
    return {"benefit": sb.value_at(params.x0) - l0, "volatility": mean_path_volatility(params, sb),
            "l0": l0}
