"""Closed-form contracts for the linear energy value f - g = delta*x.

Four regimes are covered: the consumer's behaviour without a contract, the
first best (efforts dictated), the second best (efforts incentivised through
payment rates on consumption and on its quadratic variation) and the second
best restricted to contracts with no quadratic-variation rate.
"""

from dataclasses import dataclass, field
from enum import Enum
import warnings

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from . import core_model as cm
from .scalar_min import bracketed_min


class Regime(str, Enum):
    NO_CONTRACT = "none"
    FIRST_BEST = "fb"
    SECOND_BEST = "sb"
    SECOND_BEST_NO_RESP = "sb0"


@dataclass(frozen=True)
class PaymentSchedule:
    t_grid: np.ndarray
    z: np.ndarray
    gamma: np.ndarray
    pi_e: np.ndarray
    pi_v: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or t.size < 2 or t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be strictly increasing and start at 0")
        for name in ("z", "gamma", "pi_e", "pi_v"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != t.shape:
                arr = np.broadcast_to(arr, t.shape).copy()
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "t_grid", t)

    def rates(self, t):
        """Payment rates (z, gamma) interpolated linearly at times t."""
        return np.interp(t, self.t_grid, self.z), np.interp(t, self.t_grid, self.gamma)


@dataclass(frozen=True)
class ContractSolution:
    regime: Regime
    schedule: PaymentSchedule
    m: np.ndarray
    producer_ce: float
    consumer_ce: float
    fixed_part: float
    effort_a: np.ndarray
    effort_b: np.ndarray
    stats: dict
    params: cm.ModelParams = field(repr=False)

    @property
    def t_grid(self):
        return self.schedule.t_grid

    @property
    def value(self):
        """v(0, X0), the producer's value before paying the reservation level."""
        return self.producer_ce + self.consumer_ce


def time_grid(params, n=2001):
    return np.linspace(0.0, params.T, n)


def _check_grid(params, t_grid):
    t = time_grid(params) if t_grid is None else np.asarray(t_grid, dtype=float)
    if t[0] != 0 or abs(t[-1] - params.T) > 1e-12 * params.T:
        raise ValueError("t_grid must span [0, T]")
    return t


def integrate(values, t):
    return float(simpson(values, x=t))


def effort_stats(params, t, a, b):
    c1 = integrate(cm.cost_drift(params, a), t)
    c2 = integrate(0.5 * cm.cost_vol(params, b), t)
    s = params.T - t
    return {
        "cost_c1": c1,
        "cost_c2": c2,
        "total_cost": c1 + c2,
        "mean_reduction": integrate(s * a.sum(axis=-1), t) / params.T,
        "avg_volatility": integrate(np.sqrt(cm.vol_sq(params, b)), t) / params.T,
    }


def _solution(params, regime, t, z, gamma, pi_e, pi_v, m, a, b, consumer_ce, producer_ce):
    sol = ContractSolution(
        regime=regime,
        schedule=PaymentSchedule(t, z, gamma, pi_e, pi_v),
        m=m, producer_ce=producer_ce, consumer_ce=consumer_ce, fixed_part=float("nan"),
        effort_a=a, effort_b=b, stats=effort_stats(params, t, a, b), params=params)
    if regime is not Regime.NO_CONTRACT:
        object.__setattr__(sol, "fixed_part", contract_fixed_part(sol, params))
    return sol


def no_contract(params, t_grid=None):
    """Consumer alone: no drift effort, volatility effort against own risk."""
    t = _check_grid(params, t_grid)
    s = params.T - t
    gamma = -params.r * params.kappa ** 2 * s ** 2
    z = params.kappa * s
    a = cm.best_response_drift(params, z)
    b = cm.best_response_vol(params, gamma)
    m = cm.hamiltonian_vol(params, gamma)
    l0 = params.kappa * params.x0 * params.T + integrate(m, t)
    zero = np.zeros_like(t)
    return _solution(params, Regime.NO_CONTRACT, t, z, gamma, zero, zero, m, a, b, l0, 0.0)


def reservation_ce(params, t_grid=None):
    """The consumer's certainty equivalent without contract."""
    return no_contract(params, t_grid).consumer_ce


def first_best(params, t_grid=None):
    t = _check_grid(params, t_grid)
    s = params.T - t
    d, r, p = params.delta, params.r, params.p
    z = d * s
    gamma = -params.h - params.rho * d * d * s * s
    a = cm.best_response_drift(params, z)
    b = cm.best_response_vol(params, gamma)
    m = cm.hamiltonian_mean(params, z) + cm.hamiltonian_vol(params, gamma)
    v0 = d * params.T * params.x0 + integrate(m, t)
    pi_e = np.full_like(t, (r * params.kappa + p * params.theta) / (r + p))
    pi_v = np.full_like(t, p * params.h / (r + p))
    return _solution(params, Regime.FIRST_BEST, t, z, gamma, pi_e, pi_v, m, a, b,
                     params.l0, v0 - params.l0)


def q_of(params, z, vx, vxx=0.0):
    """Effective volatility price h - vxx + r z^2 + p (z - vx)^2."""
    gap = z - vx
    gap *= gap
    gap *= params.p
    gap += params.r * z * z
    gap += params.h - vxx
    return gap


def sb_objective(params, z, vx, vxx=0.0):
    return cm.drift_objective(params, z, vx) + cm.vol_cost_envelope(params, q_of(params, z, vx, vxx))


def sb_bracket(params, vx):
    return vx, params.p / (params.r + params.p) * vx


def sb_minimize(params, vx, vxx=0.0, n_coarse=1024):
    """Optimal consumption rate for given value-function derivatives."""
    vx = np.asarray(vx, dtype=float)
    vxx = np.broadcast_to(np.asarray(vxx, dtype=float), vx.shape)
    lo, hi = sb_bracket(params, vx)

    def fun(z):
        return sb_objective(params, z, vx[:, None], vxx[:, None])

    z, obj = bracketed_min(fun, lo, hi, n_coarse=n_coarse)
    # the minimiser provably lies in the bracket; project rounding-level excursions back
    zc = np.clip(z, np.minimum(lo, hi), np.maximum(lo, hi))
    moved = zc != z
    if np.any(moved):
        obj = np.where(moved, sb_objective(params, zc, vx, vxx), obj)
    return zc, obj


def second_best(params, t_grid=None):
    t = _check_grid(params, t_grid)
    s = params.T - t
    d = params.delta
    vx = d * s
    if d >= 0:
        zeta = params.p / (params.r + params.p) * vx
        obj = sb_objective(params, zeta, vx)
    else:
        zeta, obj = sb_minimize(params, vx)
    if np.any(cm.eta_a(params, zeta, vx) != 0):
        warnings.warn("drift-effort bound A_max binds at the optimum", RuntimeWarning)
    gamma = -q_of(params, zeta, vx)
    a = cm.best_response_drift(params, zeta)
    b = cm.best_response_vol(params, gamma)
    m = 0.5 * params.mu_bar * vx * vx - 0.5 * obj
    pi_e = params.kappa + np.gradient(zeta, t, edge_order=2)
    pi_v = params.h + params.p * (zeta - vx) ** 2
    v0 = d * params.T * params.x0 + integrate(m, t)
    return _solution(params, Regime.SECOND_BEST, t, zeta, gamma, pi_e, pi_v, m, a, b,
                     params.l0, v0 - params.l0)


def no_resp_weight(params):
    """Risk-sharing weight of the benchmark price (1 - w) kappa + w theta."""
    drift = params.mu_bar if params.delta < 0 else 0.0
    s2 = params.sigma_sq
    return (params.p * s2 + drift) / ((params.p + params.r) * s2 + drift)


def second_best_no_resp(params, t_grid=None):
    t = _check_grid(params, t_grid)
    s = params.T - t
    d = params.delta
    w = no_resp_weight(params)
    vx = d * s
    zeta = w * vx
    gamma = np.zeros_like(t)
    a = cm.best_response_drift(params, zeta)
    b = cm.best_response_vol(params, gamma)
    m = 0.5 * params.mu_bar * vx * vx - 0.5 * (
        q_of(params, zeta, vx) * params.sigma_sq + cm.drift_objective(params, zeta, vx))
    pi_e = np.full_like(t, (1 - w) * params.kappa + w * params.theta)
    v0 = d * params.T * params.x0 + integrate(m, t)
    return _solution(params, Regime.SECOND_BEST_NO_RESP, t, zeta, gamma, pi_e, np.zeros_like(t),
                     m, a, b, params.l0, v0 - params.l0)


SOLVERS = {
    Regime.NO_CONTRACT: no_contract,
    Regime.FIRST_BEST: first_best,
    Regime.SECOND_BEST: second_best,
    Regime.SECOND_BEST_NO_RESP: second_best_no_resp,
}


def solve(params, regime, t_grid=None):
    return SOLVERS[Regime(regime)](params, t_grid)


def info_rent_closed_form_applies(params):
    return params.delta < 0 and params.h + params.r * params.delta ** 2 * params.T ** 2 <= 1.0 / params.lam_max


def information_rent(params, t_grid=None):
    """First-best minus second-best producer certainty equivalent."""
    if params.delta >= 0:
        return 0.0
    if info_rent_closed_form_applies(params):
        r, p, T, d = params.r, params.p, params.T, params.delta
        return d * d * T ** 3 * r * r / (6 * (p + r)) / (1 / params.sigma_sq + (p + r) / params.mu_bar)
    return first_best(params, t_grid).producer_ce - second_best(params, t_grid).producer_ce


def contract_fixed_part(sol, params):
    """Deterministic part of the payment, written in rebate form.

    The variable part is int pi_e (X0 - X) dt - 1/2 int pi_v d<X>.  For the
    first best the fixed part is the one of the participation-binding
    risk-sharing contract.
    """
    t = sol.t_grid
    base = params.l0 - params.kappa * params.T * params.x0
    regime = Regime(sol.regime)
    if regime is Regime.NO_CONTRACT:
        raise ValueError("no payment without contract")
    if regime is Regime.FIRST_BEST:
        c = cm.cost_drift(params, sol.effort_a) + 0.5 * cm.cost_vol(params, sol.effort_b)
        wr = params.r / (params.r + params.p)
        return base + wr * integrate(c, t) - (1 - wr) * integrate(sol.m, t)
    z, gamma = sol.schedule.z, sol.schedule.gamma
    if regime is Regime.SECOND_BEST:
        H = cm.hamiltonian_mean(params, z) + cm.hamiltonian_vol(params, gamma)
        return base - integrate(H, t)
    return base + integrate(0.5 * params.r * z * z * params.sigma_sq - cm.hamiltonian_mean(params, z), t)


def payment_decomposition(sol, params):
    """Fixed part, consumer certainty equivalent of the variable part, and their sum."""
    t = sol.t_grid
    sched = sol.schedule
    # Pi(u) = int_u^T pi_e dt
    tail = cumulative_trapezoid(sched.pi_e[::-1], -t[::-1], initial=0.0)[::-1]
    A = sol.effort_a.sum(axis=-1)
    s2 = cm.vol_sq(params, sol.effort_b)
    random_ce = integrate(tail * A - 0.5 * sched.pi_v * s2 - 0.5 * params.r * tail ** 2 * s2, t)
    return {"fixed": sol.fixed_part, "random_ce": random_ce, "total": sol.fixed_part + random_ce}


def producer_ce_without_contract(params, t_grid=None):
    sol = no_contract(params, t_grid)
    t = sol.t_grid
    s = params.T - t
    s2 = cm.vol_sq(params, sol.effort_b)
    th = params.theta
    return (-th * params.T * params.x0 - 0.5 * params.h * integrate(s2, t)
            - 0.5 * params.p * th * th * integrate(s * s * s2, t))


def producer_gain(params, regime=Regime.SECOND_BEST, t_grid=None):
    """Producer CE with contract (reservation at the no-contract level) minus without."""
    with_l0 = params.with_l0(reservation_ce(params, t_grid))
    return solve(with_l0, regime, t_grid).producer_ce - producer_ce_without_contract(params, t_grid)
