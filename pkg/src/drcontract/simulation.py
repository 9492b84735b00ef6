"""Monte Carlo simulation of consumption under a contract.

Paths follow dX = -a.1 dt + |sigma(b)| dW with the consumer's best responses
to the payment rates.  Only the aggregate noise matters, so one Gaussian per
step is drawn.  Per-path running sums needed by the payoff are accumulated
during the sweep, so paths themselves need not be stored.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from . import core_model as cm
from .contracts import ContractSolution, Regime
from .hjb_pde import PdeSolution

CHUNK = 8192


@dataclass(frozen=True)
class PathEnsemble:
    n_paths: int
    n_steps: int
    dt: float
    seed: int
    t: np.ndarray
    x_T: np.ndarray
    qv: np.ndarray
    int_x: np.ndarray
    zdx: np.ndarray
    qvw: np.ndarray
    paths: np.ndarray = None
    payoff: np.ndarray = None


def discrete_qv(path):
    path = np.asarray(path, dtype=float)
    if path.shape[-1] < 2:
        raise ValueError("need at least two points")
    return np.sum(np.diff(path, axis=-1) ** 2, axis=-1)


def _rate_source(params, sol, t):
    if isinstance(sol, ContractSolution):
        sched = sol.schedule
        if sched.t_grid[-1] < params.T * (1 - 1e-12):
            raise ValueError("schedule does not cover [0, T]")
        z, g = sched.rates(t)
        A = cm.best_response_drift(params, z).sum(axis=-1)
        vol = np.sqrt(cm.vol_sq(params, cm.best_response_vol(params, g)))
        return lambda i, x: (A[i], vol[i], z[i], g[i])
    if isinstance(sol, PdeSolution):
        if sol.t[-1] < params.T * (1 - 1e-12):
            raise ValueError("solution does not cover [0, T]")
        dt_pde = sol.t[1] - sol.t[0]

        def feedback(i, x):
            it = min(int(round(t[i] / dt_pde)), sol.t.size - 1)
            z, g = sol.rates_at(it, x)
            A = cm.best_response_drift(params, z).sum(axis=-1)
            vol = np.sqrt(cm.vol_sq(params, cm.best_response_vol(params, g)))
            return A, vol, z, g
        return feedback
    raise TypeError("expected a ContractSolution or PdeSolution")


def simulate(params, sol, n_paths=100_000, n_steps=550, seed=0, keep_paths=None):
    """Euler-Maruyama ensemble.  Chunk c draws its noise from SeedSequence([seed, c])."""
    dt = params.T / n_steps
    t = np.linspace(0.0, params.T, n_steps + 1)
    source = _rate_source(params, sol, t)
    if keep_paths is None:
        keep_paths = n_paths * (n_steps + 1) <= 5_000_000
    out = {k: np.empty(n_paths) for k in ("x_T", "qv", "int_x", "zdx", "qvw")}
    paths = np.empty((n_paths, n_steps + 1)) if keep_paths else None
    sq = math.sqrt(dt)
    for c, start in enumerate(range(0, n_paths, CHUNK)):
        stop = min(start + CHUNK, n_paths)
        m = stop - start
        rng = np.random.default_rng(np.random.SeedSequence([seed, c]))
        noise = rng.standard_normal((n_steps, m))
        x = np.full(m, params.x0)
        qv = np.zeros(m)
        ix = np.zeros(m)
        zdx = np.zeros(m)
        qvw = np.zeros(m)
        if keep_paths:
            paths[start:stop, 0] = x
        for i in range(n_steps):
            A, vol, z, g = source(i, x)
            dx = -A * dt + vol * sq * noise[i]
            zdx += z * dx
            d2 = dx * dx
            qv += d2
            qvw += (g + params.r * z * z) * d2
            x_new = x + dx
            ix += x_new * dt
            x = x_new
            if keep_paths:
                paths[start:stop, i + 1] = x
        for key, val in (("x_T", x), ("qv", qv), ("int_x", ix), ("zdx", zdx), ("qvw", qvw)):
            out[key][start:stop] = val
    ens = PathEnsemble(n_paths, n_steps, dt, seed, t, paths=paths, **out)
    if isinstance(sol, ContractSolution) and sol.regime is not Regime.NO_CONTRACT:
        ens = replace(ens, payoff=evaluate_payoff(ens, sol, params))
    return ens


def _deterministic_sums(ens, sol, params):
    """Left-point sums of H(z, gamma) and of the effort cost along the schedule."""
    z, g = sol.schedule.rates(ens.t[:-1])
    b = cm.best_response_vol(params, g)
    a = cm.best_response_drift(params, z)
    H = cm.hamiltonian_mean(params, z) + cm.hamiltonian_vol(params, g)
    c = cm.cost_drift(params, a) + 0.5 * cm.cost_vol(params, b)
    return float(H.sum() * ens.dt), float(c.sum() * ens.dt)


def evaluate_payoff(ens, sol, params):
    """Contract payment per path.

    Second-best regimes use the representation
    y0 + int Z dX + 1/2 int (G + r Z^2) d<X> - int (H + f) dt with y0 = L0.
    The first best uses the risk-sharing contract that splits the surplus
    int (delta X - c) dt - h/2 <X> in proportions r/(r+p) and p/(r+p).
    """
    regime = Regime(sol.regime)
    if regime is Regime.NO_CONTRACT:
        raise ValueError("no payment without contract")
    int_H, int_c = _deterministic_sums(ens, sol, params)
    l0 = sol.consumer_ce
    if regime is Regime.FIRST_BEST:
        wr = params.r / (params.r + params.p)
        wp = 1 - wr
        return (l0 - wp * sol.value - wr * (params.kappa * ens.int_x - int_c)
                - wp * (params.theta * ens.int_x + 0.5 * params.h * ens.qv))
    return l0 + ens.zdx + 0.5 * ens.qvw - int_H - params.kappa * ens.int_x


def _cara_ce(w, ra):
    n = w.size
    if ra == 0:
        return float(w.mean()), float(w.std(ddof=1) / math.sqrt(n))
    shift = w.min()
    u = np.exp(-ra * (w - shift))
    mean = u.mean()
    ce = shift - math.log(mean) / ra
    se = u.std(ddof=1) / math.sqrt(n) / (ra * mean)
    return float(ce), float(se)


def consumer_ce(ens, sol, params):
    """(estimate, standard error) of the consumer's certainty equivalent."""
    payoff = ens.payoff if ens.payoff is not None else evaluate_payoff(ens, sol, params)
    _, int_c = _deterministic_sums(ens, sol, params)
    return _cara_ce(payoff + params.kappa * ens.int_x - int_c, params.r)


def producer_ce(ens, sol, params):
    payoff = ens.payoff if ens.payoff is not None else evaluate_payoff(ens, sol, params)
    return _cara_ce(-payoff - params.theta * ens.int_x - 0.5 * params.h * ens.qv, params.p)


def time_average_stats(ens, params):
    """Mean reduction (1/T)|E int X dt - X0 T| and variance of the time average, with SEs."""
    avg = ens.int_x / params.T
    n = ens.n_paths
    dev = avg - params.x0
    var = avg.var(ddof=1)
    # standard error of the sample variance from the fourth central moment
    m4 = np.mean((avg - avg.mean()) ** 4)
    var_se = math.sqrt(max(m4 - var * var * (n - 3) / (n - 1), 0.0) / n)
    return {"mean_reduction": float(-dev.mean()), "mean_reduction_se": float(dev.std(ddof=1) / math.sqrt(n)),
            "var_time_avg": float(var), "var_time_avg_se": var_se}


def simplified_contract_stat(ens, x_target, T=None):
    """|time-average consumption - x_target| per path, with the raw integral."""
    T = ens.t[-1] if T is None else T
    raw = ens.int_x
    v = np.abs(raw / T - x_target)
    return {"mean": float(v.mean()), "std": float(v.std(ddof=1)), "se": float(v.std(ddof=1) / math.sqrt(v.size)),
            "values": v, "raw_integral": raw}


def summary(ens, sol, params):
    out = {"seed": ens.seed, "n_paths": ens.n_paths, "n_steps": ens.n_steps,
           "regime": Regime(sol.regime).value if isinstance(sol, ContractSolution) else sol.regime}
    out.update(time_average_stats(ens, params))
    out["mean_qv"] = float(ens.qv.mean())
    if isinstance(sol, ContractSolution) and sol.regime is not Regime.NO_CONTRACT:
        out["consumer_ce"], out["consumer_ce_se"] = consumer_ce(ens, sol, params)
        out["producer_ce"], out["producer_ce_se"] = producer_ce(ens, sol, params)
        out["analytic_consumer_ce"] = sol.consumer_ce
        out["analytic_producer_ce"] = sol.producer_ce
    return out
