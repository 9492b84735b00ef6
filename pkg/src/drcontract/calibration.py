"""Recover model parameters from trial-style statistics.

Trial CSV schema (header required, extra columns ignored):

    household_id, timestamp, consumption_kW, event_flag

``timestamp`` is either hours as a number or an ISO-8601 date-time.  Every
row belongs to a price-event window.  ``event_flag`` is 1 for households
that received the price signal and 0 for control households.  Consecutive
rows of one household form one event unless separated by more than
``max_gap`` hours.  Per event the consumption deviation from the first
reading is averaged over time (trapezoid rule), which is the sample analogue
of (1/T) int (X_t - X_0) dt.
"""

import csv
from datetime import datetime
import math
import warnings

import numpy as np
from scipy.optimize import brentq

from . import contracts as cc
from .core_model import split_usages  # noqa: F401  (re-exported for multi-usage studies)

COLUMNS = ("household_id", "timestamp", "consumption_kW", "event_flag")


class CalibrationError(ValueError):
    pass


def sigma_from_variance(var_time_avg, T):
    if var_time_avg < 0 or T <= 0:
        raise CalibrationError("need var >= 0 and T > 0")
    return math.sqrt(3.0 * var_time_avg / T)


def variance_from_sigma(sigma, T):
    return T * sigma * sigma / 3.0


def mean_reduction_no_resp(params):
    """(1/3) Lambda mu_bar |delta| T^2 for the benchmark contract."""
    return cc.no_resp_weight(params) * params.mu_bar * abs(params.delta) * params.T ** 2 / 3.0


def mu_from_mean_reduction(target, params):
    """mu_bar such that the benchmark contract reduces consumption by ``target`` kW.

    The weight Lambda depends on mu_bar, so the equation is solved as a
    scalar root problem; the left side increases from 0 to infinity.
    """
    if params.delta >= 0:
        raise CalibrationError("mean reduction needs a peak event (delta < 0)")
    if target <= 0:
        raise CalibrationError("target reduction must be positive")

    def gap(log_mu):
        mu = math.exp(log_mu)
        return mean_reduction_no_resp(params.replace(mu=(mu,))) - target

    lo, hi = math.log(1e-30), math.log(1e30)
    if gap(lo) > 0 or gap(hi) < 0:
        raise CalibrationError("no positive root for mu_bar")
    root = brentq(gap, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=500)
    return math.exp(root)


def risk_aversion_from_premium(premium, std):
    """Absolute risk aversion from a premium and the payoff std: 2 RP / std^2."""
    if std <= 0:
        raise CalibrationError("std must be positive")
    return 2.0 * premium / std ** 2


def risk_aversion_from_slope(slope):
    """Risk aversion from the slope of risk premium against variance."""
    return 2.0 * slope


def lambda_sweep(params, lambda_grid, t_grid=None):
    """Second-best effort costs across a grid of responsiveness cost scales.

    Returns the cost curves, the argmax of the volatility-effort cost
    (``lambda_star``, the reference value) and the argmax of the total cost.
    Ties go to the smallest grid point.  The activation threshold is the
    smallest lambda at which the no-volatility-effort rates would trigger
    volatility effort somewhere on the event.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise CalibrationError("lambda grid must be positive and increasing")
    c1 = np.empty(grid.size)
    c2 = np.empty(grid.size)
    benefit = np.empty(grid.size)
    vol = np.empty(grid.size)
    for k, lam in enumerate(grid):
        sol = cc.second_best(params.replace(lam=(lam,) * params.n_usages), t_grid)
        c1[k] = sol.stats["cost_c1"]
        c2[k] = sol.stats["cost_c2"]
        benefit[k] = sol.producer_ce
        vol[k] = sol.stats["avg_volatility"]
    total = c1 + c2
    if np.all(c2 == 0):
        warnings.warn("no volatility effort anywhere on the grid", RuntimeWarning)
        star = grid[-1]
    else:
        star = grid[int(np.argmax(c2))]
    # with b = 1 the second best is the benchmark, whose q(t) peaks at t = 0
    w = cc.no_resp_weight(params)
    d, T = params.delta, params.T
    q_max = params.h + params.r * (w * d * T) ** 2 + params.p * ((w - 1) * d * T) ** 2
    return {
        "lambda": grid, "cost_c1": c1, "cost_c2": c2, "total_cost": total,
        "producer_ce": benefit, "avg_volatility": vol,
        "lambda_star": float(star), "lambda_total_argmax": float(grid[int(np.argmax(total))]),
        "activation_threshold": 1.0 / q_max if q_max > 0 else math.inf,
    }


def lambda_log_grid(lo=1e-4, hi=10.0, n=200):
    return np.logspace(math.log10(lo), math.log10(hi), n)


# trial data

def _parse_time(text, lineno):
    try:
        return float(text)
    except ValueError:
        pass
    try:
        stamp = datetime.fromisoformat(text.strip())
    except ValueError:
        raise CalibrationError(f"line {lineno}: bad timestamp {text!r}") from None
    return stamp.timestamp() / 3600.0


def read_trial_csv(path):
    """Rows grouped by household: {household: (flags, times, kW)} in file order."""
    households = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CalibrationError("line 1: empty file")
        missing = [c for c in COLUMNS if c not in reader.fieldnames]
        if missing:
            raise CalibrationError(f"line 1: missing columns {missing}")
        for row in reader:
            lineno = reader.line_num
            hid = row["household_id"]
            t = _parse_time(row["timestamp"], lineno)
            try:
                x = float(row["consumption_kW"])
                flag = int(row["event_flag"])
            except (TypeError, ValueError):
                raise CalibrationError(f"line {lineno}: bad consumption or flag") from None
            if flag not in (0, 1):
                raise CalibrationError(f"line {lineno}: event_flag must be 0 or 1")
            rec = households.setdefault(hid, ([], [], []))
            if rec[1] and t <= rec[1][-1]:
                raise CalibrationError(f"line {lineno}: timestamps not increasing for household {hid}")
            if rec[0] and flag != rec[0][-1]:
                raise CalibrationError(f"line {lineno}: household {hid} switches group")
            rec[0].append(flag)
            rec[1].append(t)
            rec[2].append(x)
    return households


def _events(times, values, max_gap):
    t = np.asarray(times)
    x = np.asarray(values)
    cuts = np.flatnonzero(np.diff(t) > max_gap) + 1
    return list(zip(np.split(t, cuts), np.split(x, cuts)))


def ingest_trial_csv(path, max_gap=1.0, price_spread=1.0):
    """Aggregates for calibration.

    var_time_avg: cross-event variance of control time-averaged deviations (kW^2).
    mean_reduction: control minus treated mean time-averaged deviation (kW).
    bill_std: std across control households of the event energy, times
        ``price_spread`` (pence when the spread is in pence/kWh).
    duration: mean event duration (h).
    """
    households = read_trial_csv(path)
    groups = {0: [], 1: []}
    durations = []
    bills = []
    for flags, times, values in households.values():
        energy = 0.0
        for t, x in _events(times, values, max_gap):
            if t.size < 2:
                continue
            span = t[-1] - t[0]
            groups[flags[0]].append(np.trapezoid(x - x[0], t) / span)
            durations.append(span)
            energy += np.trapezoid(x, t)
        if flags[0] == 0:
            bills.append(energy * price_spread)
    if not durations:
        raise CalibrationError("no events in file")
    control = np.asarray(groups[0])
    treated = np.asarray(groups[1])
    if control.size == 0:
        raise CalibrationError("no control events in file")
    var = float(control.var(ddof=1)) if control.size > 1 else 0.0
    reduction = float(control.mean() - treated.mean()) if treated.size else 0.0
    return {
        "var_time_avg": var,
        "mean_reduction": reduction,
        "bill_std": float(np.std(bills, ddof=1)) if len(bills) > 1 else 0.0,
        "duration": float(np.mean(durations)),
        "n_control_events": int(control.size),
        "n_treated_events": int(treated.size),
    }


def write_trial_csv(path, control_paths, treated_paths, t, events_per_household=1,
                    sample_every=1, day=24.0):
    """Half-hourly style trial file from simulated paths (one path per event)."""
    idx = np.arange(0, t.size, sample_every)
    if idx[-1] != t.size - 1:
        idx = np.append(idx, t.size - 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for flag, paths in ((0, control_paths), (1, treated_paths)):
            if paths is None:
                continue
            for k in range(paths.shape[0]):
                hid = f"{'c' if flag == 0 else 't'}{k // events_per_household}"
                offset = (k % events_per_household) * day
                for i in idx:
                    w.writerow((hid, format(offset + t[i], ".10g"), format(paths[k, i], ".10g"), flag))


def calibrate(aggregates, base, target_reduction=None):
    """ModelParams with sigma and mu_bar re-estimated from trial aggregates."""
    T = aggregates.get("duration", base.T)
    sigma = sigma_from_variance(aggregates["var_time_avg"], T)
    params = base.replace(T=T, sigma=(sigma,), lam=(base.lam[0],), mu=(base.mu_bar,))
    target = aggregates["mean_reduction"] if target_reduction is None else target_reduction
    mu = mu_from_mean_reduction(target, params)
    return params.replace(mu=(mu,))
