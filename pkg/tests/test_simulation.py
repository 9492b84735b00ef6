import math

import numpy as np
import pytest

from drcontract import contracts as cc
from drcontract import core_model as cm
from drcontract import hjb_pde as hp
from drcontract import simulation as sim


def no_effort():
    # risk-neutral consumer without contract: no drift effort, b = 1
    return cm.nominal_params(r=0.0)


def test_discrete_qv_examples():
    assert sim.discrete_qv([2.0, 2.0, 2.0]) == 0.0
    assert sim.discrete_qv([0.0, 1.0, -1.0]) == 5.0
    with pytest.raises(ValueError):
        sim.discrete_qv([1.0])


def test_discrete_qv_additive():
    path = np.random.default_rng(0).standard_normal(50)
    assert sim.discrete_qv(path) == pytest.approx(sim.discrete_qv(path[:20]) + sim.discrete_qv(path[19:]))


def test_no_effort_mean_and_variance_identity():
    p = no_effort()
    sol = cc.no_contract(p)
    ens = sim.simulate(p, sol, n_paths=40_000, seed=11)
    se = ens.x_T.std(ddof=1) / math.sqrt(ens.n_paths)
    assert abs(ens.x_T.mean() - p.x0) <= 3 * se
    st = sim.time_average_stats(ens, p)
    target = p.T * p.sigma_sq / 3
    # the right-point time sum has a small O(dt) bias; it is far inside the band
    assert abs(st["var_time_avg"] - target) <= 3 * st["var_time_avg_se"]


def test_quadratic_variation_isometry():
    p = no_effort()
    ens = sim.simulate(p, cc.no_contract(p), n_paths=2_000, n_steps=10_000, seed=4)
    se = ens.qv.std(ddof=1) / math.sqrt(ens.n_paths)
    assert abs(ens.qv.mean() - p.sigma_sq * p.T) <= 3 * se


def test_reproducible_and_seed_sensitive(nominal):
    sol = cc.second_best(nominal)
    a = sim.simulate(nominal, sol, n_paths=9_000, n_steps=50, seed=7)
    b = sim.simulate(nominal, sol, n_paths=9_000, n_steps=50, seed=7)
    c = sim.simulate(nominal, sol, n_paths=9_000, n_steps=50, seed=8)
    np.testing.assert_array_equal(a.paths, b.paths)
    np.testing.assert_array_equal(a.payoff, b.payoff)
    assert not np.array_equal(a.x_T, c.x_T)
    assert np.all(a.paths[:, 0] == nominal.x0) and np.all(a.qv >= 0)


def test_first_best_mean_reduction(nominal):
    sol = cc.first_best(nominal)
    st = sim.time_average_stats(sim.simulate(nominal, sol, seed=1), nominal)
    assert abs(st["mean_reduction"] - sol.stats["mean_reduction"]) <= 3 * st["mean_reduction_se"]
    assert abs(st["mean_reduction"] - 0.05215) <= 3 * st["mean_reduction_se"]


def test_payoff_degenerate_contract():
    p = cm.nominal_params(kappa=0.0, theta=0.0, h=0.0)
    for reg in ("fb", "sb", "sb0"):
        sol = cc.solve(p, reg)
        ens = sim.simulate(p, sol, n_paths=500, n_steps=20, seed=0)
        np.testing.assert_allclose(ens.payoff, p.l0, atol=1e-12)


def test_payoff_needs_contract(nominal):
    sol = cc.no_contract(nominal)
    ens = sim.simulate(nominal, sol, n_paths=10, n_steps=5)
    assert ens.payoff is None
    with pytest.raises(ValueError):
        sim.evaluate_payoff(ens, sol, nominal)


def test_off_peak_martingale():
    p = cm.nominal_params(kappa=70.0)
    ens = sim.simulate(p, cc.second_best(p), n_paths=20_000, n_steps=110, seed=3, keep_paths=True)
    for i in (10, 40, 80, 110):
        x = ens.paths[:, i]
        assert abs(x.mean() - p.x0) <= 3 * x.std(ddof=1) / math.sqrt(x.size)


def test_off_peak_payoffs_agree_pathwise():
    p = cm.nominal_params(kappa=70.0)
    fb = sim.simulate(p, cc.first_best(p), n_paths=4_000, n_steps=2_000, seed=2)
    sb = sim.simulate(p, cc.second_best(p), n_paths=4_000, n_steps=2_000, seed=2)
    # identical paths; the payoffs differ only through the discretised quadratic variation
    np.testing.assert_array_equal(fb.x_T, sb.x_T)
    assert np.max(np.abs(fb.payoff - sb.payoff)) < 1e-3 * (1 + np.abs(sb.payoff).max())


def test_time_step_refinement(nominal):
    sol = cc.second_best_no_resp(nominal)
    a = sim.time_average_stats(sim.simulate(nominal, sol, n_paths=50_000, n_steps=275, seed=5), nominal)
    b = sim.time_average_stats(sim.simulate(nominal, sol, n_paths=50_000, n_steps=550, seed=6), nominal)
    band = 3 * math.hypot(a["mean_reduction_se"], b["mean_reduction_se"])
    assert abs(a["mean_reduction"] - b["mean_reduction"]) <= band


def test_simplified_statistic_deterministic():
    t = np.linspace(0, 2.0, 3)
    ens = sim.PathEnsemble(2, 2, 1.0, 0, t, x_T=np.zeros(2), qv=np.zeros(2),
                           int_x=np.full(2, 0.3 * 2.0), zdx=np.zeros(2), qvw=np.zeros(2))
    out = sim.simplified_contract_stat(ens, 0.3)
    assert out["mean"] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(out["raw_integral"], 0.6)


def test_simplified_statistic_folded_normal():
    p = no_effort()
    out = sim.simplified_contract_stat(sim.simulate(p, cc.no_contract(p), n_paths=40_000, seed=9), p.x0)
    ref = p.sigma_norm * math.sqrt(p.T / 3) * math.sqrt(2 / math.pi)
    assert abs(out["mean"] - ref) <= 3 * out["se"]


def test_simplified_statistic_smaller_with_volatility_incentive(nominal):
    sb = cc.second_best(nominal)
    sb0 = cc.second_best_no_resp(nominal)
    # deviations from each contract's own planned average consumption
    v_sb = sim.simplified_contract_stat(sim.simulate(nominal, sb, n_paths=30_000, seed=1),
                                        nominal.x0 - sb.stats["mean_reduction"])
    v_sb0 = sim.simplified_contract_stat(sim.simulate(nominal, sb0, n_paths=30_000, seed=1),
                                         nominal.x0 - sb0.stats["mean_reduction"])
    assert v_sb["mean"] < v_sb0["mean"] - 3 * math.hypot(v_sb["se"], v_sb0["se"])


def test_feedback_from_pde(nominal):
    grid = hp.default_grid(nominal, 41, 110)
    pde = hp.solve_first_best(nominal, grid=grid)
    ens = sim.simulate(nominal, pde, n_paths=20_000, n_steps=110, seed=0)
    st = sim.time_average_stats(ens, nominal)
    ref = cc.first_best(nominal).stats["mean_reduction"]
    assert abs(st["mean_reduction"] - ref) <= 3 * st["mean_reduction_se"] + 0.01 * ref


def test_short_schedule_rejected(nominal):
    sol = cc.second_best(nominal.replace(T=2.0))
    with pytest.raises(ValueError, match="cover"):
        sim.simulate(nominal, sol, n_paths=10, n_steps=5)
    with pytest.raises(TypeError):
        sim.simulate(nominal, object(), n_paths=10, n_steps=5)


def test_summary_echoes_seed(nominal):
    sol = cc.second_best(nominal)
    out = sim.summary(sim.simulate(nominal, sol, n_paths=1_000, n_steps=50, seed=42), sol, nominal)
    assert out["seed"] == 42 and out["regime"] == "sb"
    assert {"consumer_ce", "producer_ce", "mean_reduction", "var_time_avg"} <= out.keys()
