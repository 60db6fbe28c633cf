import math

import pytest
from statsmodels.stats.proportion import proportion_confint

from sparsecorrupt import guarantees as g
from sparsecorrupt.dictionary import unitary_pair_profile
from sparsecorrupt.montecarlo import (NeRule, SWEEP_HEADER, SweepGrid, curve_csv, run_sweep,
                                      scaling_table, soundness_holds, threshold_curve,
                                      trial_seed, wilson_interval)

P = g.Program
CASE_1C = g.Scenario(True, True, True, True, P.PSEUDOINVERSE)
CASE_2B_L1 = g.Scenario(False, True, True, False, P.L1)
CASE_2D_L0 = g.Scenario(False, True, True, True, P.L0)


@pytest.mark.parametrize("k,n", [(0, 10), (10, 10), (3, 17), (480, 500)])
def test_wilson_matches_reference(k, n):
    lo, hi = wilson_interval(k, n)
    ref = proportion_confint(k, n, alpha=0.01, method="wilson")
    assert (lo, hi) == pytest.approx(ref, abs=1e-12)
    assert lo <= k / n <= hi


def test_trial_seed_distinct():
    seeds = {trial_seed(0, nx, ne, t) for nx in range(5) for ne in range(5) for t in range(5)}
    assert len(seeds) == 125


def test_zero_cell_and_records():
    grid = SweepGrid("dft:16", "identity:16", CASE_1C, [0, 2], [0, 1], trials=4, seed_base=1)
    res = run_sweep(grid)
    assert [(r.nx, r.ne) for r in res.records] == [(0, 0), (0, 1), (2, 0), (2, 1)]
    assert res.records[0].empirical_rate == 1.0
    for r in res.records:
        assert r.successes <= r.trials and r.wilson_low <= r.empirical_rate <= r.wilson_high
    assert res.to_csv().splitlines()[0] == ",".join(SWEEP_HEADER)


def test_cell_order_does_not_matter():
    a = SweepGrid("dft:16", "identity:16", CASE_2B_L1, [1, 2], [0, 1], trials=3, seed_base=5)
    b = SweepGrid("dft:16", "identity:16", CASE_2B_L1, [2, 1], [1, 0], trials=3, seed_base=5)
    assert run_sweep(a).to_csv() == run_sweep(b).to_csv()


def test_workers_do_not_change_result():
    grid = SweepGrid("dft:16", "identity:16", CASE_2B_L1, [1, 2], [0, 1], trials=3, seed_base=8)
    assert run_sweep(grid, workers=2).to_csv() == run_sweep(grid).to_csv()


def test_sweep_bounds():
    with pytest.raises(ValueError):
        run_sweep(SweepGrid("dft:8", "identity:8", CASE_1C, [9], [0], 1, 0))
    with pytest.raises(ValueError):
        SweepGrid("dft:8", "identity:8", CASE_1C, [1], [0], 0, 0)


def test_case_1c_soundness_m128():
    grid = SweepGrid("dft:128", "identity:128", CASE_1C, [1, 2], [1, 2], trials=400,
                     seed_base=3, beta=2.5)
    res = run_sweep(grid)
    bound = 1 - g.success_probability_bound(P.PSEUDOINVERSE, 2.5)
    for r in res.records:
        if r.predicted_feasible:
            assert r.empirical_rate >= 1 - bound - (r.wilson_high - r.wilson_low)
    assert soundness_holds(res)


def test_threshold_curve_properties():
    p = unitary_pair_profile(1e8)
    ne_values = [0, 10, 100, 1000, 10 ** 4, 10 ** 5, 10 ** 6, 5 * 10 ** 7, 9 * 10 ** 7]
    curve = threshold_curve(CASE_2B_L1, p, ne_values, g.BetaRule.LOG_M_OVER_3)
    vals = [v for _, v in curve]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0
    first_zero = vals.index(0)
    assert all(v == 0 for v in vals[first_zero:])
    c1 = threshold_curve(CASE_1C, p, ne_values, math.log(1e8))
    c2 = threshold_curve(CASE_2D_L0, p, ne_values, math.log(1e8))
    assert all(a >= b for (_, a), (_, b) in zip(c1, c2))


def test_scaling_table_shapes():
    ms = [10 ** k for k in range(8, 13)]
    const = scaling_table(ms, NeRule.const())
    vals = [nx for _, nx, _ in const]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    over = dict((m, nx / m) for m, nx, _ in scaling_table([1e10, 1e12], NeRule.m_over()))
    assert over[10 ** 10] == pytest.approx(over[10 ** 12], rel=0.1)
    assert over[10 ** 12] > 0
    assert scaling_table([1000], NeRule.const())[0][1] == 0
    assert [ne for _, _, ne in scaling_table([10 ** 8], NeRule.sqrt_m())] == [10 ** 4]


def test_curve_csv():
    assert curve_csv([(0, 5), (1, 4)], ["ne", "max_nx"]) == "ne,max_nx\n0,5\n1,4\n"
