"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py -v`` (a PASS/FAIL line per criterion is
printed in the terminal summary) or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time
from decimal import Decimal, getcontext

import mpmath as mpm
import numpy as np
import pytest

from oracles import l1_oracle_complex, l1_oracle_real, oracle_deltas
from sparsecorrupt import cli
from sparsecorrupt import guarantees as g
from sparsecorrupt.dictionary import (CoherenceProfile, build_chirp, build_dft, build_identity, concat,
                                      coherence, coherence_profile, from_matrix, mutual_coherence,
                                      spectral_norm, unitary_pair_profile)
from sparsecorrupt.montecarlo import SweepGrid, run_sweep, soundness_holds, wilson_interval
from sparsecorrupt.signals import make_instance, make_rng
from sparsecorrupt.solvers import (Mode, dual_certificate, recover_both_known, sign_of,
                                   solve_l1)

P = g.Program


# 1 ---------------------------------------------------------------------------

def test_criterion_01_coherence_exactness():
    t0 = time.perf_counter()
    for m in (4, 16, 64, 256):
        mu = mutual_coherence(build_dft(m), build_identity(m))
        assert abs(mu - 1 / math.sqrt(m)) <= 1e-12, (m, mu)
    assert time.perf_counter() - t0 < 1.0


# 2 ---------------------------------------------------------------------------

def test_criterion_02_two_onb_profile():
    t0 = time.perf_counter()
    for m in (16, 64):
        b = concat(build_identity(m), build_dft(m))
        # A must be unbiased w.r.t. both bases in B; the chirp basis is
        prof = coherence_profile(build_chirp(m), b)
        assert abs(coherence(b) - 1 / math.sqrt(m)) <= 1e-10
        assert abs(prof.mu_b - 1 / math.sqrt(m)) <= 1e-10
        assert abs(prof.mu_m - 1 / math.sqrt(m)) <= 1e-10
        assert abs(spectral_norm(b) - math.sqrt(2)) <= 1e-10
        assert abs(prof.norm_b - math.sqrt(2)) <= 1e-10
    assert time.perf_counter() - t0 < 1.0


# 3 ---------------------------------------------------------------------------

SCENARIOS = [
    (True, True, True, False, "pinv"), (True, True, False, True, "pinv"),
    (True, True, True, True, "pinv"),
    (False, True, True, False, "l0"), (False, True, True, False, "l1"),
    (False, True, True, True, "l0"), (False, True, True, True, "l1"),
    (True, False, True, False, "l0"), (True, False, True, False, "l1"),
    (False, False, True, False, "l0"), (False, False, True, True, "l1"),
    (False, False, False, True, "l1"), (False, True, False, True, "l0"),
]


def _random_tuple(rng):
    m = int(10 ** rng.uniform(1, 10))
    n_a = int(m * rng.uniform(1, 4))
    n_b = int(m * rng.uniform(1, 4))
    zero = rng.random(3) < 0.25
    prof = dict(
        mu_a=0.0 if zero[0] else float(10 ** rng.uniform(-5, -0.5)),
        mu_b=0.0 if zero[1] else float(10 ** rng.uniform(-5, -0.5)),
        mu_m=0.0 if zero[2] else float(10 ** rng.uniform(-5, -0.5)),
        norm_a=float(rng.uniform(1, 3)), norm_b=float(rng.uniform(1, 3)),
        norm_ab=float(rng.uniform(1, 3)), m=m, n_a=n_a, n_b=n_b)
    nx = int(rng.integers(0, max(2, int(m ** 0.6))))
    ne = int(rng.integers(0, max(2, int(m ** 0.6))))
    floor = max(math.log(max(nx, 1)), math.log(max(ne, 1)))
    beta = floor + float(rng.uniform(0.01, 10))
    return prof, nx, ne, beta


def test_criterion_03_formula_fidelity():
    rng = np.random.default_rng(20240603)
    worst = 0.0
    for i in range(50):
        prof, nx, ne, beta = _random_tuple(rng)
        xk, ek, xr, er, prog = SCENARIOS[i % len(SCENARIOS)]
        scen = g.Scenario(xk, ek, xr, er, P(prog))
        res = g.check_guarantee(scen, CoherenceProfile(**prof), g.SparsityPoint(nx, ne, beta))
        ref_min, ref_max = oracle_deltas(xk, ek, xr, er, prog, prof, nx, ne, beta)
        for got, ref in ((res.delta_min, ref_min), (res.delta_max, ref_max)):
            err = abs(mpm.mpf(got) - ref)
            rel = float(err / abs(ref)) if ref != 0 else float(err)
            worst = max(worst, rel)
            assert rel <= 1e-12, (i, prof, nx, ne, beta, got, ref)
    print(f"worst relative deviation {worst:.3g}")


# 4 ---------------------------------------------------------------------------

def _quadratic_root_max_nx(m, ne, beta, program, both_random):
    """Max nx for a unitary, maximally incoherent pair with E known, solved by hand.

    Every term is affine in t = sqrt(nx): delta_min = e^{1/4} (t/sqrt(m) + c) and
    the support bound does not depend on nx, so t < sqrt(m) (e^{-1/4} delta_max - c).
    In the random-random case the cross term is a min of two such branches.
    """
    mu = 1 / math.sqrt(m)
    if both_random and beta < math.log(max(ne, 1)):
        return 0
    dmax = 1 - ne / m
    if program == "l1":
        dmax = min(dmax, 1 - math.sqrt(2 * ne / m * (math.log(m) + beta)))
    if dmax <= 0:
        return 0
    if both_random:
        # branch 1: 3 mu sqrt(2 beta) t + sqrt(ne/m); branch 2: 3 mu sqrt(2 beta ne) + t / sqrt(m)
        roots = [(math.exp(-0.25) * dmax - math.sqrt(ne / m)) / (3 * mu * math.sqrt(2 * beta)),
                 (math.exp(-0.25) * dmax - 3 * mu * math.sqrt(2 * beta * ne)) * math.sqrt(m)]
        t = max(roots)
    else:
        t = (math.exp(-0.25) * dmax - 3 * mu * math.sqrt(2 * beta * ne)) * math.sqrt(m)
    if t <= 0:
        return 0
    nx = min(math.ceil(t * t) - 1, m)
    return max(0, min(nx, math.floor(math.exp(beta))))


def test_criterion_04_closed_form_cross_check():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    for i in range(20):
        m = int(10 ** rng.uniform(4, 12))
        ne = int(10 ** rng.uniform(0, math.log10(m) - 2)) if i % 5 else 0
        beta = [math.log(m), math.log(3 * m), math.log(m) / 3, float(rng.uniform(5, 40))][i % 4]
        both = i % 2 == 1
        program = "l1" if i % 3 else "l0"
        scen = g.Scenario(False, True, True, both, P(program))
        got = g.max_recoverable_nx(scen, unitary_pair_profile(m), ne, beta)
        ref = _quadratic_root_max_nx(m, ne, beta, program, both)
        assert abs(got - ref) <= 1, (m, ne, beta, program, both, got, ref)
        assert abs(g.closed_form_max_nx(scen, unitary_pair_profile(m), ne, beta) - got) <= 1
    assert time.perf_counter() - t0 < 5.0


# 5 ---------------------------------------------------------------------------

def _scaling_decimal(m, nx, ne):
    getcontext().prec = 60
    m, nx, ne = Decimal(m), Decimal(nx), Decimal(ne)
    e_q = Decimal(-0.25).exp()
    lhs = e_q * m.sqrt()
    rhs = nx.sqrt() + (3 * Decimal(2).sqrt() + 2 * e_q) * (ne * m.ln()).sqrt()
    return lhs > rhs


def test_criterion_05_scaling_claim():
    verdicts = {}
    for m in (10 ** 8, 10 ** 10, 10 ** 12):
        nx, ne = m / 50, m / (50 * math.log(m))
        got = g.scaling_condition(m, nx, ne)
        assert got == _scaling_decimal(m, Decimal(m) / 50, Decimal(m) / (50 * Decimal(m).ln()))
        verdicts[m] = got
    # the claim under test: the condition is satisfiable at these sparsities
    assert all(verdicts.values()), f"scaling_condition verdicts {verdicts}"


# 6 ---------------------------------------------------------------------------

def _no_error_profile(m, n_a):
    return CoherenceProfile(mu_a=1 / math.sqrt(m), mu_b=0.0, mu_m=1 / math.sqrt(m),
                            norm_a=math.sqrt(n_a / m), norm_b=1.0, norm_ab=1.0,
                            m=m, n_a=n_a, n_b=m)


def test_criterion_06_no_error_doubling():
    n_a = 2 ** 24
    beta = math.log(n_a)
    points = 0
    for program in (P.L0, P.L1):
        for nx in (1, 4, 16, 64, 256):
            for m in (2 ** 12, 2 ** 14, 2 ** 16):
                before = g.no_error_condition(_no_error_profile(m, n_a), nx, beta, program)
                after = g.no_error_condition(_no_error_profile(2 * m, n_a), nx, beta, program)
                assert not (before and not after), (program, nx, m)
                points += 1
    assert points == 30


# 7 ---------------------------------------------------------------------------

def test_criterion_07_pseudo_inverse_soundness():
    t0 = time.perf_counter()
    pairs = {m: (build_dft(m), build_identity(m)) for m in (16, 64, 128)}
    count = 0
    seed = 0
    while count < 1000:
        rng = make_rng(7, seed)
        seed += 1
        if seed % 2:
            m = int(rng.choice([16, 64, 128]))
            da, db = pairs[m]
        else:
            m = int(rng.integers(8, 65))
            da = from_matrix(rng.standard_normal((m, 2 * m)) + 1j * rng.standard_normal((m, 2 * m)),
                             normalize=True)
            db = from_matrix(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)),
                             normalize=True)
        nx = int(rng.integers(0, m // 3 + 1))
        ne = int(rng.integers(0, m // 3 + 1))
        scen = g.Scenario(True, True, True, True, P.PSEUDOINVERSE)
        inst = make_instance(da, db, scen, nx, ne, seed)
        sub = np.hstack([da.entries[:, inst.support_x], db.entries[:, inst.support_e]])
        if sub.shape[1] and np.linalg.svd(sub, compute_uv=False)[-1] <= 1e-6:
            continue
        rep = recover_both_known(da, db, inst.z, inst.support_x, inst.support_e,
                                 inst.x_true, inst.e_true)
        err = max(np.linalg.norm(rep.x_hat - inst.x_true) / max(np.linalg.norm(inst.x_true), 1e-300),
                  np.linalg.norm(rep.e_hat - inst.e_true) / max(np.linalg.norm(inst.e_true), 1e-300))
        if nx + ne == 0:
            err = max(np.abs(rep.x_hat).max(), np.abs(rep.e_hat).max())
        assert err <= 1e-8, (seed, m, nx, ne, err)
        count += 1
    assert time.perf_counter() - t0 < 30.0


# 8 ---------------------------------------------------------------------------

def test_criterion_08_l1_against_oracle():
    worst_gap = worst_feas = 0.0
    for i in range(100):
        rng = make_rng(8, i)
        m = int(rng.integers(2, 13))
        n_a = int(rng.integers(1, 2 * m))
        n_b = int(rng.integers(max(1, m + 1 - n_a), 2 * m + 1))
        real = i % 2 == 0

        def draw(*shape):
            out = rng.standard_normal(shape)
            return out if real else out + 1j * rng.standard_normal(shape)

        da = from_matrix(draw(m, n_a), normalize=True)
        db = from_matrix(draw(m, n_b), normalize=True)
        d = np.hstack([da.entries, db.entries])
        if i % 4 < 2:
            z = draw(m)
        else:
            cols = rng.choice(n_a + n_b, 2, replace=False)
            z = d[:, cols] @ draw(2)
        rep = solve_l1(da, db, z, Mode.C)
        ref = l1_oracle_real(d.real, z.real) if real else l1_oracle_complex(d, z)
        gap = abs(rep.objective - ref) / max(1.0, ref)
        feas = float(np.linalg.norm(d @ np.concatenate([rep.x_hat, rep.e_hat]) - z))
        worst_gap, worst_feas = max(worst_gap, gap), max(worst_feas, feas)
        assert rep.converged, i
        assert gap <= 1e-6, (i, rep.objective, ref)
        assert feas <= 1e-8, (i, feas)
    print(f"worst objective gap {worst_gap:.3g}, worst feasibility {worst_feas:.3g}")


# 9 ---------------------------------------------------------------------------

def test_criterion_09_certificate_soundness():
    found = tried = 0
    pairs = {m: (build_dft(m), build_identity(m)) for m in (16, 32, 64)}
    scen = g.Scenario(False, False, True, True, P.L1)
    while found < 200:
        tried += 1
        assert tried < 5000, f"only {found} certified instances in {tried} draws"
        rng = make_rng(9, tried)
        m = int(rng.choice([16, 32, 64]))
        da, db = pairs[m]
        nx, ne = int(rng.integers(1, 4)), int(rng.integers(0, 4))
        inst = make_instance(da, db, scen, nx, ne, tried)
        sign = sign_of(np.concatenate([inst.x_true[inst.support_x], inst.e_true[inst.support_e]]))
        cert = dual_certificate(da, db, inst.support_x, inst.support_e, sign, "both")
        if not cert.max_dual_inner < 0.99:
            continue
        found += 1
        rep = solve_l1(da, db, inst.z, Mode.C, x_true=inst.x_true, e_true=inst.e_true)
        assert max(rep.rel_error_x, rep.rel_error_e) <= 1e-6, (tried, rep.rel_error_x, rep.rel_error_e)


# 10 --------------------------------------------------------------------------

BETA_SOUNDNESS = 3.0


def _soundness(scenario, nx_values, ne_values, trials):
    grid = SweepGrid("dft:256", "identity:256", scenario, nx_values, ne_values, trials,
                     seed_base=10, beta=BETA_SOUNDNESS)
    res = run_sweep(grid)
    assert all(r.predicted_feasible for r in res.records), [r.row() for r in res.records]
    failures, total = res.pooled_failures()
    assert total == 2000
    bound = 1 - g.success_probability_bound(scenario.program, BETA_SOUNDNESS)
    low, _ = wilson_interval(failures, total)
    print(f"{scenario.case}: {failures}/{total} failures, Wilson-99% low {low:.4g}, bound {bound:.4g}")
    return soundness_holds(res) and low <= bound


def test_criterion_10_empirical_soundness():
    t0 = time.perf_counter()
    case_1c = g.Scenario(True, True, True, True, P.PSEUDOINVERSE)
    case_2b = g.Scenario(False, True, True, False, P.L1)
    assert _soundness(case_1c, [1, 2], [1, 2], 500)
    assert _soundness(case_2b, [1, 2], [0, 1], 500)
    assert time.perf_counter() - t0 < 600.0


# 11 --------------------------------------------------------------------------

def test_criterion_11_sweep_determinism(tmp_path):
    args = ["sweep", "--a", "dft:32", "--b", "identity:32", "--case", "2b", "--program", "l1",
            "--nx", "1,2,3", "--ne", "0,1", "--trials", "5", "--seed", "11"]
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        assert cli.main(args + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"nx,ne,trials,successes,rate,wilson_low,wilson_high,predicted,")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
