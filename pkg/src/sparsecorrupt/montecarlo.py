"""Empirical sweeps over sparsity grids and guarantee threshold curves."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from . import guarantees as g
from .dictionary import CoherenceProfile, coherence_profile, parse_spec, unitary_pair_profile
from .signals import make_instance
from .solvers import Mode, recover_both_known, solve_l0_exhaustive, solve_l1

WILSON_CONFIDENCE = 0.99
SWEEP_HEADER = ["nx", "ne", "trials", "successes", "rate", "wilson_low", "wilson_high",
                "predicted", "delta_min", "delta_max"]
SEED_MASK = (1 << 64) - 1


def wilson_interval(successes: int, trials: int, confidence: float = WILSON_CONFIDENCE):
    if trials < 1:
        raise ValueError("need at least one trial")
    zq = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + zq * zq / trials
    centre = (p + zq * zq / (2 * trials)) / denom
    half = zq * math.sqrt(p * (1 - p) / trials + zq * zq / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class SweepGrid:
    da_spec: str
    db_spec: str
    scenario: g.Scenario
    nx_values: tuple
    ne_values: tuple
    trials: int
    seed_base: int
    success_tol: float = 1e-5
    beta: object = None  # BetaRule, float, or None for the program's default rule
    l0_max_sparsity: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "nx_values", tuple(int(v) for v in self.nx_values))
        object.__setattr__(self, "ne_values", tuple(int(v) for v in self.ne_values))


@dataclass
class CellRecord:
    nx: int
    ne: int
    trials: int
    successes: int
    empirical_rate: float
    wilson_low: float
    wilson_high: float
    predicted_feasible: bool
    delta_interval: tuple
    nonconverged: int = 0

    def row(self) -> list:
        return [self.nx, self.ne, self.trials, self.successes, repr(self.empirical_rate),
                repr(self.wilson_low), repr(self.wilson_high), int(self.predicted_feasible),
                repr(self.delta_interval[0]), repr(self.delta_interval[1])]


@dataclass
class SweepResult:
    grid: SweepGrid
    beta: float
    records: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for rec in self.records:
            writer.writerow(rec.row())
        return buf.getvalue()

    def pooled_failures(self, predicted_only: bool = True) -> tuple[int, int]:
        recs = [r for r in self.records if r.predicted_feasible or not predicted_only]
        trials = sum(r.trials for r in recs)
        return trials - sum(r.successes for r in recs), trials


def trial_seed(seed_base: int, nx: int, ne: int, trial: int) -> int:
    """Per-trial seed mixed from (seed_base, nx, ne, trial) with a SeedSequence hash."""
    ss = np.random.SeedSequence([seed_base & SEED_MASK, nx, ne, trial])
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0])


def _solve(da, db, inst, scenario: g.Scenario, grid: SweepGrid):
    kw = dict(x_true=inst.x_true, e_true=inst.e_true, success_tol=grid.success_tol)
    if scenario.program is g.Program.PSEUDOINVERSE:
        return recover_both_known(da, db, inst.z, inst.support_x, inst.support_e, **kw)
    mode = Mode.ES if scenario.e_known else Mode.XS if scenario.x_known else Mode.C
    sup = dict(support_x=inst.support_x, support_e=inst.support_e)
    if scenario.program is g.Program.L1:
        return solve_l1(da, db, inst.z, mode, **sup, **kw)
    k = grid.l0_max_sparsity
    if k is None:
        k = inst.nx + (0 if scenario.e_known else inst.ne)
    return solve_l0_exhaustive(da, db, inst.z, k, mode, **sup, **kw)


def _run_cell(grid: SweepGrid, nx: int, ne: int, beta: float, profile: CoherenceProfile) -> CellRecord:
    da, db = parse_spec(grid.da_spec), parse_spec(grid.db_spec)
    try:
        verdict = g.check_guarantee(grid.scenario, profile, g.SparsityPoint(nx, ne, beta))
        predicted, interval = verdict.feasible, (verdict.delta_min, verdict.delta_max)
    except g.BetaFloorError:
        predicted, interval = False, (math.nan, math.nan)
    successes = nonconv = 0
    for t in range(grid.trials):
        inst = make_instance(da, db, grid.scenario, nx, ne, trial_seed(grid.seed_base, nx, ne, t))
        rep = _solve(da, db, inst, grid.scenario, grid)
        if not rep.converged:
            nonconv += 1
        elif rep.success:
            successes += 1
    lo, hi = wilson_interval(successes, grid.trials)
    return CellRecord(nx, ne, grid.trials, successes, successes / grid.trials, lo, hi,
                      predicted, interval, nonconv)


def run_sweep(grid: SweepGrid, workers: int = 1) -> SweepResult:
    """Run every (nx, ne) cell of the grid and attach the predicted verdict.

    Each trial draws its own seed from (seed_base, nx, ne, trial), so the result
    does not depend on the order in which cells are visited, nor on ``workers``
    (cells run in that many processes when above 1). Records come out sorted by
    (nx, ne). A solver that hits its iteration cap counts as a failure and is
    also tallied in ``nonconverged``.
    """
    da, db = parse_spec(grid.da_spec), parse_spec(grid.db_spec)
    if da.m != db.m:
        raise ValueError(f"dictionaries have {da.m} and {db.m} rows")
    for nx in grid.nx_values:
        if not 0 <= nx <= da.n:
            raise ValueError(f"nx={nx} outside [0, n_a={da.n}]")
    for ne in grid.ne_values:
        if not 0 <= ne <= db.n:
            raise ValueError(f"ne={ne} outside [0, n_b={db.n}]")
    profile = coherence_profile(da, db)
    rule = grid.beta if grid.beta is not None else g.default_beta_rule(grid.scenario.program)
    beta = g.resolve_beta(rule, da.m)
    cells = sorted({(nx, ne) for nx in grid.nx_values for ne in grid.ne_values})
    result = SweepResult(grid, beta)
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, grid, nx, ne, beta, profile) for nx, ne in cells]
            result.records = [f.result() for f in futures]
    else:
        result.records = [_run_cell(grid, nx, ne, beta, profile) for nx, ne in cells]
    return result


def soundness_holds(result: SweepResult, confidence: float = WILSON_CONFIDENCE) -> bool:
    """Pooled failure rate over predicted-feasible cells is consistent with the guarantee.

    The check passes when the lower Wilson bound of the pooled failure rate
    does not exceed the guaranteed failure probability.
    """
    failures, trials = result.pooled_failures()
    if trials == 0:
        return True
    bound = 1.0 - g.success_probability_bound(result.grid.scenario.program, result.beta)
    low, _ = wilson_interval(failures, trials, confidence)
    return low <= bound


def threshold_curve(scenario: g.Scenario, profile: CoherenceProfile, ne_values,
                    beta_rule) -> list[tuple[int, int]]:
    return [(int(ne), g.max_recoverable_nx(scenario, profile, int(ne), beta_rule))
            for ne in ne_values]


@dataclass(frozen=True)
class NeRule:
    """How the interference sparsity grows with m: 'const', 'sqrt-m' or 'm-over'."""

    kind: str
    value: float = 0.0

    @classmethod
    def const(cls, value: float = 1e3):
        return cls("const", value)

    @classmethod
    def sqrt_m(cls):
        return cls("sqrt-m")

    @classmethod
    def m_over(cls, value: float = 1e5):
        return cls("m-over", value)

    def __call__(self, m: float) -> int:
        if self.kind == "const":
            return int(self.value)
        if self.kind == "sqrt-m":
            return int(math.floor(math.sqrt(m)))
        if self.kind == "m-over":
            return int(math.floor(m / self.value))
        raise ValueError(f"unknown ne rule {self.kind!r}")

    @property
    def label(self) -> str:
        return self.kind if self.kind == "sqrt-m" else f"{self.kind}-{self.value:g}"


SCALING_FAILURE = 1e-15
SCALING_SCENARIO = g.Scenario(x_known=False, e_known=True, x_random=True, e_random=False,
                              program=g.Program.L1)


def scaling_table(m_values, ne_rule: NeRule,
                  failure_probability: float = SCALING_FAILURE) -> list[tuple[int, int, int]]:
    """(m, max_nx, ne) for E known and arbitrary, X random, l1 recovery.

    Dictionaries are a unitary, maximally incoherent pair; beta is set so the
    guaranteed failure probability 3 exp(-beta) equals ``failure_probability``.
    """
    beta = math.log(3.0 / failure_probability)
    rows = []
    for m in m_values:
        m = int(m)
        ne = min(ne_rule(m), m)
        nx = g.max_recoverable_nx(SCALING_SCENARIO, unitary_pair_profile(m), ne, beta)
        rows.append((m, nx, ne))
    return rows


def curve_csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
